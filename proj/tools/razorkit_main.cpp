// Copyright 2026 The razorkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "razorkit/error.hpp"
#include "razorkit/graph.hpp"
#include "razorkit/hypertune.hpp"
#include "razorkit/model.hpp"
#include "razorkit/razor.hpp"
#include "razorkit/reliance.hpp"
#include "razorkit/sgns.hpp"
#include "razorkit/shapley.hpp"
#include "razorkit/synth.hpp"
#include "razorkit/transactions.hpp"
#include "razorkit/walker.hpp"

namespace rk = razorkit;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

/// Usage problems detected after parsing (bad combinations of values).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw rk::DataError("cannot open '" + path + "' for writing");
    stream_ = &file_;
  }
  std::ostream& operator*() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw rk::DataError("write failed");
  }

 private:
  std::ofstream file_;
  std::ostream* stream_ = &std::cout;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rk::DataError("cannot open '" + path + "'");
  return in;
}

rk::TransactionTable load_transactions(const std::string& path) {
  auto in = open_input(path);
  return rk::read_transactions(in);
}

rk::LabeledGraph load_graph(const std::string& path, bool directed) {
  auto in = open_input(path);
  return rk::read_edge_list(in, directed);
}

struct WalkFlags {
  std::string graph;
  bool directed = false;
  rk::WalkParams params;
  std::size_t epochs = 1;
};

void add_walk_options(CLI::App* cmd, WalkFlags& f) {
  cmd->add_option("--graph", f.graph, "Edge list: `src dst [weight]` per line")->required();
  cmd->add_flag("--directed", f.directed, "Treat edges as directed arcs");
  cmd->add_option("--p", f.params.p, "Return parameter")->capture_default_str();
  cmd->add_option("--q", f.params.q, "In-out parameter")->capture_default_str();
  cmd->add_option("--length,--walk-length", f.params.walk_length, "Nodes per walk")->capture_default_str();
  cmd->add_option("--walks-per-node", f.params.walks_per_node, "Walks per node and epoch")->capture_default_str();
  cmd->add_option("--epochs", f.epochs, "Epochs over the walk corpus")->capture_default_str();
}

void add_model_options(CLI::App* cmd, rk::ModelConfig& c) {
  cmd->add_option("--entity-dim", c.entity_dim)->capture_default_str();
  cmd->add_option("--product-dim", c.product_dim)->capture_default_str();
  cmd->add_option("--day-dim", c.day_dim)->capture_default_str();
  cmd->add_option("--hidden", c.hidden_sizes, "Hidden layer sizes, comma separated")->delimiter(',');
  cmd->add_option("--dropout", c.dropout, "Dropout rate on hidden layers")->capture_default_str();
  cmd->add_option("--batch-size", c.batch_size, "Minibatch size (0 = full batch)")->capture_default_str();
  cmd->add_option("--lr", c.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--alpha", c.early_stop_alpha, "Early stopping improvement factor")->capture_default_str();
  cmd->add_option("--patience", c.early_stop_k, "Early stopping patience k")->capture_default_str();
  cmd->add_option("--max-epochs", c.max_epochs)->capture_default_str();
}

rk::FeatureSet parse_features(const std::string& text) {
  try {
    return rk::FeatureSet::parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// ---- synth ----------------------------------------------------------------

struct SynthFlags {
  rk::MarketConfig market;
  std::string scheme = "planted";
  std::string out;
};

int run_synth(SynthFlags& f, std::uint64_t seed) {
  f.market.scheme = rk::parse_scheme(f.scheme);
  f.market.seed = seed;
  const auto table = rk::generate_market(f.market);
  Output out(f.out);
  rk::write_transactions(*out, table);
  out.finish();
  return kExitOk;
}

// ---- walks / embed --------------------------------------------------------

int run_walks(WalkFlags& f, std::uint64_t seed, const std::string& out_path) {
  f.params.seed = seed;
  f.params.validate();
  const auto lg = load_graph(f.graph, f.directed);
  const rk::FirstOrderTables tables(lg.graph);
  Output out(out_path);
  std::vector<rk::NodeId> walk;
  const std::size_t passes = f.epochs * f.params.walks_per_node;
  for (std::size_t pass = 0; pass < passes; ++pass) {
    rk::WalkStream stream(lg.graph, tables, f.params, pass);
    while (stream.next(walk)) {
      for (std::size_t i = 0; i < walk.size(); ++i) *out << (i ? " " : "") << lg.labels[walk[i]];
      *out << '\n';
    }
  }
  out.finish();
  return kExitOk;
}

struct EmbedFlags {
  rk::SgnsParams sgns;
  std::string out;
  std::string pca;
};

int run_embed(WalkFlags& w, EmbedFlags& f, std::uint64_t seed) {
  w.params.seed = seed;
  f.sgns.seed = seed;
  f.sgns.epochs = w.epochs;
  const auto lg = load_graph(w.graph, w.directed);
  const auto emb = rk::train_embeddings(lg.graph, w.params, f.sgns);
  Output out(f.out);
  rk::write_embeddings(*out, emb, lg.labels);
  out.finish();
  if (!f.pca.empty()) {
    Output pca(f.pca);
    const Eigen::MatrixX2d proj = rk::pca_2d(emb);
    (*pca).precision(9);
    *pca << "label\tx\ty\n";
    for (Eigen::Index i = 0; i < proj.rows(); ++i) {
      *pca << lg.labels[static_cast<std::size_t>(i)] << '\t' << proj(i, 0) << '\t' << proj(i, 1) << '\n';
    }
    pca.finish();
  }
  return kExitOk;
}

// ---- train ----------------------------------------------------------------

struct TrainFlags {
  std::string data;
  std::string features = "all";
  rk::ModelConfig model;
  std::string checkpoint;
  std::string report;
};

int run_train(TrainFlags& f, std::uint64_t seed) {
  f.model.seed = seed;
  const auto features = parse_features(f.features);
  const auto table = load_transactions(f.data);
  const auto result = rk::train(table, f.model, features);
  const auto baseline = rk::marginal_baseline_loss(table);
  if (!f.checkpoint.empty()) {
    std::ofstream ck(f.checkpoint, std::ios::binary);
    if (!ck) throw rk::DataError("cannot open '" + f.checkpoint + "' for writing");
    rk::save_checkpoint(ck, result.params, result.scaler);
    if (!ck) throw rk::DataError("write failed");
  }
  json j;
  j["schema"] = "razorkit.train/1";
  j["units"] = "nats";
  j["features"] = features.to_string();
  j["seed"] = seed;
  j["epochs"] = result.epochs;
  j["train_loss"] = result.train_loss;
  j["test_loss"] = result.test_loss;
  j["final_test_loss"] = result.final_test_loss;
  j["baseline_loss"] = baseline.loss;
  j["relative_improvement"] = (baseline.loss - result.final_test_loss) / baseline.loss;
  Output out(f.report);
  *out << j.dump(2) << '\n';
  out.finish();
  return kExitOk;
}

// ---- reliance -------------------------------------------------------------

struct RelianceFlags {
  std::string data;
  std::string universe = "all";
  rk::ModelConfig model = rk::reliance_model_config();
  std::size_t runs = 5;
  std::size_t workers = 1;
  bool relaxed = false;
  std::string report;
  std::string table;
};

int run_reliance(RelianceFlags& f, std::uint64_t seed) {
  rk::FeatureGameSpec spec;
  const auto universe = parse_features(f.universe);
  spec.universe.clear();
  for (rk::Feature feat : rk::kAllFeatures) {
    if (universe.contains(feat)) spec.universe.push_back(feat);
  }
  spec.dataset = std::make_shared<const rk::TransactionTable>(load_transactions(f.data));
  spec.config = f.model;
  spec.runs_per_subset = f.runs;
  spec.workers = f.workers;
  spec.base_seed = seed;
  const auto report = rk::run_reliance(spec, f.relaxed);
  Output out(f.report);
  rk::write_reliance_json(*out, report);
  out.finish();
  if (!f.table.empty()) {
    Output table(f.table);
    rk::write_gain_table(*table, report);
    table.finish();
  }
  return kExitOk;
}

// ---- shapley --------------------------------------------------------------

int run_shapley(const std::string& path, const std::string& out_path) {
  auto in = open_input(path);
  auto table = rk::read_game_table(in);
  rk::CoalitionalGame game = rk::table_game(std::move(table));
  const std::size_t n = game.player_count();
  json j;
  j["schema"] = "razorkit.shapley/1";
  j["players"] = n;
  j["grand_value"] = game.value(game.grand_coalition());
  const bool exhaustive = n <= rk::kMaxExhaustivePlayers;
  j["exact_phi"] = exhaustive ? json(rk::exact_shapley(game)) : json(nullptr);
  const auto topk = rk::topk_shapley(game);
  json gains = json::array();
  for (const auto& row : topk.gains) {
    json r = json::array();
    for (double g : row) r.push_back(std::isfinite(g) ? json(g) : json(nullptr));
    gains.push_back(r);
  }
  j["topk"] = {{"order", topk.order}, {"phi", topk.phi}, {"marginal_gains", gains}};
  if (exhaustive) {
    j["monotone"] = rk::is_monotone(game);
    j["submodular"] = rk::is_submodular(game);
    const auto relaxed = rk::check_relaxed_topk_efficiency(game, topk);
    j["relaxed_efficiency"] = {
        {"holds", relaxed.holds}, {"best_value", relaxed.best_value}, {"top_sum", relaxed.top_sum}};
  } else {
    j["monotone"] = j["submodular"] = j["relaxed_efficiency"] = nullptr;
  }
  Output out(out_path);
  *out << j.dump(2) << '\n';
  out.finish();
  return kExitOk;
}

// ---- razor ----------------------------------------------------------------

int run_razor(const std::string& path, const std::string& out_path) {
  auto in = open_input(path);
  const auto dist = rk::read_pair_distribution(in);
  if (dist.free_pairs() > rk::kMaxEnumerablePairs) {
    throw rk::DataError("razor: " + std::to_string(dist.free_pairs()) + " off-diagonal pairs exceed the limit of " +
                        std::to_string(rk::kMaxEnumerablePairs));
  }
  const auto oracle = rk::razor_entropy_oracle(dist);
  const auto formula = rk::razor_entropy_formula(dist);
  json pairs = json::array();
  for (std::size_t i = 0; i < dist.pairs().size(); ++i) {
    const auto& pm = dist.pairs()[i];
    pairs.push_back({{"i", pm.first}, {"j", pm.second}, {"p", pm.p}, {"choice", oracle.choice[i]}});
  }
  json j;
  j["schema"] = "razorkit.razor/1";
  j["units"] = "nats";
  j["value"] = oracle.value;
  j["formula_value"] = formula.value;
  j["support_size"] = dist.support_size();
  j["encoding"] = pairs;
  j["q"] = oracle.q;
  Output out(out_path);
  *out << j.dump(2) << '\n';
  out.finish();
  return kExitOk;
}

// ---- tune -----------------------------------------------------------------

struct TuneFlags {
  std::string data;
  std::string features = "all";
  std::size_t trials = 30;
  rk::TpeSettings tpe;
  std::size_t max_epochs = 300;
  std::size_t patience = 10;
  std::string out;
};

int run_tune(TuneFlags& f, std::uint64_t seed) {
  const auto features = parse_features(f.features);
  const auto table = load_transactions(f.data);
  const std::vector<std::string> batch_sizes = {"256", "512", "1024", "4096"};
  auto objective = [&](rk::Trial& t) {
    rk::ModelConfig c;
    c.entity_dim = static_cast<std::size_t>(t.suggest_int("entity_dim", 2, 32, true));
    c.product_dim = static_cast<std::size_t>(t.suggest_int("product_dim", 1, 16, true));
    c.day_dim = static_cast<std::size_t>(t.suggest_int("day_dim", 1, 4));
    const auto layers = t.suggest_int("n_layers", 0, 2);
    c.hidden_sizes.clear();
    for (std::int64_t l = 0; l < layers; ++l) {
      c.hidden_sizes.push_back(static_cast<std::size_t>(t.suggest_int("hidden_" + std::to_string(l), 8, 128, true)));
    }
    c.dropout = t.suggest_float("dropout", 0.0, 0.9);
    c.batch_size = std::stoul(t.suggest_categorical("batch_size", batch_sizes));
    c.learning_rate = t.suggest_float("lr", 1e-4, 1e-2, true);
    c.max_epochs = f.max_epochs;
    c.early_stop_k = f.patience;
    c.seed = rk::derive_seed(seed, {0x70e, t.number()});
    return rk::train(table, c, features).final_test_loss;
  };
  const auto result = rk::optimize(objective, f.trials, seed, f.tpe);
  Output out(f.out);
  rk::write_history_json(*out, result);
  out.finish();
  return kExitOk;
}

void report_error(const char* kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"razorkit: walks, embeddings, counterpart-choice models and attribution"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI file with one [subcommand] section of option = value lines");
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Base seed")->capture_default_str();

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic transaction market");
  synth_cmd->add_option("--n-entities", synth.market.n_entities)->capture_default_str();
  synth_cmd->add_option("--n-products", synth.market.n_products)->capture_default_str();
  synth_cmd->add_option("--n-transactions", synth.market.n_transactions)->capture_default_str();
  synth_cmd->add_option("--n-days", synth.market.n_days)->capture_default_str();
  synth_cmd->add_option("--scheme", synth.scheme, "planted | product_free | one_hot | uniform")
      ->check(CLI::IsMember({"planted", "product_free", "one_hot", "uniform"}))
      ->capture_default_str();
  synth_cmd->add_option("--entity-strength", synth.market.entity_strength)->capture_default_str();
  synth_cmd->add_option("--product-strength", synth.market.product_strength)->capture_default_str();
  synth_cmd->add_option("--product-skew", synth.market.product_skew)->capture_default_str();
  synth_cmd->add_option("--price-volatility", synth.market.price_volatility)->capture_default_str();
  synth_cmd->add_option("--spread-volatility", synth.market.spread_volatility)->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output path (default stdout)");

  WalkFlags walks;
  std::string walks_out;
  auto* walks_cmd = app.add_subcommand("walks", "Emit second-order random walks");
  add_walk_options(walks_cmd, walks);
  walks_cmd->add_option("--out", walks_out, "Output path (default stdout)");

  WalkFlags embed_walks;
  EmbedFlags embed;
  auto* embed_cmd = app.add_subcommand("embed", "Train skip-gram node embeddings on streamed walks");
  add_walk_options(embed_cmd, embed_walks);
  embed_cmd->add_option("--dim", embed.sgns.dim)->capture_default_str();
  embed_cmd->add_option("--window", embed.sgns.window)->capture_default_str();
  embed_cmd->add_option("--negatives", embed.sgns.negatives)->capture_default_str();
  embed_cmd->add_option("--lr", embed.sgns.learning_rate)->capture_default_str();
  embed_cmd->add_option("--workers", embed.sgns.workers)->capture_default_str();
  embed_cmd->add_option("--out", embed.out, "Embedding dump path (default stdout)");
  embed_cmd->add_option("--pca", embed.pca, "Optional 2-D projection output (TSV)");

  TrainFlags trainf;
  auto* train_cmd = app.add_subcommand("train", "Train the counterpart-choice model");
  train_cmd->add_option("--data", trainf.data, "Transaction table")->required();
  train_cmd->add_option("--features", trainf.features, "Comma-separated feature names or `all`")
      ->capture_default_str();
  add_model_options(train_cmd, trainf.model);
  train_cmd->add_option("--checkpoint", trainf.checkpoint, "Write the trained model here");
  train_cmd->add_option("--report", trainf.report, "JSON report path (default stdout)");

  RelianceFlags rel;
  auto* rel_cmd = app.add_subcommand("reliance", "Top-k Shapley attribution over retrained feature subsets");
  rel_cmd->add_option("--data", rel.data, "Transaction table")->required();
  rel_cmd->add_option("--features", rel.universe, "Feature universe")->capture_default_str();
  add_model_options(rel_cmd, rel.model);
  rel_cmd->add_option("--runs", rel.runs, "Trainings averaged per subset")->capture_default_str();
  rel_cmd->add_option("--workers", rel.workers, "Concurrent trainings")->capture_default_str();
  rel_cmd->add_flag("--relaxed-check", rel.relaxed, "Also train every subset and test relaxed efficiency");
  rel_cmd->add_option("--report", rel.report, "JSON report path (default stdout)");
  rel_cmd->add_option("--table", rel.table, "Marginal-gain TSV path");

  std::string game_path, shapley_out;
  auto* shapley_cmd = app.add_subcommand("shapley", "Attribute a game given as a subset-value table");
  shapley_cmd->add_option("game", game_path, "Table of `bitmask value` lines")->required();
  shapley_cmd->add_option("--out", shapley_out, "Report path (default stdout)");

  std::string pairs_path, razor_out;
  auto* razor_cmd = app.add_subcommand("razor", "Razor entropy of a pair distribution");
  razor_cmd->add_option("pairs", pairs_path, "Table of `i j p` lines")->required();
  razor_cmd->add_option("--out", razor_out, "Report path (default stdout)");

  TuneFlags tune;
  auto* tune_cmd = app.add_subcommand("tune", "TPE search over model hyperparameters");
  tune_cmd->add_option("--data", tune.data, "Transaction table")->required();
  tune_cmd->add_option("--features", tune.features)->capture_default_str();
  tune_cmd->add_option("--trials", tune.trials)->capture_default_str();
  tune_cmd->add_option("--gamma", tune.tpe.gamma)->capture_default_str();
  tune_cmd->add_option("--candidates", tune.tpe.n_candidates)->capture_default_str();
  tune_cmd->add_option("--startup", tune.tpe.n_startup)->capture_default_str();
  tune_cmd->add_option("--max-epochs", tune.max_epochs)->capture_default_str();
  tune_cmd->add_option("--patience", tune.patience)->capture_default_str();
  tune_cmd->add_option("--out", tune.out, "Trial history path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kExitUsage;
  }

  try {
    if (*synth_cmd) return run_synth(synth, seed);
    if (*walks_cmd) return run_walks(walks, seed, walks_out);
    if (*embed_cmd) return run_embed(embed_walks, embed, seed);
    if (*train_cmd) return run_train(trainf, seed);
    if (*rel_cmd) return run_reliance(rel, seed);
    if (*shapley_cmd) return run_shapley(game_path, shapley_out);
    if (*razor_cmd) return run_razor(pairs_path, razor_out);
    if (*tune_cmd) return run_tune(tune, seed);
  } catch (const UsageError& e) {
    report_error("usage", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    report_error("usage", e.what());
    return kExitUsage;
  } catch (const rk::DataError& e) {
    report_error("data", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    report_error("runtime", e.what());
    return kExitData;
  }
  return kExitUsage;
}
