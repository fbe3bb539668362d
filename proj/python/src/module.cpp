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

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "razorkit/error.hpp"
#include "razorkit/graph.hpp"
#include "razorkit/hypertune.hpp"
#include "razorkit/model.hpp"
#include "razorkit/razor.hpp"
#include "razorkit/reliance.hpp"
#include "razorkit/sgns.hpp"
#include "razorkit/shapley.hpp"
#include "razorkit/synth.hpp"
#include "razorkit/walker.hpp"

namespace py = pybind11;
using namespace razorkit;

namespace {

using Table = std::shared_ptr<TransactionTable>;

PairDistribution to_pairs(const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& entries) {
  std::vector<PairMass> masses;
  masses.reserve(entries.size());
  for (const auto& [i, j, p] : entries) masses.push_back({i, j, p});
  return PairDistribution::from_entries(std::move(masses));
}

py::dict razor_dict(const RazorResult& r) {
  py::dict d;
  d["value"] = r.value;
  d["choice"] = r.choice;
  d["q"] = r.q;
  return d;
}

CoalitionalGame to_game(std::size_t players, const std::function<double(Coalition)>& fn) {
  return CoalitionalGame(players, fn);
}

CsrGraph to_graph(const std::vector<std::tuple<NodeId, NodeId, double>>& edges, std::size_t n, bool directed) {
  std::vector<WeightedEdge> list;
  list.reserve(edges.size());
  for (const auto& [u, v, w] : edges) list.push_back({u, v, w});
  return CsrGraph::from_edges(list, n, directed);
}

ModelConfig model_config(const py::dict& overrides, ModelConfig c = {}) {
  for (auto [key, value] : overrides) {
    const auto k = key.cast<std::string>();
    if (k == "entity_dim") c.entity_dim = value.cast<std::size_t>();
    else if (k == "product_dim") c.product_dim = value.cast<std::size_t>();
    else if (k == "day_dim") c.day_dim = value.cast<std::size_t>();
    else if (k == "hidden_sizes") c.hidden_sizes = value.cast<std::vector<std::size_t>>();
    else if (k == "dropout") c.dropout = value.cast<double>();
    else if (k == "batch_size") c.batch_size = value.cast<std::size_t>();
    else if (k == "learning_rate") c.learning_rate = value.cast<double>();
    else if (k == "early_stop_alpha") c.early_stop_alpha = value.cast<double>();
    else if (k == "early_stop_k") c.early_stop_k = value.cast<std::size_t>();
    else if (k == "max_epochs") c.max_epochs = value.cast<std::size_t>();
    else if (k == "seed") c.seed = value.cast<std::uint64_t>();
    else throw py::key_error("unknown model option '" + k + "'");
  }
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_razorkit, m) {
  m.doc() = "Counterpart-choice modeling, razor entropy and feature attribution.";
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  // Razor entropy.
  m.def(
      "razor_entropy",
      [](const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& pairs) {
        return razor_dict(razor_entropy_oracle(to_pairs(pairs)));
      },
      py::arg("pairs"), "Minimum choice entropy (nats) over deterministic encodings of `(i, j, p)` pairs.");
  m.def(
      "razor_formula",
      [](const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& pairs) {
        return razor_dict(razor_entropy_formula(to_pairs(pairs)));
      },
      py::arg("pairs"));
  m.def(
      "razor_objective",
      [](const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& pairs, const std::vector<double>& q) {
        return razor_objective(to_pairs(pairs), q);
      },
      py::arg("pairs"), py::arg("q"));

  // Coalitional games; `value` maps a player bitmask to a real with value(0) == 0.
  m.def(
      "exact_shapley",
      [](std::size_t players, const std::function<double(Coalition)>& value) {
        auto g = to_game(players, value);
        return exact_shapley(g);
      },
      py::arg("players"), py::arg("value"));
  m.def(
      "topk_shapley",
      [](std::size_t players, const std::function<double(Coalition)>& value) {
        auto g = to_game(players, value);
        const auto a = topk_shapley(g);
        py::dict d;
        d["phi"] = a.phi;
        d["order"] = a.order;
        d["gains"] = a.gains;
        d["evaluations"] = g.evaluation_count();
        return d;
      },
      py::arg("players"), py::arg("value"));
  m.def(
      "is_submodular",
      [](std::size_t players, const std::function<double(Coalition)>& value) {
        auto g = to_game(players, value);
        return is_submodular(g);
      },
      py::arg("players"), py::arg("value"));
  m.def(
      "is_monotone",
      [](std::size_t players, const std::function<double(Coalition)>& value) {
        auto g = to_game(players, value);
        return is_monotone(g);
      },
      py::arg("players"), py::arg("value"));

  // Walks and embeddings on an edge list of `(src, dst, weight)`.
  m.def(
      "random_walks",
      [](const std::vector<std::tuple<NodeId, NodeId, double>>& edges, std::size_t nodes, double p, double q,
         std::size_t walk_length, std::size_t walks_per_node, std::uint64_t seed, bool directed) {
        const auto g = to_graph(edges, nodes, directed);
        const FirstOrderTables tables(g);
        WalkParams params{p, q, walk_length, walks_per_node, seed};
        params.validate();
        std::vector<std::vector<NodeId>> walks;
        std::vector<NodeId> walk;
        for (std::uint64_t pass = 0; pass < walks_per_node; ++pass) {
          WalkStream stream(g, tables, params, pass);
          while (stream.next(walk)) walks.push_back(walk);
        }
        return walks;
      },
      py::arg("edges"), py::arg("nodes"), py::arg("p") = 1.0, py::arg("q") = 1.0, py::arg("walk_length") = 80,
      py::arg("walks_per_node") = 10, py::arg("seed") = 0, py::arg("directed") = false);
  m.def(
      "train_embeddings",
      [](const std::vector<std::tuple<NodeId, NodeId, double>>& edges, std::size_t nodes, std::size_t dim,
         std::size_t window, std::size_t negatives, std::size_t epochs, double p, double q, std::size_t walk_length,
         std::size_t walks_per_node, std::uint64_t seed, bool directed) {
        const auto g = to_graph(edges, nodes, directed);
        WalkParams walk{p, q, walk_length, walks_per_node, seed};
        SgnsParams params;
        params.dim = dim;
        params.window = window;
        params.negatives = negatives;
        params.epochs = epochs;
        params.seed = seed;
        Embeddings emb;
        {
          py::gil_scoped_release release;
          emb = train_embeddings(g, walk, params);
        }
        Eigen::MatrixXd out(emb.node_count(), emb.dim());
        for (NodeId v = 0; v < emb.node_count(); ++v) {
          for (std::size_t k = 0; k < emb.dim(); ++k) out(v, static_cast<Eigen::Index>(k)) = emb.in(v)[k];
        }
        return out;
      },
      py::arg("edges"), py::arg("nodes"), py::arg("dim") = 128, py::arg("window") = 10, py::arg("negatives") = 5,
      py::arg("epochs") = 1, py::arg("p") = 1.0, py::arg("q") = 1.0, py::arg("walk_length") = 80,
      py::arg("walks_per_node") = 10, py::arg("seed") = 0, py::arg("directed") = false,
      "Returns the input vectors as a (nodes, dim) array.");
  m.def("pca_2d", [](const Eigen::MatrixXd& points) { return Eigen::MatrixXd(pca_2d(points)); }, py::arg("points"));

  // Transactions.
  py::class_<TransactionTable, Table>(m, "TransactionTable")
      .def_readonly("n_entities", &TransactionTable::n_entities)
      .def_readonly("n_products", &TransactionTable::n_products)
      .def("__len__", [](const TransactionTable& t) { return t.records.size(); })
      .def(
          "pairs",
          [](const TransactionTable& t) {
            std::vector<std::pair<EntityId, EntityId>> out;
            out.reserve(t.records.size());
            for (const auto& r : t.records) out.emplace_back(r.buyer, r.seller);
            return out;
          },
          "(buyer, seller) per record.")
      .def("to_csv",
           [](const TransactionTable& t) {
             std::ostringstream out;
             write_transactions(out, t);
             return out.str();
           })
      .def_static(
          "from_csv",
          [](const std::string& text) {
            std::istringstream in(text);
            return std::make_shared<TransactionTable>(read_transactions(in));
          },
          py::arg("text"))
      .def_static(
          "load",
          [](const std::string& path) {
            std::ifstream in(path);
            if (!in) throw DataError("cannot open " + path);
            return std::make_shared<TransactionTable>(read_transactions(in));
          },
          py::arg("path"));

  m.def(
      "generate_market",
      [](std::size_t n_entities, std::size_t n_products, std::size_t n_transactions, std::size_t n_days,
         const std::string& scheme, std::uint64_t seed) {
        MarketConfig c;
        c.n_entities = n_entities;
        c.n_products = n_products;
        c.n_transactions = n_transactions;
        c.n_days = n_days;
        c.scheme = parse_scheme(scheme);
        c.seed = seed;
        return std::make_shared<TransactionTable>(generate_market(c));
      },
      py::arg("n_entities") = 19, py::arg("n_products") = 9, py::arg("n_transactions") = 15000,
      py::arg("n_days") = 230, py::arg("scheme") = "planted", py::arg("seed") = 0);

  m.def(
      "train",
      [](const Table& table, const std::string& features, const py::dict& config) {
        const ModelConfig cfg = model_config(config);
        const FeatureSet fs = FeatureSet::parse(features);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(*table, cfg, fs);
        }
        py::dict d;
        d["features"] = fs.to_string();
        d["epochs"] = r.epochs;
        d["train_loss"] = r.train_loss;
        d["test_loss"] = r.test_loss;
        d["final_test_loss"] = r.final_test_loss;
        return d;
      },
      py::arg("table"), py::arg("features") = "all", py::arg("config") = py::dict(),
      "Trains the counterpart-choice model; `config` overrides ModelConfig fields by name.");
  m.def(
      "marginal_baseline_loss", [](const Table& table) { return marginal_baseline_loss(*table).loss; },
      py::arg("table"));

  m.def(
      "run_reliance",
      [](const Table& table, const std::string& features, std::size_t runs, std::size_t workers,
         std::uint64_t seed, const py::dict& config) {
        FeatureGameSpec spec;
        spec.dataset = table;
        spec.config = model_config(config, reliance_model_config());
        const FeatureSet fs = FeatureSet::parse(features);
        spec.universe.clear();
        for (Feature f : kAllFeatures) {
          if (fs.contains(f)) spec.universe.push_back(f);
        }
        spec.runs_per_subset = runs;
        spec.workers = workers;
        spec.base_seed = seed;
        RelianceReport r;
        {
          py::gil_scoped_release release;
          r = run_reliance(spec);
        }
        py::dict d;
        std::vector<std::string> names, order;
        py::dict phi;
        for (std::size_t i = 0; i < r.universe.size(); ++i) {
          names.emplace_back(feature_name(r.universe[i]));
          phi[py::str(names.back())] = r.phi[i];
        }
        for (std::size_t i : r.order) order.push_back(names[i]);
        d["features"] = names;
        d["order"] = order;
        d["phi"] = phi;
        d["gains"] = r.gains;
        d["empty_loss"] = r.empty_loss;
        d["full_value"] = r.full_value;
        d["baseline_loss"] = r.baseline_loss;
        d["evaluations"] = r.evaluations;
        return d;
      },
      py::arg("table"), py::arg("features") = "all", py::arg("runs") = 5, py::arg("workers") = 1,
      py::arg("seed") = 0, py::arg("config") = py::dict());

  // Define-by-run TPE.
  py::class_<Trial>(m, "Trial")
      .def_property_readonly("number", &Trial::number)
      .def("suggest_float", &Trial::suggest_float, py::arg("name"), py::arg("low"), py::arg("high"),
           py::arg("log") = false)
      .def("suggest_int", &Trial::suggest_int, py::arg("name"), py::arg("low"), py::arg("high"),
           py::arg("log") = false)
      .def("suggest_categorical", &Trial::suggest_categorical, py::arg("name"), py::arg("choices"));

  m.def(
      "optimize",
      [](const py::function& objective, std::size_t n_trials, std::uint64_t seed, double gamma,
         std::size_t n_candidates, std::size_t n_startup) {
        TpeSettings st{gamma, n_candidates, n_startup};
        const auto r = optimize(
            [&](Trial& trial) {
              return objective(py::cast(&trial, py::return_value_policy::reference)).cast<double>();
            },
            n_trials, seed, st);
        py::list trials;
        for (const auto& t : r.history.trials()) {
          py::dict row;
          row["params"] = t.params;
          row["value"] = t.value;
          row["failed"] = t.failed;
          trials.append(row);
        }
        py::dict d;
        d["best_value"] = r.best_value;
        d["best_params"] = r.best_params;
        d["best_trial"] = r.best_trial;
        d["trials"] = trials;
        return d;
      },
      py::arg("objective"), py::arg("n_trials"), py::arg("seed") = 0, py::arg("gamma") = 0.25,
      py::arg("n_candidates") = 24, py::arg("n_startup") = 10,
      "Minimizes `objective(trial)`; categorical values in `params` are category indices.");
}
