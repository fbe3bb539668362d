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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "model_fixtures.hpp"
#include "razorkit/error.hpp"
#include "razorkit/model.hpp"
#include "razorkit/synth.hpp"

using namespace razorkit;
using razorkit::testing::check_gradient;
using razorkit::testing::random_gradient_problem;
using razorkit::testing::small_market;

namespace {

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

TransactionRecord record(EntityId buyer, EntityId seller, std::size_t n_entities) {
  TransactionRecord r;
  r.buyer = buyer;
  r.seller = seller;
  r.dealer_spreads.assign(n_entities, 50.0);
  r.price = 100.0;
  r.market_price = 100.0;
  return r;
}

/// Bias-only model (no features, no hidden layer) with the given output biases.
ModelParams bias_model(const std::vector<double>& bias) {
  ModelConfig cfg;
  cfg.hidden_sizes.clear();
  cfg.dropout = 0.0;
  ModelParams p(cfg, FeatureSet{}, bias.size(), 1);
  auto b = p.view(p.bias_block(0));
  for (std::size_t i = 0; i < bias.size(); ++i) b(0, static_cast<Eigen::Index>(i)) = bias[i];
  return p;
}

}  // namespace

TEST_SUITE("featurize") {
  TEST_CASE("chooser, target and direction bit") {
    const auto table = small_market(5, 2, 50, 1);
    const auto idx = iota_indices(table.records.size());
    const auto scaler = FeatureScaler::fit(table.records, idx, 5, 2);
    const auto& r = table.records[0];
    const auto buyer_view = featurize(r, Side::kBuyer, FeatureSet::all(), scaler);
    CHECK(buyer_view.chooser == r.buyer);
    CHECK(buyer_view.target == r.seller);
    CHECK(buyer_view.input.entity == static_cast<std::int32_t>(r.buyer));
    CHECK(buyer_view.input.numeric[0] == 1.0);
    const auto seller_view = featurize(r, Side::kSeller, FeatureSet::all(), scaler);
    CHECK(seller_view.chooser == r.seller);
    CHECK(seller_view.target == r.buyer);
    CHECK(seller_view.input.numeric[0] == 0.0);
    CHECK(buyer_view.input.numeric.size() == numeric_width(FeatureSet::all(), 5));
    CHECK(numeric_width(FeatureSet::all(), 5) == 5 + 5);
  }

  TEST_CASE("empty feature set gives an empty bundle") {
    const auto table = small_market(4, 2, 20, 2);
    const auto scaler = FeatureScaler::fit(table.records, iota_indices(20), 4, 2);
    const auto f = featurize(table.records[3], Side::kSeller, FeatureSet{}, scaler);
    CHECK(f.input.entity == -1);
    CHECK(f.input.product == -1);
    CHECK(f.input.day == -1);
    CHECK(f.input.numeric.empty());
    CHECK(f.target == table.records[3].buyer);
  }

  TEST_CASE("training-split standardization has zero mean and unit variance per product") {
    const auto table = small_market(6, 3, 600, 3);
    const auto split = chronological_split(table.records);
    const auto scaler = FeatureScaler::fit(table.records, split.train, 6, 3);
    const FeatureSet fs = FeatureSet::of({Feature::kPrice, Feature::kMarketPrice});
    for (std::uint32_t product = 0; product < 3; ++product) {
      double sum[2] = {0, 0}, sq[2] = {0, 0}, n = 0;
      for (std::size_t i : split.train) {
        if (table.records[i].product != product) continue;
        const auto f = featurize(table.records[i], Side::kBuyer, fs, scaler);
        for (int k = 0; k < 2; ++k) {
          sum[k] += f.input.numeric[k];
          sq[k] += f.input.numeric[k] * f.input.numeric[k];
        }
        n += 1;
      }
      REQUIRE(n > 1);
      for (int k = 0; k < 2; ++k) {
        CHECK(std::abs(sum[k] / n) < 1e-9);
        CHECK(std::abs(sq[k] / n - 1.0) < 1e-9);
      }
    }
  }

  TEST_CASE("unknown ids are rejected") {
    const auto table = small_market(4, 2, 20, 4);
    const auto scaler = FeatureScaler::fit(table.records, iota_indices(20), 4, 2);
    auto r = table.records[0];
    r.product = 7;
    CHECK_THROWS_AS(featurize(r, Side::kBuyer, FeatureSet::all(), scaler), std::out_of_range);
    r = table.records[0];
    r.seller = 9;
    CHECK_THROWS_AS(featurize(r, Side::kBuyer, FeatureSet::all(), scaler), std::out_of_range);
  }
}

TEST_SUITE("forward") {
  TEST_CASE("masked simplex output") {
    Rng rng(50);
    for (int trial = 0; trial < 50; ++trial) {
      auto p = random_gradient_problem(rng);
      const auto& r = p.table.records[0];
      for (Side s : {Side::kBuyer, Side::kSeller}) {
        const auto f = featurize(r, s, p.params.features(), p.scaler);
        Rng drop(1);
        const auto probs = forward(p.params, f.input, f.chooser, false, drop);
        CHECK(probs[f.chooser] == 0.0);
        CHECK(std::abs(std::accumulate(probs.begin(), probs.end(), 0.0) - 1.0) < 1e-9);
      }
    }
  }

  TEST_CASE("zero weights give a uniform choice over the others") {
    const ModelParams p = bias_model({0.0, 0.0, 0.0});
    Rng rng(1);
    const auto probs = forward(p, ModelInput{}, 1, false, rng);
    CHECK(probs == std::vector<double>{0.5, 0.0, 0.5});
  }

  TEST_CASE("dropout off makes train and eval modes identical") {
    const auto table = small_market(5, 2, 30, 5);
    const auto scaler = FeatureScaler::fit(table.records, iota_indices(30), 5, 2);
    ModelConfig cfg;
    cfg.dropout = 0.0;
    cfg.hidden_sizes = {7, 4};
    ModelParams p(cfg, FeatureSet::all(), 5, 2);
    Rng rng(6);
    p.initialize(rng);
    const auto f = featurize(table.records[2], Side::kBuyer, FeatureSet::all(), scaler);
    CHECK(forward(p, f.input, f.chooser, true, rng) == forward(p, f.input, f.chooser, false, rng));
  }

  TEST_CASE("dropout in train mode perturbs the output but keeps the mask") {
    const auto table = small_market(5, 2, 30, 5);
    const auto scaler = FeatureScaler::fit(table.records, iota_indices(30), 5, 2);
    ModelConfig cfg;
    cfg.dropout = 0.5;
    cfg.hidden_sizes = {20};
    ModelParams p(cfg, FeatureSet::all(), 5, 2);
    Rng rng(7);
    p.initialize(rng);
    const auto f = featurize(table.records[2], Side::kBuyer, FeatureSet::all(), scaler);
    const auto eval = forward(p, f.input, f.chooser, false, rng);
    const auto train = forward(p, f.input, f.chooser, true, rng);
    CHECK(train != eval);
    CHECK(train[f.chooser] == 0.0);
  }
}

TEST_SUITE("razor loss") {
  TEST_CASE("two entities force the choice") {
    TransactionTable t;
    t.n_entities = 2;
    t.n_products = 1;
    t.records = {record(0, 1, 2), record(1, 0, 2)};
    const auto idx = iota_indices(2);
    const auto scaler = FeatureScaler::fit(t.records, idx, 2, 1);
    ModelConfig cfg;
    cfg.hidden_sizes = {3};
    ModelParams p(cfg, FeatureSet::all(), 2, 1);
    Rng rng(8);
    p.initialize(rng);
    const auto data = encode(t.records, idx, FeatureSet::all(), scaler);
    CHECK(razor_loss(p, data, idx, false, rng).loss == 0.0);
  }

  TEST_CASE("max of the two directions") {
    // Chooser 0 gives entity 1 probability 1/4; chooser 1 gives entity 0 probability 1/2.
    const ModelParams p = bias_model({std::log(3.0), 0.0, std::log(3.0)});
    TransactionTable t;
    t.n_entities = 3;
    t.n_products = 1;
    t.records = {record(0, 1, 3)};
    const auto idx = iota_indices(1);
    const auto data = encode(t.records, idx, FeatureSet{}, FeatureScaler::fit(t.records, idx, 3, 1));
    Rng rng(1);
    const auto loss = razor_loss(p, data, idx, false, rng);
    CHECK(loss.loss == doctest::Approx(-std::log(0.5)).epsilon(1e-14));
    CHECK(loss.directions[0] == Side::kSeller);

    // Only the winning row is differentiated: softmax(chooser 1) - onehot(0) = (-1/2, 0, 1/2).
    const auto g = razor_gradient(p, data, idx, false, rng);
    const auto& b = p.bias_block(0);
    CHECK(g.grad[b.offset + 0] == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(g.grad[b.offset + 1] == doctest::Approx(0.0));
    CHECK(g.grad[b.offset + 2] == doctest::Approx(0.5).epsilon(1e-14));
  }

  TEST_CASE("ties go to the buyer") {
    const ModelParams p = bias_model({0.0, 0.0, 0.0});
    TransactionTable t;
    t.n_entities = 3;
    t.n_products = 1;
    t.records = {record(2, 0, 3)};
    const auto idx = iota_indices(1);
    const auto data = encode(t.records, idx, FeatureSet{}, FeatureScaler::fit(t.records, idx, 3, 1));
    Rng rng(1);
    CHECK(razor_loss(p, data, idx, false, rng).directions[0] == Side::kBuyer);
  }

  TEST_CASE("direction-frozen cross-entropy equals the razor loss") {
    Rng rng(51);
    for (int trial = 0; trial < 200; ++trial) {
      auto p = random_gradient_problem(rng);
      Rng unused(0);
      const auto loss = razor_loss(p.params, p.data, p.indices, false, unused);
      const double ce = fixed_direction_cross_entropy(p.params, p.data, p.indices, loss.directions);
      CHECK(std::abs(loss.loss - ce) <= 1e-12);
      CHECK(loss.loss == doctest::Approx(std::accumulate(loss.item_losses.begin(), loss.item_losses.end(), 0.0) / static_cast<double>(loss.item_losses.size())));
    }
  }

  TEST_CASE("swapping buyer and seller leaves the loss unchanged without the direction bit") {
    Rng rng(52);
    auto table = small_market(6, 2, 40, 9);
    const auto idx = iota_indices(40);
    const auto scaler = FeatureScaler::fit(table.records, idx, 6, 2);
    FeatureSet fs = FeatureSet::all();
    fs.erase(Feature::kDirection);
    ModelConfig cfg;
    cfg.hidden_sizes = {8};
    ModelParams p(cfg, fs, 6, 2);
    p.initialize(rng);
    const double before = razor_loss(p, encode(table.records, idx, fs, scaler), idx, false, rng).loss;
    for (auto& r : table.records) std::swap(r.buyer, r.seller);
    const double after = razor_loss(p, encode(table.records, idx, fs, scaler), idx, false, rng).loss;
    CHECK(before == doctest::Approx(after).epsilon(1e-14));
  }
}

TEST_SUITE("gradient") {
  TEST_CASE("analytic gradients match central differences") {
    Rng rng(53);
    std::size_t skipped = 0, checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
      auto p = random_gradient_problem(rng);
      const auto r = check_gradient(p, 1e-4);
      CHECK(r.max_rel_error < 1e-4);
      skipped += r.skipped;
      checked += r.checked;
    }
    CHECK(static_cast<double>(skipped) < 0.02 * static_cast<double>(checked));
  }

  TEST_CASE("the losing chooser's embedding gets no gradient") {
    Rng rng(54);
    for (int trial = 0; trial < 20; ++trial) {
      const auto table = small_market(5, 2, 1, rng());
      const auto idx = iota_indices(1);
      const auto scaler = FeatureScaler::fit(table.records, idx, 5, 2);
      const FeatureSet fs = FeatureSet::of({Feature::kEntity});
      ModelConfig cfg;
      cfg.hidden_sizes = {6};
      ModelParams p(cfg, fs, 5, 2);
      p.initialize(rng);
      const auto data = encode(table.records, idx, fs, scaler);
      const auto g = razor_gradient(p, data, idx, false, rng);
      const auto& r = table.records[0];
      const EntityId loser = g.loss.directions[0] == Side::kBuyer ? r.seller : r.buyer;
      const EntityId winner = g.loss.directions[0] == Side::kBuyer ? r.buyer : r.seller;
      const auto& eb = p.entity_block();
      double loser_norm = 0.0, winner_norm = 0.0;
      for (std::size_t c = 0; c < eb.cols; ++c) {
        loser_norm += std::abs(g.grad[eb.offset + loser * eb.cols + c]);
        winner_norm += std::abs(g.grad[eb.offset + winner * eb.cols + c]);
      }
      CHECK(loser_norm == 0.0);
      CHECK(winner_norm > 0.0);
    }
  }

  TEST_CASE("duplicating the batch leaves the gradient unchanged") {
    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
      auto p = random_gradient_problem(rng);
      Rng unused(0);
      const auto once = razor_gradient(p.params, p.data, p.indices, false, unused);
      auto doubled = p.indices;
      doubled.insert(doubled.end(), p.indices.begin(), p.indices.end());
      const auto twice = razor_gradient(p.params, p.data, doubled, false, unused);
      for (std::size_t i = 0; i < once.grad.size(); ++i) {
        CHECK(twice.grad[i] == doctest::Approx(once.grad[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_SUITE("adam") {
  TEST_CASE("first step moves each coordinate by lr against the gradient sign") {
    std::vector<double> theta = {1.0, -2.0, 0.5, 3.0};
    const std::vector<double> g = {0.3, -5.0, 1e-3, -2e-2};
    AdamState st(4);
    const auto before = theta;
    adam_step(theta, g, st, 0.01);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs((before[i] - theta[i]) - 0.01 * (g[i] > 0 ? 1.0 : -1.0)) < 1e-6);
    }
    CHECK(st.step == 1);
  }

  TEST_CASE("zero gradient changes nothing; identical states evolve identically") {
    std::vector<double> theta = {1.0, 2.0};
    AdamState st(2);
    adam_step(theta, std::vector<double>{0.0, 0.0}, st, 0.1);
    CHECK(theta == std::vector<double>{1.0, 2.0});

    std::vector<double> a = {0.1, 0.2}, b = a;
    AdamState sa(2), sb(2);
    for (int i = 0; i < 5; ++i) {
      const std::vector<double> g = {0.5 - i * 0.1, -0.3};
      adam_step(a, g, sa, 0.01);
      adam_step(b, g, sb, 0.01);
    }
    CHECK(a == b);
    CHECK(sa.m == sb.m);
    CHECK_THROWS_AS(adam_step(a, std::vector<double>{1.0}, sa, 0.1), std::invalid_argument);
  }
}

TEST_SUITE("early stopping") {
  TEST_CASE("trace with alpha 0.9 and k 1") {
    EarlyStopper s(0.9, 1);
    CHECK_FALSE(s.update(10.0));
    CHECK(s.best() == 10.0);
    CHECK(s.counter() == 1);
    CHECK(s.update(9.5));
    CHECK(s.counter() == 0);
  }

  TEST_CASE("constant loss stops after k + 1 epochs") {
    for (std::size_t k : {1u, 2u, 5u, 50u}) {
      EarlyStopper s(0.99, k);
      std::size_t epochs = 0;
      while (true) {
        ++epochs;
        if (s.update(1.0)) break;
      }
      CHECK(epochs == k + 1);
    }
  }

  TEST_CASE("geometric decay faster than alpha never stops") {
    const double alpha = 0.99;
    EarlyStopper s(alpha, 1);
    for (int t = 0; t < 10000; ++t) REQUIRE_FALSE(s.update(std::pow(alpha, 1.001 * t)));
  }

  TEST_CASE("invalid settings") {
    CHECK_THROWS_AS(EarlyStopper(0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(EarlyStopper(1.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(EarlyStopper(0.9, 0), std::invalid_argument);
  }
}

TEST_SUITE("training") {
  TEST_CASE("chronological split") {
    auto table = small_market(5, 2, 101, 10);
    std::reverse(table.records.begin(), table.records.end());
    const auto split = chronological_split(table.records);
    CHECK(split.train.size() == 80);
    CHECK(split.test.size() == 21);
    double last_train = -1e300, first_test = 1e300;
    for (auto i : split.train) last_train = std::max(last_train, table.records[i].timestamp);
    for (auto i : split.test) first_test = std::min(first_test, table.records[i].timestamp);
    CHECK(last_train <= first_test);
    CHECK_THROWS_AS(chronological_split(std::span<const TransactionRecord>(table.records.data(), 1)), DataError);
  }

  TEST_CASE("marginal baseline matches a direct computation") {
    const auto table = small_market(6, 2, 300, 11);
    const auto split = chronological_split(table.records);
    std::vector<double> q(6, 1.0);
    for (auto i : split.train) {
      q[table.records[i].buyer] += 1;
      q[table.records[i].seller] += 1;
    }
    const double total = std::accumulate(q.begin(), q.end(), 0.0);
    double loss = 0.0;
    for (auto i : split.test) {
      const auto& r = table.records[i];
      const double a = q[r.buyer] / total, b = q[r.seller] / total;
      loss -= std::log(std::max(b / (1.0 - a), a / (1.0 - b)));
    }
    loss /= static_cast<double>(split.test.size());
    CHECK(marginal_baseline_loss(table).loss == doctest::Approx(loss).epsilon(1e-12));
  }

  TEST_CASE("planted market beats the marginal baseline, deterministically") {
    MarketConfig mc;
    mc.n_transactions = 4000;
    mc.seed = 12;
    const auto table = generate_market(mc);
    ModelConfig cfg;
    cfg.batch_size = 512;
    cfg.early_stop_k = 5;
    cfg.max_epochs = 60;
    cfg.seed = 3;
    const auto a = train(table, cfg, FeatureSet::of({Feature::kEntity, Feature::kProduct}));
    CHECK(a.final_test_loss < marginal_baseline_loss(table).loss);
    CHECK(a.epochs == a.train_loss.size());
    CHECK(a.test_loss.size() == a.train_loss.size());
    CHECK(a.params.all_finite());
    const auto b = train(table, cfg, FeatureSet::of({Feature::kEntity, Feature::kProduct}));
    CHECK(a.train_loss == b.train_loss);
    CHECK(a.test_loss == b.test_loss);
    CHECK(a.params == b.params);
  }

  TEST_CASE("checkpoint round trip") {
    const auto table = small_market(5, 2, 100, 13);
    ModelConfig cfg;
    cfg.max_epochs = 3;
    cfg.batch_size = 32;
    const auto r = train(table, cfg, FeatureSet::all());
    std::stringstream buf;
    save_checkpoint(buf, r.params, r.scaler);
    const auto back = load_checkpoint(buf);
    CHECK(back.params == r.params);
    CHECK(back.scaler == r.scaler);

    std::stringstream bad("RZKMODEX");
    CHECK_THROWS_AS(load_checkpoint(bad), DataError);
    std::stringstream full;
    save_checkpoint(full, r.params, r.scaler);
    std::stringstream truncated(full.str().substr(0, full.str().size() / 2));
    CHECK_THROWS_AS(load_checkpoint(truncated), DataError);
  }

  TEST_CASE("configuration validation") {
    ModelConfig c;
    c.hidden_sizes = {4, 4, 4};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.early_stop_alpha = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }
}
