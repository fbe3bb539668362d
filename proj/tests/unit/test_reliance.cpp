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
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "razorkit/error.hpp"
#include "razorkit/reliance.hpp"
#include "razorkit/synth.hpp"

using namespace razorkit;

namespace {

std::shared_ptr<const TransactionTable> market() {
  static const auto table = [] {
    MarketConfig c;
    c.n_entities = 8;
    c.n_products = 3;
    c.n_transactions = 3000;
    c.n_days = 60;
    c.seed = 41;
    return std::make_shared<const TransactionTable>(generate_market(c));
  }();
  return table;
}

FeatureGameSpec small_spec() {
  FeatureGameSpec spec;
  spec.dataset = market();
  spec.universe = {Feature::kDay, Feature::kEntity, Feature::kProduct};
  spec.runs_per_subset = 2;
  spec.config.max_epochs = 80;
  spec.base_seed = 5;
  return spec;
}

const RelianceReport& small_report() {
  static const RelianceReport report = run_reliance(small_spec());
  return report;
}

}  // namespace

TEST_CASE("game configuration validation and seed schedule") {
  auto spec = small_spec();
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.features_of(0b101) == FeatureSet::of({Feature::kDay, Feature::kProduct}));

  std::set<std::uint64_t> seeds;
  for (Coalition s = 0; s < 8; ++s) {
    for (std::size_t r = 0; r < 3; ++r) seeds.insert(spec.run_seed(s, r));
  }
  CHECK(seeds.size() == 24);

  auto reordered = spec;
  reordered.universe = {Feature::kEntity, Feature::kDay, Feature::kProduct};
  CHECK(reordered.run_seed(0b001, 1) == spec.run_seed(0b010, 1));

  auto bad = spec;
  bad.universe = {Feature::kDay, Feature::kDay};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.universe.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.runs_per_subset = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.dataset.reset();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("subset losses are reproducible and independent of the worker count") {
  auto spec = small_spec();
  spec.config.max_epochs = 10;
  const Coalition subsets[] = {0b010, 0b110};
  SubsetLossCache serial, parallel;
  serial.evaluate(spec, subsets);
  spec.workers = 3;
  parallel.evaluate(spec, subsets);
  CHECK(serial.snapshot() == parallel.snapshot());
  CHECK(serial.runs(0b010).size() == 2);
  CHECK(subset_loss(spec, 0b010) == serial.mean(0b010));
  CHECK_THROWS_AS(serial.mean(0b001), std::out_of_range);
}

TEST_CASE("training failures propagate") {
  auto spec = small_spec();
  auto tiny = std::make_shared<TransactionTable>(*market());
  tiny->records.resize(1);
  spec.dataset = tiny;
  spec.workers = 2;
  SubsetLossCache cache;
  const Coalition subsets[] = {0b001, 0b010};
  CHECK_THROWS_AS(cache.evaluate(spec, subsets), DataError);
}

TEST_CASE("feature game values") {
  auto spec = small_spec();
  spec.config.max_epochs = 10;
  auto cache = std::make_shared<SubsetLossCache>();
  auto game = build_feature_game(spec, cache);
  CHECK(game.value(0) == 0.0);
  const double v = game.value(0b011);
  CHECK(v == doctest::Approx(cache->mean(0) - cache->mean(0b011)).epsilon(1e-15));
  CHECK(game.evaluation_count() == 2);
}

TEST_CASE("attribution on a small planted market") {
  const auto& r = small_report();
  CHECK(r.universe[r.order[0]] == Feature::kEntity);
  CHECK(r.evaluations <= 3 * 4 / 2 + 1);
  CHECK(std::abs(std::accumulate(r.phi.begin(), r.phi.end(), 0.0) - r.full_value) <= 1e-12);
  CHECK(r.full_value > 0.0);
  CHECK(r.run_losses.at(0).size() == 2);

  // Gain rows recomputed from the memoized run losses.
  const auto mean = [&](Coalition s) {
    const auto& v = r.run_losses.at(s);
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  Coalition prefix = 0;
  for (std::size_t step = 0; step < r.order.size(); ++step) {
    for (std::size_t i = 0; i < r.universe.size(); ++i) {
      if (prefix >> i & 1u) {
        CHECK(std::isnan(r.gains[step][i]));
        continue;
      }
      const double prefix_value = prefix == 0 ? 0.0 : r.empty_loss - mean(prefix);
      const double expected = (r.empty_loss - mean(prefix | (Coalition{1} << i))) - prefix_value;
      CHECK(r.gains[step][i] == doctest::Approx(expected).epsilon(1e-12));
    }
    prefix |= Coalition{1} << r.order[step];
  }

  // More context never hurts here, and the learned empty model is at least as good as the marginal baseline.
  CHECK(r.empty_loss >= mean(0b111));
  std::vector<double> base = marginal_baseline_loss(*market()).item_losses;
  const double n = static_cast<double>(base.size());
  const double m = std::accumulate(base.begin(), base.end(), 0.0) / n;
  double var = 0.0;
  for (double x : base) var += (x - m) * (x - m);
  CHECK(r.empty_loss <= r.baseline_loss + 3.0 * std::sqrt(var / (n - 1.0) / n));
}

TEST_CASE("reports are reproducible and well formed") {
  const auto& a = small_report();
  const auto b = run_reliance(small_spec());
  CHECK(a.order == b.order);
  CHECK(a.phi == b.phi);
  CHECK(a.run_losses == b.run_losses);

  std::ostringstream json_out;
  write_reliance_json(json_out, a);
  const auto j = nlohmann::json::parse(json_out.str());
  CHECK(j["schema"] == "razorkit.reliance/1");
  CHECK(j["relaxed_efficiency"]["status"] == "not_run");

  std::ostringstream table;
  write_gain_table(table, a);
  std::istringstream lines(table.str());
  std::string line;
  std::size_t rows = 0;
  std::getline(lines, line);
  CHECK(line == "step\tprefix\tfeature\tgain\tselected");
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 3 + 2 + 1);
}

TEST_CASE("relaxed efficiency is reported on request") {
  auto spec = small_spec();
  spec.universe = {Feature::kEntity, Feature::kProduct};
  spec.config.max_epochs = 10;
  const auto r = run_reliance(spec, true);
  REQUIRE(r.relaxed.has_value());
  CHECK(r.relaxed->best_value.size() == 3);
  CHECK(r.run_losses.size() == 4);
}
