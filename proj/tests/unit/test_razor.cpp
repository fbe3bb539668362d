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
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "razorkit/error.hpp"
#include "razorkit/random.hpp"
#include "razorkit/razor.hpp"

using namespace razorkit;

namespace {

/// Random distribution over pairs of {0..m-1}; roughly a third of the pairs get zero mass.
PairDistribution random_pairs(Rng& rng, std::size_t m) {
  std::vector<PairMass> entries;
  double total = 0.0;
  for (std::uint32_t i = 0; i < m; ++i) {
    for (std::uint32_t j = i; j < m; ++j) {
      if (uniform01(rng) < 0.33) continue;
      const double w = -std::log(1.0 - uniform01(rng));
      entries.push_back({i, j, w});
      total += w;
    }
  }
  if (entries.empty()) {
    entries.push_back({0, static_cast<std::uint32_t>(m - 1), 1.0});
    total = 1.0;
  }
  for (auto& e : entries) e.p /= total;
  return PairDistribution::from_entries(entries);
}

double entropy_of(const std::vector<double>& q) {
  double h = 0.0;
  for (double x : q) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

/// Independent exhaustive minimum: recursion over pairs, assigning each pair's mass to one side.
void brute_force(std::span<const PairMass> pairs, std::size_t k, std::vector<double>& q, double& best) {
  if (k == pairs.size()) {
    best = std::min(best, entropy_of(q));
    return;
  }
  const auto& pm = pairs[k];
  q[pm.first] += pm.p;
  brute_force(pairs, k + 1, q, best);
  q[pm.first] -= pm.p;
  if (pm.second != pm.first) {
    q[pm.second] += pm.p;
    brute_force(pairs, k + 1, q, best);
    q[pm.second] -= pm.p;
  }
}

double brute_force_min(const PairDistribution& d, std::size_t m) {
  std::vector<double> q(m, 0.0);
  double best = std::numeric_limits<double>::infinity();
  brute_force(d.pairs(), 0, q, best);
  return best;
}

std::vector<double> random_simplex(Rng& rng, std::size_t m) {
  std::vector<double> q(m);
  double total = 0.0;
  for (double& x : q) {
    x = -std::log(1.0 - uniform01(rng));
    total += x;
  }
  for (double& x : q) x /= total;
  return q;
}

}  // namespace

TEST_CASE("single pair has zero razor entropy") {
  const auto d = PairDistribution::from_entries({{0, 1, 1.0}});
  const auto r = razor_entropy_oracle(d);
  CHECK(r.value == 0.0);
  CHECK(r.q == std::vector<double>{1.0, 0.0});
  const auto f = razor_entropy_formula(d);
  CHECK(f.value == 0.0);
  CHECK(f.q == std::vector<double>{1.0, 0.0});
}

TEST_CASE("diagonal pairs force their element") {
  const auto d = PairDistribution::from_entries({{0, 0, 0.5}, {1, 1, 0.5}});
  CHECK(d.free_pairs() == 0);
  CHECK(razor_entropy_oracle(d).value == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(razor_entropy_formula(d).value == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("oracle matches an independent exhaustive search and beats every fixed encoding") {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = random_pairs(rng, 3);
    const auto r = razor_entropy_oracle(d);
    CHECK(r.value == doctest::Approx(brute_force_min(d, d.support_size())).epsilon(1e-12));
    CHECK(shannon_entropy(choice_distribution(d, r.choice)) == doctest::Approx(r.value).epsilon(1e-12));
    // Every encoding's entropy is an upper bound; sample a few explicitly.
    for (int probe = 0; probe < 8; ++probe) {
      std::vector<std::uint32_t> z;
      for (const auto& pm : d.pairs()) z.push_back(uniform01(rng) < 0.5 ? pm.first : pm.second);
      CHECK(r.value <= shannon_entropy(choice_distribution(d, z)) + 1e-12);
    }
  }
}

TEST_CASE("closed form equals the oracle on random distributions") {
  Rng rng(102);
  for (int trial = 0; trial < 500; ++trial) {
    const auto d = random_pairs(rng, 2 + uniform_index(rng, 3));
    CHECK(std::abs(razor_entropy_formula(d).value - razor_entropy_oracle(d).value) <= 1e-9);
  }
}

TEST_CASE("random simplex points never beat the minimum") {
  Rng rng(103);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = random_pairs(rng, 4);
    const double v = razor_entropy_formula(d).value;
    for (int probe = 0; probe < 500; ++probe) {
      REQUIRE(razor_objective(d, random_simplex(rng, d.support_size())) >= v - 1e-9);
    }
  }
}

TEST_CASE("bounds, fixed-side comparison and relabeling symmetry") {
  Rng rng(104);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + uniform_index(rng, 3);
    const auto d = random_pairs(rng, m);
    const double v = razor_entropy_oracle(d).value;
    CHECK(v >= 0.0);
    CHECK(v <= std::log(static_cast<double>(d.support_size())) + 1e-12);

    std::vector<std::uint32_t> low, high;
    for (const auto& pm : d.pairs()) {
      low.push_back(pm.first);
      high.push_back(pm.second);
    }
    CHECK(v <= shannon_entropy(choice_distribution(d, low)) + 1e-12);
    CHECK(v <= shannon_entropy(choice_distribution(d, high)) + 1e-12);

    std::vector<std::uint32_t> perm(d.support_size());
    std::iota(perm.begin(), perm.end(), 0u);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
    std::vector<PairMass> relabeled;
    for (const auto& pm : d.pairs()) relabeled.push_back({perm[pm.first], perm[pm.second], pm.p});
    CHECK(razor_entropy_oracle(PairDistribution::from_entries(relabeled)).value ==
          doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("empirical razor") {
  const std::vector<double> ones(10, 0.0);
  CHECK(empirical_razor(ones) == 0.0);
  const std::vector<double> halves(7, std::log(2.0));
  CHECK(empirical_razor(halves) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(empirical_razor(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("plug-in mean of sampled pairs is consistent with the closed form") {
  Rng rng(105);
  const auto d = PairDistribution::from_entries(
      {{0, 1, 0.3}, {1, 2, 0.25}, {0, 2, 0.2}, {2, 3, 0.15}, {3, 3, 0.1}});
  const auto best = razor_entropy_formula(d);
  std::vector<double> cdf;
  double acc = 0.0;
  for (const auto& pm : d.pairs()) cdf.push_back(acc += pm.p);
  const std::size_t n = 100000;
  std::vector<double> items(n);
  for (auto& x : items) {
    const double u = uniform01(rng) * acc;
    const std::size_t k = std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(),
                                                cdf.size() - 1);
    const auto& pm = d.pairs()[k];
    x = -std::log(std::max(best.q[pm.first], best.q[pm.second]));
  }
  const double mean = empirical_razor(items);
  double var = 0.0;
  for (double x : items) var += (x - mean) * (x - mean);
  const double se = std::sqrt(var / static_cast<double>(n - 1) / static_cast<double>(n));
  CHECK(std::abs(mean - best.value) < 3.0 * se);
}

TEST_CASE("pair distribution validation and parsing") {
  const auto merged = PairDistribution::from_entries({{1, 0, 0.25}, {0, 1, 0.25}, {2, 2, 0.5}, {0, 2, 0.0}});
  CHECK(merged.pairs().size() == 2);
  CHECK(merged.support_size() == 3);
  CHECK(merged.free_pairs() == 1);
  CHECK_THROWS_AS(PairDistribution::from_entries({{0, 1, 0.6}}), std::invalid_argument);
  CHECK_THROWS_AS(PairDistribution::from_entries({{0, 1, 1.2}, {1, 2, -0.2}}), std::invalid_argument);

  std::istringstream good("# comment\n0 1 0.5\n\n1 2 0.5\n");
  CHECK(read_pair_distribution(good).pairs().size() == 2);
  std::istringstream extra("0 1 0.5 9\n");
  CHECK_THROWS_AS(read_pair_distribution(extra), DataError);
  std::istringstream negative("-1 1 1.0\n");
  CHECK_THROWS_AS(read_pair_distribution(negative), DataError);
  std::istringstream sum("0 1 0.5\n");
  CHECK_THROWS_AS(read_pair_distribution(sum), DataError);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(read_pair_distribution(empty), DataError);
}

TEST_CASE("enumeration bound") {
  std::vector<PairMass> many;
  for (std::uint32_t i = 0; i < 7; ++i) {
    for (std::uint32_t j = i + 1; j < 7; ++j) many.push_back({i, j, 1.0 / 21.0});
  }
  const auto d = PairDistribution::from_entries(many);
  CHECK(d.free_pairs() == 21);
  CHECK_THROWS_AS(razor_entropy_oracle(d), std::invalid_argument);
  CHECK_THROWS_AS(razor_entropy_formula(d), std::invalid_argument);
}
