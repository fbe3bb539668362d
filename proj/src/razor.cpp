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

#include "razorkit/razor.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "razorkit/error.hpp"

namespace razorkit {

namespace {

// Calls visit(choice) for every assignment of the free pairs; diagonal pairs are fixed.
template <typename Visit>
void for_each_choice(const PairDistribution& dist, Visit&& visit) {
  const auto pairs = dist.pairs();
  std::vector<std::size_t> free;
  std::vector<std::uint32_t> choice(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    choice[k] = pairs[k].first;
    if (pairs[k].first != pairs[k].second) free.push_back(k);
  }
  if (free.size() > kMaxEnumerablePairs) {
    throw std::invalid_argument("razor: " + std::to_string(free.size()) +
                                " free pairs exceed the enumeration bound");
  }
  const std::uint64_t total = std::uint64_t{1} << free.size();
  for (std::uint64_t code = 0; code < total; ++code) {
    for (std::size_t b = 0; b < free.size(); ++b) {
      const auto& pm = pairs[free[b]];
      choice[free[b]] = ((code >> b) & 1u) ? pm.second : pm.first;
    }
    visit(std::as_const(choice));
  }
}

template <typename Score>
RazorResult minimize_over_choices(const PairDistribution& dist, Score&& score) {
  RazorResult best;
  best.value = std::numeric_limits<double>::infinity();
  for_each_choice(dist, [&](const std::vector<std::uint32_t>& choice) {
    auto q = choice_distribution(dist, choice);
    const double v = score(q);
    if (v < best.value) {
      best.value = v;
      best.choice = choice;
      best.q = std::move(q);
    }
  });
  return best;
}

}  // namespace

PairDistribution PairDistribution::from_entries(std::vector<PairMass> entries, double tolerance) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> merged;
  double total = 0.0;
  std::size_t m = 0;
  for (const PairMass& e : entries) {
    if (!(e.p >= 0.0) || !std::isfinite(e.p)) throw std::invalid_argument("pairs: masses must be non-negative");
    const auto key = std::minmax(e.first, e.second);
    m = std::max<std::size_t>(m, std::size_t{key.second} + 1);
    total += e.p;
    if (e.p > 0.0) merged[{key.first, key.second}] += e.p;
  }
  if (std::abs(total - 1.0) > tolerance) {
    throw std::invalid_argument("pairs: masses sum to " + std::to_string(total) + ", expected 1");
  }
  PairDistribution d;
  d.support_size_ = m;
  for (const auto& [key, p] : merged) d.pairs_.push_back({key.first, key.second, p / total});
  return d;
}

std::size_t PairDistribution::free_pairs() const {
  return static_cast<std::size_t>(
      std::count_if(pairs_.begin(), pairs_.end(), [](const PairMass& pm) { return pm.first != pm.second; }));
}

std::vector<double> choice_distribution(const PairDistribution& dist, std::span<const std::uint32_t> choice) {
  const auto pairs = dist.pairs();
  if (choice.size() != pairs.size()) throw std::invalid_argument("razor: choice length mismatch");
  std::vector<double> q(dist.support_size(), 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (choice[k] != pairs[k].first && choice[k] != pairs[k].second) {
      throw std::invalid_argument("razor: choice outside its pair");
    }
    q[choice[k]] += pairs[k].p;
  }
  return q;
}

double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  // Masses summing to 1 + ulp can push a point mass a hair below zero.
  return std::max(h, 0.0);
}

double razor_objective(const PairDistribution& dist, std::span<const double> q) {
  if (q.size() != dist.support_size()) throw std::invalid_argument("razor: q has wrong support size");
  double v = 0.0;
  for (const PairMass& pm : dist.pairs()) v -= pm.p * std::log(std::max(q[pm.first], q[pm.second]));
  return v;
}

RazorResult razor_entropy_oracle(const PairDistribution& dist) {
  return minimize_over_choices(dist, [](const std::vector<double>& q) { return shannon_entropy(q); });
}

RazorResult razor_entropy_formula(const PairDistribution& dist) {
  return minimize_over_choices(dist, [&](const std::vector<double>& q) { return razor_objective(dist, q); });
}

double empirical_razor(std::span<const double> item_objectives) {
  if (item_objectives.empty()) throw std::invalid_argument("razor: no samples");
  return std::accumulate(item_objectives.begin(), item_objectives.end(), 0.0) /
         static_cast<double>(item_objectives.size());
}

PairDistribution read_pair_distribution(std::istream& in) {
  std::vector<PairMass> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long i = -1, j = -1;
    double p = 0.0;
    std::string extra;
    if (!(fields >> i >> j >> p) || (fields >> extra) || i < 0 || j < 0 ||
        i > std::numeric_limits<std::uint32_t>::max() || j > std::numeric_limits<std::uint32_t>::max()) {
      throw DataError("pairs line " + std::to_string(line_no) + ": expected `i j p`");
    }
    entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), p});
  }
  if (entries.empty()) throw DataError("pairs: no entries");
  try {
    return PairDistribution::from_entries(std::move(entries));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

}  // namespace razorkit
