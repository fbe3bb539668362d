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

#include "razorkit/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "razorkit/error.hpp"

namespace razorkit {

namespace {

void require_exhaustive(const CoalitionalGame& game, const char* what) {
  if (game.player_count() > kMaxExhaustivePlayers) {
    throw std::invalid_argument(std::string(what) + ": at most " + std::to_string(kMaxExhaustivePlayers) +
                                " players");
  }
}

std::vector<double> all_values(CoalitionalGame& game) {
  const std::size_t total = std::size_t{1} << game.player_count();
  std::vector<Coalition> masks(total);
  for (std::size_t s = 0; s < total; ++s) masks[s] = s;
  game.prefetch(masks);
  std::vector<double> values(total);
  for (std::size_t s = 0; s < total; ++s) values[s] = game.value(s);
  return values;
}

// H(Y | X_S) - H(Y) is computed as H(Y, X_S) - H(X_S) - H(Y).
double grouped_entropy(const std::vector<std::vector<int>>& keys, const std::vector<double>& probs) {
  std::map<std::vector<int>, double> mass;
  for (std::size_t r = 0; r < keys.size(); ++r) mass[keys[r]] += probs[r];
  double h = 0.0;
  for (const auto& [key, p] : mass) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace

CoalitionalGame::CoalitionalGame(std::size_t players, ValueFn value, BatchValueFn batch)
    : players_(players), value_(std::move(value)), batch_(std::move(batch)) {
  if (players > 64) throw std::invalid_argument("game: at most 64 players");
  if (!value_) throw std::invalid_argument("game: missing value function");
  const double empty = this->value(0);
  if (std::abs(empty) > 1e-12) throw std::invalid_argument("game: value of the empty coalition must be 0");
}

Coalition CoalitionalGame::grand_coalition() const {
  return players_ == 64 ? ~Coalition{0} : (Coalition{1} << players_) - 1;
}

void CoalitionalGame::check(Coalition s) const {
  if ((s & ~grand_coalition()) != 0) throw std::out_of_range("game: coalition has unknown players");
}

double CoalitionalGame::value(Coalition s) {
  check(s);
  std::lock_guard lock(mutex_);
  if (auto it = memo_.find(s); it != memo_.end()) return it->second;
  const double v = value_(s);
  memo_.emplace(s, v);
  return v;
}

void CoalitionalGame::prefetch(std::span<const Coalition> coalitions) {
  std::vector<Coalition> missing;
  {
    std::lock_guard lock(mutex_);
    for (Coalition s : coalitions) {
      check(s);
      if (!memo_.contains(s) && std::find(missing.begin(), missing.end(), s) == missing.end()) {
        missing.push_back(s);
      }
    }
  }
  if (missing.empty()) return;
  if (!batch_) {
    for (Coalition s : missing) value(s);
    return;
  }
  const std::vector<double> values = batch_(missing);
  if (values.size() != missing.size()) throw std::runtime_error("game: batch evaluation size mismatch");
  std::lock_guard lock(mutex_);
  for (std::size_t k = 0; k < missing.size(); ++k) memo_.emplace(missing[k], values[k]);
}

std::optional<double> CoalitionalGame::memoized(Coalition s) const {
  std::lock_guard lock(mutex_);
  if (auto it = memo_.find(s); it != memo_.end()) return it->second;
  return std::nullopt;
}

std::size_t CoalitionalGame::evaluation_count() const {
  std::lock_guard lock(mutex_);
  return memo_.size();
}

std::vector<double> exact_shapley(CoalitionalGame& game) {
  require_exhaustive(game, "exact_shapley");
  const std::size_t n = game.player_count();
  const auto f = all_values(game);
  // weight[k] = k! (n - k - 1)! / n!
  std::vector<double> weight(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    weight[k] = std::exp(std::lgamma(double(k) + 1) + std::lgamma(double(n - k)) - std::lgamma(double(n) + 1));
  }
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Coalition bit = Coalition{1} << i;
    for (Coalition s = 0; s < f.size(); ++s) {
      if (s & bit) continue;
      phi[i] += weight[std::popcount(s)] * (f[s | bit] - f[s]);
    }
  }
  return phi;
}

Attribution topk_shapley(CoalitionalGame& game) {
  const std::size_t n = game.player_count();
  Attribution out;
  out.phi.assign(n, 0.0);
  Coalition prefix = 0;
  double prefix_value = game.value(0);
  for (std::size_t step = 0; step < n; ++step) {
    std::vector<Coalition> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(prefix >> i & 1u)) candidates.push_back(prefix | (Coalition{1} << i));
    }
    game.prefetch(candidates);

    std::vector<double> gains(n, std::numeric_limits<double>::quiet_NaN());
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (prefix >> i & 1u) continue;
      gains[i] = game.value(prefix | (Coalition{1} << i)) - prefix_value;
      if (best == n || gains[i] > gains[best]) best = i;
    }
    out.phi[best] = gains[best];
    out.order.push_back(best);
    out.gains.push_back(std::move(gains));
    prefix |= Coalition{1} << best;
    prefix_value = game.value(prefix);
  }
  return out;
}

bool is_monotone(CoalitionalGame& game) {
  require_exhaustive(game, "is_monotone");
  const auto f = all_values(game);
  const std::size_t n = game.player_count();
  for (Coalition s = 0; s < f.size(); ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const Coalition bit = Coalition{1} << i;
      if (!(s & bit) && f[s | bit] < f[s] - kGameTolerance) return false;
    }
  }
  return true;
}

bool is_submodular(CoalitionalGame& game) {
  require_exhaustive(game, "is_submodular");
  const auto f = all_values(game);
  const std::size_t n = game.player_count();
  for (Coalition x = 0; x < f.size(); ++x) {
    for (std::size_t a = 0; a < n; ++a) {
      const Coalition ba = Coalition{1} << a;
      if (x & ba) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        const Coalition bb = Coalition{1} << b;
        if (x & bb) continue;
        if (f[x | ba] + f[x | bb] < f[x | ba | bb] + f[x] - kGameTolerance) return false;
      }
    }
  }
  return true;
}

RelaxedEfficiencyCheck check_relaxed_topk_efficiency(CoalitionalGame& game, const Attribution& attribution) {
  require_exhaustive(game, "check_relaxed_topk_efficiency");
  const std::size_t n = game.player_count();
  if (attribution.phi.size() != n) throw std::invalid_argument("relaxed efficiency: phi size mismatch");
  const auto f = all_values(game);

  RelaxedEfficiencyCheck out;
  out.best_value.assign(n + 1, -std::numeric_limits<double>::infinity());
  for (Coalition s = 0; s < f.size(); ++s) {
    auto& best = out.best_value[std::popcount(s)];
    best = std::max(best, f[s]);
  }
  std::vector<double> sorted = attribution.phi;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  out.top_sum.assign(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) out.top_sum[k] = out.top_sum[k - 1] + sorted[k - 1];

  const double factor = 1.0 - std::exp(-1.0);
  for (std::size_t k = 0; k <= n; ++k) {
    if (factor * out.best_value[k] > out.top_sum[k] + kGameTolerance) out.holds = false;
  }
  return out;
}

CoalitionalGame additive_game(std::vector<double> values) {
  const std::size_t n = values.size();
  return CoalitionalGame(n, [values = std::move(values)](Coalition s) {
    double v = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (s >> i & 1u) v += values[i];
    }
    return v;
  });
}

CoalitionalGame coverage_game(std::vector<std::uint64_t> sets) {
  const std::size_t n = sets.size();
  return CoalitionalGame(n, [sets = std::move(sets)](Coalition s) {
    std::uint64_t covered = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (s >> i & 1u) covered |= sets[i];
    }
    return static_cast<double>(std::popcount(covered));
  });
}

CoalitionalGame table_game(std::vector<double> values) {
  if (values.empty() || !std::has_single_bit(values.size())) {
    throw std::invalid_argument("table game: size must be a power of two");
  }
  const std::size_t n = static_cast<std::size_t>(std::countr_zero(values.size()));
  return CoalitionalGame(n, [values = std::move(values)](Coalition s) { return values[s]; });
}

CoalitionalGame entropy_gain_game(std::vector<std::vector<int>> features, std::vector<int> targets,
                                  std::vector<double> probs) {
  if (features.empty() || features.size() != targets.size() || features.size() != probs.size()) {
    throw std::invalid_argument("entropy game: inconsistent rows");
  }
  const std::size_t n = features.front().size();
  auto value = [features = std::move(features), targets = std::move(targets),
                probs = std::move(probs), n](Coalition s) {
    const std::size_t rows = features.size();
    std::vector<std::vector<int>> with_y(rows), without_y(rows), y_only(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < n; ++i) {
        if (s >> i & 1u) without_y[r].push_back(features[r][i]);
      }
      with_y[r] = without_y[r];
      with_y[r].push_back(targets[r]);
      y_only[r] = {targets[r]};
    }
    const double h_y = grouped_entropy(y_only, probs);
    const double h_y_given_x = grouped_entropy(with_y, probs) - grouped_entropy(without_y, probs);
    return h_y - h_y_given_x;
  };
  return CoalitionalGame(n, std::move(value));
}

std::vector<double> read_game_table(std::istream& in) {
  std::map<Coalition, double> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string mask_text, extra;
    double v = 0.0;
    if (!(fields >> mask_text >> v) || (fields >> extra)) {
      throw DataError("game line " + std::to_string(line_no) + ": expected `bitmask value`");
    }
    Coalition mask = 0;
    try {
      std::size_t used = 0;
      if (mask_text.rfind("0b", 0) == 0) {
        mask = std::stoull(mask_text.substr(2), &used, 2);
        used += 2;
      } else {
        mask = std::stoull(mask_text, &used, 10);
      }
      if (used != mask_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError("game line " + std::to_string(line_no) + ": bad bitmask '" + mask_text + "'");
    }
    if (!entries.emplace(mask, v).second) {
      throw DataError("game line " + std::to_string(line_no) + ": duplicate coalition " + mask_text);
    }
  }
  if (entries.empty()) throw DataError("game: empty table");
  const Coalition largest = entries.rbegin()->first;
  const std::size_t n = static_cast<std::size_t>(std::bit_width(largest));
  if (n > kMaxExhaustivePlayers) throw DataError("game: too many players for a full table");
  const std::size_t total = std::size_t{1} << n;
  if (entries.size() != total) {
    throw DataError("game: table has " + std::to_string(entries.size()) + " rows, expected " +
                    std::to_string(total));
  }
  std::vector<double> values(total);
  for (const auto& [mask, v] : entries) values[mask] = v;
  if (std::abs(values[0]) > 1e-12) throw DataError("game: value of the empty coalition must be 0");
  return values;
}

}  // namespace razorkit
