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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace razorkit {

/// Player subset as a bitmask; bit i set means player i is in the coalition.
using Coalition = std::uint64_t;

inline constexpr std::size_t kMaxExhaustivePlayers = 12;
inline constexpr double kGameTolerance = 1e-9;

/// A player count with a memoized value function. Each distinct coalition is evaluated once;
/// calls into the value function are serialized.
class CoalitionalGame {
 public:
  using ValueFn = std::function<double(Coalition)>;
  /// Evaluates several coalitions at once (possibly concurrently); returns values in order.
  using BatchValueFn = std::function<std::vector<double>(std::span<const Coalition>)>;

  /// Evaluates the empty coalition; throws std::invalid_argument unless it is 0 within 1e-12.
  CoalitionalGame(std::size_t players, ValueFn value, BatchValueFn batch = {});

  std::size_t player_count() const { return players_; }
  Coalition grand_coalition() const;

  double value(Coalition s);
  /// Evaluates the not-yet-memoized coalitions of `coalitions`, through the batch function if any.
  void prefetch(std::span<const Coalition> coalitions);
  std::optional<double> memoized(Coalition s) const;

  /// Distinct coalitions evaluated so far, the empty one included.
  std::size_t evaluation_count() const;

 private:
  void check(Coalition s) const;

  std::size_t players_;
  ValueFn value_;
  BatchValueFn batch_;
  mutable std::mutex mutex_;
  std::unordered_map<Coalition, double> memo_;
};

/// Greedy attribution: `order` lists players strongest first; phi[i] is player i's marginal gain
/// when added. gains[k][i] = f(S_k + i) - f(S_k) for the first-k prefix S_k (NaN for i in S_k).
struct Attribution {
  std::vector<double> phi;
  std::vector<std::size_t> order;
  std::vector<std::vector<double>> gains;
};

/// Classical Shapley values by enumeration of all 2^n coalitions. Requires n <= 12.
std::vector<double> exact_shapley(CoalitionalGame& game);

/// Top-k Shapley values: O(n^2) evaluations, ties resolved toward the smallest player index.
Attribution topk_shapley(CoalitionalGame& game);

/// Exhaustive checks with kGameTolerance. Require n <= 12.
bool is_monotone(CoalitionalGame& game);
bool is_submodular(CoalitionalGame& game);

struct RelaxedEfficiencyCheck {
  bool holds = true;
  std::vector<double> best_value;  ///< max f(S) over |S| = k, for k = 0..n
  std::vector<double> top_sum;     ///< sum of the k largest phi values
};

/// Verifies (1 - 1/e) max_{|S|=k} f(S) <= sum of the k largest phi, for every k. Requires n <= 12.
RelaxedEfficiencyCheck check_relaxed_topk_efficiency(CoalitionalGame& game, const Attribution& attribution);

/// f(S) = sum of values[i] over i in S.
CoalitionalGame additive_game(std::vector<double> values);
/// f(S) = number of universe elements covered by the sets of S; sets[i] is a bitmask over the universe.
CoalitionalGame coverage_game(std::vector<std::uint64_t> sets);
/// Game given by a full table indexed by coalition bitmask (size 2^n).
CoalitionalGame table_game(std::vector<double> values);

/// f(S) = H(Y) - H(Y | X_S) in nats for a finite joint distribution: row r has feature values
/// features[r] (one per player), target targets[r] and probability probs[r].
CoalitionalGame entropy_gain_game(std::vector<std::vector<int>> features, std::vector<int> targets,
                                  std::vector<double> probs);

/// Parses `bitmask value` lines (decimal or 0b-prefixed masks). Every coalition of the
/// inferred player count must appear exactly once. Throws DataError.
std::vector<double> read_game_table(std::istream& in);

}  // namespace razorkit
