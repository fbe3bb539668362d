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
#include <iosfwd>
#include <span>
#include <vector>

namespace razorkit {

/// Probability mass of the unordered pair {first, second}, first <= second.
struct PairMass {
  std::uint32_t first = 0;
  std::uint32_t second = 0;
  double p = 0.0;
};

/// Distribution over unordered pairs from a support {0, ..., m-1}.
class PairDistribution {
 public:
  PairDistribution() = default;

  /// Orders each pair, merges duplicates and drops zero masses. Throws std::invalid_argument on
  /// negative masses or a total differing from 1 by more than `tolerance`; the result is
  /// renormalized to sum to 1.
  static PairDistribution from_entries(std::vector<PairMass> entries, double tolerance = 1e-9);

  /// Support size m (largest element + 1).
  std::size_t support_size() const { return support_size_; }
  std::span<const PairMass> pairs() const { return pairs_; }
  /// Number of pairs {i, j} with i != j and positive mass.
  std::size_t free_pairs() const;

 private:
  std::size_t support_size_ = 0;
  std::vector<PairMass> pairs_;
};

/// Largest count of off-diagonal pairs the exhaustive routines accept (2^20 encodings).
inline constexpr std::size_t kMaxEnumerablePairs = 20;

struct RazorResult {
  double value = 0.0;                 ///< nats
  std::vector<std::uint32_t> choice;  ///< chosen element per entry of pairs()
  std::vector<double> q;              ///< distribution of the chosen element
};

/// Minimum Shannon entropy of the chosen element over every deterministic choice function.
/// Throws std::invalid_argument if free_pairs() > kMaxEnumerablePairs.
RazorResult razor_entropy_oracle(const PairDistribution& dist);

/// Minimum over choice functions z of -sum p_ij log max(q_i, q_j) evaluated at q = q(z).
RazorResult razor_entropy_formula(const PairDistribution& dist);

/// -sum p_ij log max(q_i, q_j) for an arbitrary distribution q over the support.
double razor_objective(const PairDistribution& dist, std::span<const double> q);

/// Distribution of the chosen element under `choice`.
std::vector<double> choice_distribution(const PairDistribution& dist, std::span<const std::uint32_t> choice);

/// Shannon entropy in nats with 0 log 0 = 0.
double shannon_entropy(std::span<const double> probs);

/// Plug-in estimate: the mean of per-item objective terms -log max(q_x, q_y).
/// Throws std::invalid_argument on empty input.
double empirical_razor(std::span<const double> item_objectives);

/// Reads `i j p` lines (`#` comments allowed). Throws DataError on malformed lines.
PairDistribution read_pair_distribution(std::istream& in);

}  // namespace razorkit
