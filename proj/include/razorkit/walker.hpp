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
#include <vector>

#include "razorkit/graph.hpp"
#include "razorkit/random.hpp"

namespace razorkit {

/// Second-order walk bias and geometry.
struct WalkParams {
  double p = 1.0;  ///< return parameter
  double q = 1.0;  ///< in-out parameter
  std::size_t walk_length = 100;
  std::size_t walks_per_node = 20;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless p > 0, q > 0, walk_length >= 2, walks_per_node >= 1.
  void validate() const;
};

/// Proposals allowed per rejection step before giving up.
inline constexpr std::uint64_t kMaxRejectionProposals = 10'000;

/// Unnormalized bias of moving to x after arriving from t: 1/p for x == t,
/// 1 when t -> x is an arc, 1/q otherwise.
double alpha(const CsrGraph& g, NodeId t, NodeId x, double p, double q);

/// Largest value alpha can take for the given (p, q).
double alpha_max(double p, double q);

/// max{a/b : a, b in {1, p, q}}; bounds the expected number of proposals per rejection step.
double rejection_bound(double p, double q);

/// Exact transition probabilities over v's neighbor slice given predecessor t,
/// computed by one merge pass over the sorted slices of v and t.
std::vector<double> exact_step_distribution(const CsrGraph& g, NodeId t, NodeId v, double p, double q);

/// Reference sampler: draws from exact_step_distribution with a single uniform.
NodeId step_exact(const CsrGraph& g, NodeId t, NodeId v, const WalkParams& params, Rng& rng);

struct StepStats {
  std::uint64_t steps = 0;
  std::uint64_t proposals = 0;
};

/// Rejection sampler: proposes from v's first-order table and accepts x with probability
/// alpha(t, x) / alpha_max. Throws std::runtime_error after kMaxRejectionProposals proposals.
NodeId step_rejection(const CsrGraph& g, NodeId t, NodeId v, const WalkParams& params,
                      const FirstOrderTables& tables, Rng& rng, StepStats* stats = nullptr);

/// Fills `walk` with up to walk_length nodes starting at `start`. The first move is first-order;
/// later moves use step_rejection. Stops early at a node without out-arcs.
/// Throws std::invalid_argument if `start` has no neighbors.
void generate_walk(const CsrGraph& g, NodeId start, const WalkParams& params,
                   const FirstOrderTables& tables, Rng& rng, std::vector<NodeId>& walk,
                   StepStats* stats = nullptr);

std::vector<NodeId> generate_walk(const CsrGraph& g, NodeId start, const WalkParams& params,
                                  const FirstOrderTables& tables, Rng& rng);

/// One pass of walks: a single walk per start node with at least one neighbor, visited in a
/// seeded shuffled order. Walks are produced on demand and never stored; the walk from a given
/// node depends only on (seed, node, epoch), so any worker can regenerate it.
class WalkStream {
 public:
  WalkStream(const CsrGraph& g, const FirstOrderTables& tables, WalkParams params,
             std::uint64_t epoch);

  std::size_t size() const { return order_.size(); }
  std::uint64_t epoch() const { return epoch_; }

  /// i-th start node of this pass.
  NodeId start_node(std::size_t i) const { return order_[i]; }

  /// Writes the walk starting from `start` for this pass into `walk`. Thread-safe.
  void walk_from(NodeId start, std::vector<NodeId>& walk, StepStats* stats = nullptr) const;

  /// Sequential consumption; returns false once every start node has been visited.
  bool next(std::vector<NodeId>& walk);
  void rewind() { cursor_ = 0; }

  /// Bytes owned by the stream (start order only).
  std::size_t state_bytes() const { return order_.capacity() * sizeof(NodeId); }

 private:
  const CsrGraph* graph_;
  const FirstOrderTables* tables_;
  WalkParams params_;
  std::uint64_t epoch_;
  std::vector<NodeId> order_;
  std::size_t cursor_ = 0;
};

}  // namespace razorkit
