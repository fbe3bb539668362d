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
#include <string>
#include <vector>

#include "razorkit/random.hpp"

namespace razorkit {

using NodeId = std::uint32_t;

struct WeightedEdge {
  NodeId src = 0;
  NodeId dst = 0;
  double weight = 1.0;
};

/// O(1) sampling from a fixed discrete distribution (Walker's alias method, Vose construction).
class AliasTable {
 public:
  AliasTable() = default;

  /// Throws std::invalid_argument on empty input or a non-positive / non-finite weight.
  static AliasTable build(std::span<const double> weights);

  std::size_t size() const { return prob_.size(); }
  bool empty() const { return prob_.empty(); }

  /// Draws one index using exactly two uniform draws.
  std::size_t sample(Rng& rng) const;

  /// Probability of each index implied by the table cells.
  std::vector<double> distribution() const;

  std::span<const double> prob() const { return prob_; }
  std::span<const std::uint32_t> alias() const { return alias_; }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

namespace detail {
/// Fills `prob` and `alias` (same length as `weights`) in O(n). Alias entries are local indices.
void build_alias_into(std::span<const double> weights, std::span<double> prob,
                      std::span<std::uint32_t> alias);
}  // namespace detail

/// Immutable compressed sparse-row graph. Neighbor slices are strictly increasing and
/// carry positive weights; parallel edges are merged by summing their weights.
class CsrGraph {
 public:
  CsrGraph() : offsets_(1, 0) {}

  /// Undirected graphs store both arc directions. Throws std::out_of_range for ids >= node_count
  /// and std::invalid_argument for non-positive weights.
  static CsrGraph from_edges(std::span<const WeightedEdge> edges, std::size_t node_count,
                             bool directed);

  /// Adopts raw CSR arrays after validating every structural invariant.
  static CsrGraph from_arrays(std::vector<std::uint64_t> offsets, std::vector<NodeId> targets,
                              std::vector<double> weights, bool directed);

  std::size_t node_count() const { return offsets_.size() - 1; }
  /// Number of stored arcs (twice the edge count for undirected graphs, minus self-loops).
  std::size_t arc_count() const { return targets_.size(); }
  bool directed() const { return directed_; }

  std::size_t degree(NodeId v) const;
  std::span<const NodeId> neighbors(NodeId v) const;
  std::span<const double> neighbor_weights(NodeId v) const;

  /// Binary search of u's neighbor slice.
  bool has_edge(NodeId u, NodeId v) const;

  std::span<const std::uint64_t> offsets() const { return offsets_; }
  std::span<const NodeId> targets() const { return targets_; }
  std::span<const double> weights() const { return weights_; }

  /// Little-endian binary encoding with a magic header.
  void save(std::ostream& out) const;
  /// Throws DataError on a bad header, truncated stream, or invariant violation.
  static CsrGraph load(std::istream& in);

  friend bool operator==(const CsrGraph&, const CsrGraph&) = default;

 private:
  void check_node(NodeId v) const;

  std::vector<std::uint64_t> offsets_;
  std::vector<NodeId> targets_;
  std::vector<double> weights_;
  bool directed_ = false;
};

/// Per-node first-order transition tables, laid out parallel to the graph's arc arrays
/// so that storage is linear in the arc count.
class FirstOrderTables {
 public:
  FirstOrderTables() = default;
  explicit FirstOrderTables(const CsrGraph& graph);

  /// Samples a position inside v's neighbor slice. v must have degree >= 1.
  std::size_t sample_slot(NodeId v, Rng& rng) const;

  /// Reconstructed transition distribution over v's neighbor slice.
  std::vector<double> distribution(NodeId v) const;

  std::size_t memory_bytes() const;

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

/// A graph read from text together with the original node labels (index = node id).
struct LabeledGraph {
  CsrGraph graph;
  std::vector<std::string> labels;
};

/// Parses `src<TAB>dst[<TAB>weight]` lines; `#` lines and blank lines are skipped.
/// Labels are assigned dense ids in order of first appearance. Throws DataError with the line number.
LabeledGraph read_edge_list(std::istream& in, bool directed);

}  // namespace razorkit
