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

#include "razorkit/graph.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "binary_io.hpp"
#include "razorkit/error.hpp"

namespace razorkit {

namespace {

constexpr std::array<char, 8> kCsrMagic = {'R', 'Z', 'K', 'C', 'S', 'R', '0', '1'};
constexpr std::uint32_t kCsrVersion = 1;
constexpr double kAliasResidual = 1e-12;

}  // namespace

// ---------------------------------------------------------------------------
// AliasTable

namespace detail {

void build_alias_into(std::span<const double> weights, std::span<double> prob,
                      std::span<std::uint32_t> alias) {
  const std::size_t n = weights.size();
  if (n == 0) throw std::invalid_argument("alias: empty weight vector");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("alias: weights must be positive");
    total += w;
  }

  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  small.reserve(n);
  large.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }

  while (!small.empty() && !large.empty()) {
    const std::uint32_t s = small.back();
    small.pop_back();
    const std::uint32_t l = large.back();
    large.pop_back();
    prob[s] = scaled[s];
    alias[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  // Leftovers hold mass 1 up to rounding.
  for (std::uint32_t l : large) {
    prob[l] = 1.0;
    alias[l] = l;
  }
  for (std::uint32_t s : small) {
    if (1.0 - scaled[s] > kAliasResidual * static_cast<double>(n)) {
      throw std::logic_error("alias: residual mass exceeds tolerance");
    }
    prob[s] = 1.0;
    alias[s] = s;
  }
}

}  // namespace detail

AliasTable AliasTable::build(std::span<const double> weights) {
  AliasTable t;
  t.prob_.resize(weights.size());
  t.alias_.resize(weights.size());
  detail::build_alias_into(weights, t.prob_, t.alias_);
  return t;
}

std::size_t AliasTable::sample(Rng& rng) const {
  const std::size_t column = uniform_index(rng, prob_.size());
  return uniform01(rng) < prob_[column] ? column : alias_[column];
}

std::vector<double> AliasTable::distribution() const {
  const double n = static_cast<double>(prob_.size());
  std::vector<double> dist(prob_.size(), 0.0);
  for (std::size_t i = 0; i < prob_.size(); ++i) {
    dist[i] += prob_[i] / n;
    dist[alias_[i]] += (1.0 - prob_[i]) / n;
  }
  return dist;
}

// ---------------------------------------------------------------------------
// CsrGraph

CsrGraph CsrGraph::from_edges(std::span<const WeightedEdge> edges, std::size_t node_count,
                              bool directed) {
  if (node_count > std::numeric_limits<NodeId>::max()) {
    throw std::invalid_argument("csr: node_count exceeds id range");
  }
  std::vector<WeightedEdge> arcs;
  arcs.reserve(directed ? edges.size() : 2 * edges.size());
  for (const WeightedEdge& e : edges) {
    if (e.src >= node_count || e.dst >= node_count) {
      throw std::out_of_range("csr: edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                              ") outside node range " + std::to_string(node_count));
    }
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw std::invalid_argument("csr: edge weights must be positive and finite");
    }
    arcs.push_back(e);
    if (!directed && e.src != e.dst) arcs.push_back({e.dst, e.src, e.weight});
  }
  // Weight is part of the key so duplicate weights are summed in a canonical order.
  std::sort(arcs.begin(), arcs.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    if (a.src != b.src) return a.src < b.src;
    if (a.dst != b.dst) return a.dst < b.dst;
    return a.weight < b.weight;
  });

  CsrGraph g;
  g.directed_ = directed;
  g.offsets_.assign(node_count + 1, 0);
  for (std::size_t i = 0; i < arcs.size();) {
    std::size_t j = i;
    double w = 0.0;
    while (j < arcs.size() && arcs[j].src == arcs[i].src && arcs[j].dst == arcs[i].dst) {
      w += arcs[j].weight;
      ++j;
    }
    g.targets_.push_back(arcs[i].dst);
    g.weights_.push_back(w);
    ++g.offsets_[arcs[i].src + 1];
    i = j;
  }
  std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
  return g;
}

CsrGraph CsrGraph::from_arrays(std::vector<std::uint64_t> offsets, std::vector<NodeId> targets,
                               std::vector<double> weights, bool directed) {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != targets.size() ||
      targets.size() != weights.size()) {
    throw DataError("csr: inconsistent array lengths");
  }
  const std::size_t n = offsets.size() - 1;
  for (std::size_t v = 0; v < n; ++v) {
    if (offsets[v] > offsets[v + 1]) throw DataError("csr: offsets must be non-decreasing");
    for (std::uint64_t k = offsets[v]; k < offsets[v + 1]; ++k) {
      if (targets[k] >= n) throw DataError("csr: target id out of range");
      if (k > offsets[v] && targets[k] <= targets[k - 1]) {
        throw DataError("csr: neighbor slice not strictly increasing");
      }
      if (!(weights[k] > 0.0) || !std::isfinite(weights[k])) {
        throw DataError("csr: non-positive weight");
      }
    }
  }
  CsrGraph g;
  g.offsets_ = std::move(offsets);
  g.targets_ = std::move(targets);
  g.weights_ = std::move(weights);
  g.directed_ = directed;
  return g;
}

void CsrGraph::check_node(NodeId v) const {
  if (v >= node_count()) {
    throw std::out_of_range("csr: node " + std::to_string(v) + " out of range");
  }
}

std::size_t CsrGraph::degree(NodeId v) const {
  check_node(v);
  return offsets_[v + 1] - offsets_[v];
}

std::span<const NodeId> CsrGraph::neighbors(NodeId v) const {
  check_node(v);
  return std::span<const NodeId>(targets_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
}

std::span<const double> CsrGraph::neighbor_weights(NodeId v) const {
  check_node(v);
  return std::span<const double>(weights_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
}

bool CsrGraph::has_edge(NodeId u, NodeId v) const {
  check_node(v);
  const auto slice = neighbors(u);
  return std::binary_search(slice.begin(), slice.end(), v);
}

void CsrGraph::save(std::ostream& out) const {
  out.write(kCsrMagic.data(), kCsrMagic.size());
  binio::put_u32(out, kCsrVersion);
  binio::put_u32(out, directed_ ? 1u : 0u);
  binio::put_u64(out, node_count());
  binio::put_u64(out, arc_count());
  for (std::uint64_t o : offsets_) binio::put_u64(out, o);
  for (NodeId t : targets_) binio::put_u32(out, t);
  for (double w : weights_) binio::put_f64(out, w);
  if (!out) throw std::runtime_error("csr: write failed");
}

CsrGraph CsrGraph::load(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kCsrMagic) throw DataError("csr: bad magic header");
  const auto version = binio::get_u32(in, "csr");
  if (version != kCsrVersion) throw DataError("csr: unsupported version " + std::to_string(version));
  const auto flags = binio::get_u32(in, "csr");
  const std::uint64_t n = binio::get_u64(in, "csr");
  const std::uint64_t m = binio::get_u64(in, "csr");
  if (n > std::numeric_limits<NodeId>::max() || m > (std::uint64_t{1} << 40)) {
    throw DataError("csr: header sizes out of range");
  }
  std::vector<std::uint64_t> offsets(n + 1);
  for (auto& o : offsets) o = binio::get_u64(in, "csr");
  std::vector<NodeId> targets(m);
  for (auto& t : targets) t = binio::get_u32(in, "csr");
  std::vector<double> weights(m);
  for (auto& w : weights) w = binio::get_f64(in, "csr");
  return from_arrays(std::move(offsets), std::move(targets), std::move(weights), (flags & 1u) != 0);
}

// ---------------------------------------------------------------------------
// FirstOrderTables

FirstOrderTables::FirstOrderTables(const CsrGraph& graph)
    : offsets_(graph.offsets().begin(), graph.offsets().end()),
      prob_(graph.arc_count()),
      alias_(graph.arc_count()) {
  for (NodeId v = 0; v < graph.node_count(); ++v) {
    const std::size_t begin = offsets_[v];
    const std::size_t len = offsets_[v + 1] - begin;
    if (len == 0) continue;
    detail::build_alias_into(graph.neighbor_weights(v),
                             std::span<double>(prob_).subspan(begin, len),
                             std::span<std::uint32_t>(alias_).subspan(begin, len));
  }
}

std::size_t FirstOrderTables::sample_slot(NodeId v, Rng& rng) const {
  const std::size_t begin = offsets_[v];
  const std::size_t len = offsets_[v + 1] - begin;
  const std::size_t column = uniform_index(rng, len);
  return uniform01(rng) < prob_[begin + column] ? column : alias_[begin + column];
}

std::vector<double> FirstOrderTables::distribution(NodeId v) const {
  const std::size_t begin = offsets_.at(v);
  const std::size_t len = offsets_.at(v + 1) - begin;
  std::vector<double> dist(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    dist[i] += prob_[begin + i] / static_cast<double>(len);
    dist[alias_[begin + i]] += (1.0 - prob_[begin + i]) / static_cast<double>(len);
  }
  return dist;
}

std::size_t FirstOrderTables::memory_bytes() const {
  return offsets_.capacity() * sizeof(std::uint64_t) + prob_.capacity() * sizeof(double) +
         alias_.capacity() * sizeof(std::uint32_t);
}

// ---------------------------------------------------------------------------
// Text edge lists

LabeledGraph read_edge_list(std::istream& in, bool directed) {
  LabeledGraph out;
  std::unordered_map<std::string, NodeId> ids;
  auto intern = [&](const std::string& label) {
    auto [it, inserted] = ids.emplace(label, static_cast<NodeId>(out.labels.size()));
    if (inserted) out.labels.push_back(label);
    return it->second;
  };

  std::vector<WeightedEdge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string src, dst, weight_text, extra;
    fields >> src >> dst;
    if (dst.empty()) throw DataError("edge list line " + std::to_string(line_no) + ": expected src and dst");
    double weight = 1.0;
    if (fields >> weight_text) {
      std::size_t used = 0;
      try {
        weight = std::stod(weight_text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != weight_text.size()) {
        throw DataError("edge list line " + std::to_string(line_no) + ": bad weight '" + weight_text + "'");
      }
      if (!(weight > 0.0) || !std::isfinite(weight)) {
        throw DataError("edge list line " + std::to_string(line_no) + ": weight must be positive");
      }
    }
    if (fields >> extra) throw DataError("edge list line " + std::to_string(line_no) + ": too many fields");
    const NodeId s = intern(src);
    const NodeId d = intern(dst);
    edges.push_back({s, d, weight});
  }
  out.graph = CsrGraph::from_edges(edges, out.labels.size(), directed);
  return out;
}

}  // namespace razorkit
