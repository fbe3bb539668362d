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

#include "razorkit/walker.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace razorkit {

namespace {

constexpr std::uint64_t kShuffleStream = 0xffffffffffffffffULL;

void require_neighbors(const CsrGraph& g, NodeId v) {
  if (g.degree(v) == 0) {
    throw std::invalid_argument("walk: node " + std::to_string(v) + " has no neighbors");
  }
}

}  // namespace

void WalkParams::validate() const {
  if (!(p > 0.0)) throw std::invalid_argument("walk: p must be positive");
  if (!(q > 0.0)) throw std::invalid_argument("walk: q must be positive");
  if (walk_length < 2) throw std::invalid_argument("walk: walk_length must be >= 2");
  if (walks_per_node < 1) throw std::invalid_argument("walk: walks_per_node must be >= 1");
}

double alpha(const CsrGraph& g, NodeId t, NodeId x, double p, double q) {
  if (x == t) return 1.0 / p;
  if (g.has_edge(t, x)) return 1.0;
  return 1.0 / q;
}

double alpha_max(double p, double q) { return std::max({1.0, 1.0 / p, 1.0 / q}); }

double rejection_bound(double p, double q) {
  const double hi = std::max({1.0, p, q});
  const double lo = std::min({1.0, p, q});
  return hi / lo;
}

std::vector<double> exact_step_distribution(const CsrGraph& g, NodeId t, NodeId v, double p,
                                            double q) {
  require_neighbors(g, v);
  const auto out = g.neighbors(v);
  const auto w = g.neighbor_weights(v);
  const auto back = g.neighbors(t);
  std::vector<double> probs(out.size());
  double total = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const NodeId x = out[i];
    while (j < back.size() && back[j] < x) ++j;
    double a;
    if (x == t) {
      a = 1.0 / p;
    } else if (j < back.size() && back[j] == x) {
      a = 1.0;
    } else {
      a = 1.0 / q;
    }
    probs[i] = w[i] * a;
    total += probs[i];
  }
  for (double& pr : probs) pr /= total;
  return probs;
}

NodeId step_exact(const CsrGraph& g, NodeId t, NodeId v, const WalkParams& params, Rng& rng) {
  const auto probs = exact_step_distribution(g, t, v, params.p, params.q);
  const auto out = g.neighbors(v);
  double u = uniform01(rng);
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    if (u < probs[i]) return out[i];
    u -= probs[i];
  }
  return out.back();
}

NodeId step_rejection(const CsrGraph& g, NodeId t, NodeId v, const WalkParams& params,
                      const FirstOrderTables& tables, Rng& rng, StepStats* stats) {
  require_neighbors(g, v);
  const auto out = g.neighbors(v);
  const double scale = 1.0 / alpha_max(params.p, params.q);
  for (std::uint64_t trial = 1; trial <= kMaxRejectionProposals; ++trial) {
    const NodeId x = out[tables.sample_slot(v, rng)];
    const double accept = alpha(g, t, x, params.p, params.q) * scale;
    if (uniform01(rng) < accept) {
      if (stats != nullptr) {
        ++stats->steps;
        stats->proposals += trial;
      }
      return x;
    }
  }
  if (stats != nullptr) stats->proposals += kMaxRejectionProposals;
  throw std::runtime_error("walk: rejection sampler exceeded " +
                           std::to_string(kMaxRejectionProposals) + " proposals at node " +
                           std::to_string(v));
}

void generate_walk(const CsrGraph& g, NodeId start, const WalkParams& params,
                   const FirstOrderTables& tables, Rng& rng, std::vector<NodeId>& walk,
                   StepStats* stats) {
  require_neighbors(g, start);
  walk.clear();
  walk.push_back(start);
  const auto first = g.neighbors(start);
  walk.push_back(first[tables.sample_slot(start, rng)]);
  while (walk.size() < params.walk_length) {
    const NodeId v = walk.back();
    if (g.degree(v) == 0) break;  // directed dead end
    const NodeId t = walk[walk.size() - 2];
    walk.push_back(step_rejection(g, t, v, params, tables, rng, stats));
  }
}

std::vector<NodeId> generate_walk(const CsrGraph& g, NodeId start, const WalkParams& params,
                                  const FirstOrderTables& tables, Rng& rng) {
  std::vector<NodeId> walk;
  walk.reserve(params.walk_length);
  generate_walk(g, start, params, tables, rng, walk);
  return walk;
}

WalkStream::WalkStream(const CsrGraph& g, const FirstOrderTables& tables, WalkParams params,
                       std::uint64_t epoch)
    : graph_(&g), tables_(&tables), params_(params), epoch_(epoch) {
  params_.validate();
  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (g.degree(v) > 0) order_.push_back(v);
  }
  Rng rng(derive_seed(params_.seed, {kShuffleStream, epoch_}));
  // Fisher-Yates with our own index draw so the order is portable.
  for (std::size_t i = order_.size(); i > 1; --i) {
    std::swap(order_[i - 1], order_[uniform_index(rng, i)]);
  }
}

void WalkStream::walk_from(NodeId start, std::vector<NodeId>& walk, StepStats* stats) const {
  Rng rng(derive_seed(params_.seed, {start, epoch_}));
  generate_walk(*graph_, start, params_, *tables_, rng, walk, stats);
}

bool WalkStream::next(std::vector<NodeId>& walk) {
  if (cursor_ >= order_.size()) return false;
  walk_from(order_[cursor_++], walk);
  return true;
}

}  // namespace razorkit
