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

#include <Eigen/Dense>

#include "razorkit/graph.hpp"
#include "razorkit/random.hpp"
#include "razorkit/walker.hpp"

namespace razorkit {

struct SgnsParams {
  std::size_t dim = 128;
  std::size_t window = 10;
  std::size_t negatives = 5;
  double learning_rate = 0.025;
  std::size_t epochs = 1;
  double noise_power = 0.75;
  std::uint64_t seed = 0;
  /// 1 = deterministic single-threaded training. More workers apply lock-free racy updates.
  std::size_t workers = 1;

  void validate() const;
};

/// Input ("center") and output ("context") vectors, row-major node_count x dim.
class Embeddings {
 public:
  Embeddings() = default;
  Embeddings(std::size_t node_count, std::size_t dim)
      : node_count_(node_count), dim_(dim), in_(node_count * dim, 0.0), out_(node_count * dim, 0.0) {}

  std::size_t node_count() const { return node_count_; }
  std::size_t dim() const { return dim_; }

  std::span<double> in(NodeId v) { return {in_.data() + std::size_t{v} * dim_, dim_}; }
  std::span<const double> in(NodeId v) const { return {in_.data() + std::size_t{v} * dim_, dim_}; }
  std::span<double> out(NodeId v) { return {out_.data() + std::size_t{v} * dim_, dim_}; }
  std::span<const double> out(NodeId v) const { return {out_.data() + std::size_t{v} * dim_, dim_}; }

  std::span<const double> in_data() const { return in_; }
  std::span<const double> out_data() const { return out_; }

  bool all_finite() const;
  friend bool operator==(const Embeddings&, const Embeddings&) = default;

 private:
  std::size_t node_count_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> in_;
  std::vector<double> out_;
};

/// Negative-sampling noise: probability proportional to count^power over indices with count > 0.
class NoiseDistribution {
 public:
  /// Throws std::invalid_argument if no count is positive or a count is negative.
  NoiseDistribution(std::span<const double> counts, double power);

  NodeId sample(Rng& rng) const { return support_[table_.sample(rng)]; }
  /// Full-length probability vector (zero outside the support).
  std::vector<double> distribution() const;
  const AliasTable& table() const { return table_; }

 private:
  std::size_t size_;
  std::vector<NodeId> support_;
  AliasTable table_;
};

NoiseDistribution noise_distribution(std::span<const double> counts, double power = 0.75);

/// Fills `out` with noise draws, resampling any draw equal to `context` (a draw that still collides
/// after 64 retries is dropped). Returns the number of negatives written.
std::size_t draw_negatives(const NoiseDistribution& noise, NodeId context, std::span<NodeId> out, Rng& rng);

/// L = -log s(u.v_ctx) - sum_n log s(-u.v_n), u = in(center), v = out(.), s = logistic.
double sgns_pair_loss(const Embeddings& emb, NodeId center, NodeId context,
                      std::span<const NodeId> negatives);

struct SgnsGradient {
  std::vector<double> center;                  ///< dL/d in(center)
  std::vector<double> context;                 ///< dL/d out(context)
  std::vector<std::vector<double>> negatives;  ///< dL/d out(negatives[i]), duplicates repeated
};

SgnsGradient sgns_pair_gradient(const Embeddings& emb, NodeId center, NodeId context,
                                std::span<const NodeId> negatives);

/// One SGD step on L. All gradients use the pre-update vectors. Returns L before the step.
double sgns_pair_update(Embeddings& emb, NodeId center, NodeId context,
                        std::span<const NodeId> negatives, double lr);

/// Trains on freshly generated walks each pass; `walk.walks_per_node` passes per epoch.
/// Noise counts are node out-degrees. Returns the full matrices; in-vectors are the embedding.
Embeddings train_embeddings(const CsrGraph& g, const WalkParams& walk, const SgnsParams& params);

/// Mean-centered projection onto the top two covariance eigenvectors (power iteration with
/// deflation). Rows of `points` are observations. Requires at least two rows.
Eigen::MatrixX2d pca_2d(const Eigen::MatrixXd& points);
Eigen::MatrixX2d pca_2d(const Embeddings& emb);

/// Text dump: `node_count dim` then `label v1 ... v_dim` per node. Empty labels print indices.
void write_embeddings(std::ostream& out, const Embeddings& emb,
                      std::span<const std::string> labels = {});

}  // namespace razorkit
