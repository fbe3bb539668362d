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

#include "razorkit/sgns.hpp"

#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace razorkit {

namespace {

constexpr int kMaxNegativeResamples = 64;
constexpr double kPcaTolerance = 1e-9;
constexpr int kPcaMaxIterations = 10'000;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log s(x) without overflow for large |x|.
double log_logistic(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void SgnsParams::validate() const {
  if (dim < 1) throw std::invalid_argument("sgns: dim must be >= 1");
  if (window < 1) throw std::invalid_argument("sgns: window must be >= 1");
  if (negatives < 1) throw std::invalid_argument("sgns: negatives must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("sgns: learning_rate must be positive");
  if (epochs < 1) throw std::invalid_argument("sgns: epochs must be >= 1");
  if (!std::isfinite(noise_power)) throw std::invalid_argument("sgns: noise_power must be finite");
  if (workers < 1) throw std::invalid_argument("sgns: workers must be >= 1");
}

bool Embeddings::all_finite() const {
  for (double x : in_) if (!std::isfinite(x)) return false;
  for (double x : out_) if (!std::isfinite(x)) return false;
  return true;
}

NoiseDistribution::NoiseDistribution(std::span<const double> counts, double power)
    : size_(counts.size()) {
  std::vector<double> weights;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0.0) throw std::invalid_argument("noise: negative count");
    if (counts[i] > 0.0) {
      support_.push_back(static_cast<NodeId>(i));
      weights.push_back(std::pow(counts[i], power));
    }
  }
  if (support_.empty()) throw std::invalid_argument("noise: all counts are zero");
  table_ = AliasTable::build(weights);
}

std::vector<double> NoiseDistribution::distribution() const {
  std::vector<double> full(size_, 0.0);
  const auto local = table_.distribution();
  for (std::size_t i = 0; i < support_.size(); ++i) full[support_[i]] = local[i];
  return full;
}

NoiseDistribution noise_distribution(std::span<const double> counts, double power) {
  return NoiseDistribution(counts, power);
}

double sgns_pair_loss(const Embeddings& emb, NodeId center, NodeId context,
                      std::span<const NodeId> negatives) {
  const auto u = emb.in(center);
  double loss = -log_logistic(dot(u, emb.out(context)));
  for (NodeId n : negatives) loss -= log_logistic(-dot(u, emb.out(n)));
  return loss;
}

SgnsGradient sgns_pair_gradient(const Embeddings& emb, NodeId center, NodeId context,
                                std::span<const NodeId> negatives) {
  const std::size_t d = emb.dim();
  const auto u = emb.in(center);
  SgnsGradient g;
  g.center.assign(d, 0.0);
  g.context.assign(d, 0.0);

  const auto vc = emb.out(context);
  const double gc = logistic(dot(u, vc)) - 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    g.center[i] += gc * vc[i];
    g.context[i] = gc * u[i];
  }
  for (NodeId n : negatives) {
    const auto vn = emb.out(n);
    const double gn = logistic(dot(u, vn));
    std::vector<double> gv(d);
    for (std::size_t i = 0; i < d; ++i) {
      g.center[i] += gn * vn[i];
      gv[i] = gn * u[i];
    }
    g.negatives.push_back(std::move(gv));
  }
  return g;
}

double sgns_pair_update(Embeddings& emb, NodeId center, NodeId context,
                        std::span<const NodeId> negatives, double lr) {
  const std::size_t d = emb.dim();
  thread_local std::vector<double> u_old, u_grad;
  u_old.assign(emb.in(center).begin(), emb.in(center).end());
  u_grad.assign(d, 0.0);

  auto apply = [&](NodeId target, double score_grad) {
    auto v = emb.out(target);
    for (std::size_t i = 0; i < d; ++i) {
      u_grad[i] += score_grad * v[i];
      v[i] -= lr * score_grad * u_old[i];
    }
  };

  double loss = 0.0;
  const double sc = dot(u_old, emb.out(context));
  loss -= log_logistic(sc);
  std::vector<double> scores;
  scores.reserve(negatives.size());
  for (NodeId n : negatives) scores.push_back(dot(u_old, emb.out(n)));
  for (double s : scores) loss -= log_logistic(-s);

  // A repeated target would see an already-moved out-vector; fall back to the full gradient.
  bool repeats = false;
  for (std::size_t a = 0; a < negatives.size() && !repeats; ++a) {
    if (negatives[a] == context) repeats = true;
    for (std::size_t b = 0; b < a && !repeats; ++b) repeats = negatives[a] == negatives[b];
  }
  if (!repeats) {
    apply(context, logistic(sc) - 1.0);
    for (std::size_t k = 0; k < negatives.size(); ++k) apply(negatives[k], logistic(scores[k]));
  } else {
    const SgnsGradient g = sgns_pair_gradient(emb, center, context, negatives);
    auto vc = emb.out(context);
    for (std::size_t i = 0; i < d; ++i) vc[i] -= lr * g.context[i];
    for (std::size_t k = 0; k < negatives.size(); ++k) {
      auto vn = emb.out(negatives[k]);
      for (std::size_t i = 0; i < d; ++i) vn[i] -= lr * g.negatives[k][i];
    }
    u_grad = g.center;
  }
  auto u = emb.in(center);
  for (std::size_t i = 0; i < d; ++i) u[i] -= lr * u_grad[i];
  return loss;
}

std::size_t draw_negatives(const NoiseDistribution& noise, NodeId context, std::span<NodeId> out, Rng& rng) {
  std::size_t k = 0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    NodeId cand = noise.sample(rng);
    for (int r = 0; cand == context && r < kMaxNegativeResamples; ++r) cand = noise.sample(rng);
    if (cand != context) out[k++] = cand;
  }
  return k;
}

Embeddings train_embeddings(const CsrGraph& g, const WalkParams& walk, const SgnsParams& params) {
  walk.validate();
  params.validate();
  const std::size_t n = g.node_count();
  if (n == 0) throw std::invalid_argument("sgns: empty graph");

  Embeddings emb(n, params.dim);
  {
    Rng init(derive_seed(params.seed, {0x1a17}));
    const double half = 0.5 / static_cast<double>(params.dim);
    for (NodeId v = 0; v < n; ++v) {
      for (double& x : emb.in(v)) x = (2.0 * uniform01(init) - 1.0) * half;
    }
  }

  std::vector<double> counts(n);
  std::size_t eligible = 0;
  for (NodeId v = 0; v < n; ++v) {
    counts[v] = static_cast<double>(g.degree(v));
    if (counts[v] > 0) ++eligible;
  }
  if (eligible == 0) return emb;
  const NoiseDistribution noise(counts, params.noise_power);
  const FirstOrderTables tables(g);

  const std::size_t passes = params.epochs * walk.walks_per_node;
  const double scheduled = static_cast<double>(passes) * static_cast<double>(eligible) *
                           static_cast<double>(walk.walk_length);
  std::atomic<std::uint64_t> processed{0};

  // Trains on start nodes [begin, end) of one pass.
  auto consume = [&](const WalkStream& stream, std::size_t begin, std::size_t end, Rng& rng) {
    std::vector<NodeId> path;
    std::vector<NodeId> negs(params.negatives);
    path.reserve(walk.walk_length);
    for (std::size_t w = begin; w < end; ++w) {
      stream.walk_from(stream.start_node(w), path);
      for (std::size_t s = 0; s < path.size(); ++s) {
        const double done = static_cast<double>(processed.fetch_add(1, std::memory_order_relaxed));
        const double lr = params.learning_rate * std::max(0.01, 1.0 - 0.99 * done / scheduled);
        const std::size_t lo = s >= params.window ? s - params.window : 0;
        const std::size_t hi = std::min(path.size() - 1, s + params.window);
        for (std::size_t t = lo; t <= hi; ++t) {
          if (t == s) continue;
          const NodeId context = path[t];
          const std::size_t k = draw_negatives(noise, context, negs, rng);
          sgns_pair_update(emb, path[s], context, std::span<const NodeId>(negs.data(), k), lr);
        }
      }
    }
  };

  for (std::size_t pass = 0; pass < passes; ++pass) {
    const WalkStream stream(g, tables, walk, pass);
    if (params.workers == 1) {
      Rng rng(derive_seed(params.seed, {0x5e95, pass}));
      consume(stream, 0, stream.size(), rng);
      continue;
    }
    // Hogwild: workers share the matrices without locks.
    std::vector<std::thread> pool;
    const std::size_t chunk = (stream.size() + params.workers - 1) / params.workers;
    for (std::size_t w = 0; w < params.workers; ++w) {
      const std::size_t begin = std::min(stream.size(), w * chunk);
      const std::size_t end = std::min(stream.size(), begin + chunk);
      pool.emplace_back([&, begin, end, w] {
        Rng rng(derive_seed(params.seed, {0x5e95, pass, w + 1}));
        consume(stream, begin, end, rng);
      });
    }
    for (auto& t : pool) t.join();
  }
  return emb;
}

Eigen::MatrixX2d pca_2d(const Eigen::MatrixXd& points) {
  if (points.rows() < 2) throw std::invalid_argument("pca: need at least two rows");
  const Eigen::MatrixXd centered = points.rowwise() - points.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(points.rows());
  const Eigen::Index d = cov.cols();

  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d, 2);
  const double scale = std::max(cov.diagonal().maxCoeff(), 0.0);
  Rng rng(0x9ca);
  for (int c = 0; c < 2 && c < d; ++c) {
    if (scale == 0.0) break;
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = uniform01(rng) - 0.5;
    if (c == 1) v -= basis.col(0) * basis.col(0).dot(v);
    v.normalize();
    bool degenerate = false;
    for (int it = 0; it < kPcaMaxIterations; ++it) {
      Eigen::VectorXd next = cov * v;
      if (c == 1) next -= basis.col(0) * basis.col(0).dot(next);
      const double norm = next.norm();
      if (norm <= 1e-12 * scale) {
        degenerate = true;
        break;
      }
      next /= norm;
      const double change = (next - v).norm();
      v = next;
      if (change < kPcaTolerance) break;
    }
    if (degenerate) break;
    basis.col(c) = v;
    const double lambda = v.dot(cov * v);
    cov -= lambda * v * v.transpose();  // deflation
  }
  return centered * basis;
}

Eigen::MatrixX2d pca_2d(const Embeddings& emb) {
  Eigen::MatrixXd pts(emb.node_count(), emb.dim());
  for (std::size_t v = 0; v < emb.node_count(); ++v) {
    const auto row = emb.in(static_cast<NodeId>(v));
    for (std::size_t j = 0; j < emb.dim(); ++j) pts(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(j)) = row[j];
  }
  return pca_2d(pts);
}

void write_embeddings(std::ostream& out, const Embeddings& emb, std::span<const std::string> labels) {
  out << emb.node_count() << ' ' << emb.dim() << '\n';
  out << std::setprecision(9);
  for (std::size_t v = 0; v < emb.node_count(); ++v) {
    if (v < labels.size()) {
      out << labels[v];
    } else {
      out << v;
    }
    for (double x : emb.in(static_cast<NodeId>(v))) out << ' ' << x;
    out << '\n';
  }
}

}  // namespace razorkit
