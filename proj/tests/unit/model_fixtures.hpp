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

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "razorkit/model.hpp"
#include "razorkit/random.hpp"
#include "razorkit/synth.hpp"
#include "razorkit/transactions.hpp"

namespace razorkit::testing {

/// Small random market for model-level tests.
inline TransactionTable small_market(std::size_t n_entities, std::size_t n_products, std::size_t n_records,
                                     std::uint64_t seed) {
  MarketConfig c;
  c.n_entities = n_entities;
  c.n_products = n_products;
  c.n_transactions = n_records;
  c.n_days = 20;
  c.seed = seed;
  return generate_market(c);
}

inline FeatureSet random_features(Rng& rng) {
  FeatureSet s;
  for (Feature f : kAllFeatures) {
    if (uniform01(rng) < 0.5) s.insert(f);
  }
  return s;
}

struct GradientProblem {
  TransactionTable table;
  FeatureScaler scaler;
  EncodedData data;
  std::vector<std::size_t> indices;
  ModelParams params;
};

/// Random model configuration (0-2 hidden layers, small widths, random feature subset) with
/// randomly initialized parameters and a random batch.
inline GradientProblem random_gradient_problem(Rng& rng) {
  const std::size_t n_entities = 3 + uniform_index(rng, 4);
  const std::size_t n_products = 1 + uniform_index(rng, 3);
  const std::size_t batch = 1 + uniform_index(rng, 12);
  GradientProblem p;
  p.table = small_market(n_entities, n_products, batch, rng());
  std::vector<std::size_t> all(batch);
  std::iota(all.begin(), all.end(), std::size_t{0});
  p.scaler = FeatureScaler::fit(p.table.records, all, n_entities, n_products);
  const FeatureSet features = random_features(rng);
  p.data = encode(p.table.records, all, features, p.scaler);
  for (std::size_t i = 0; i < batch; ++i) p.indices.push_back(uniform_index(rng, batch));
  ModelConfig cfg;
  cfg.entity_dim = 1 + uniform_index(rng, 3);
  cfg.product_dim = 1 + uniform_index(rng, 3);
  cfg.day_dim = 1 + uniform_index(rng, 2);
  cfg.hidden_sizes.clear();
  const std::size_t layers = uniform_index(rng, 3);
  for (std::size_t l = 0; l < layers; ++l) cfg.hidden_sizes.push_back(1 + uniform_index(rng, 6));
  cfg.dropout = 0.0;
  p.params = ModelParams(cfg, features, n_entities, n_products);
  p.params.initialize(rng);
  // Spread the biases so the two directions rarely tie.
  for (double& v : p.params.values()) v += 0.3 * (uniform01(rng) - 0.5);
  return p;
}

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  ///< parameters at a ReLU or max kink (one-sided slopes disagree)
};

/// Central differences with step h on every parameter. Differences at h and h/2 agree to
/// O(h^2) on smooth pieces; a parameter where they do not has a ReLU or max kink within h
/// and is counted as skipped instead of compared.
inline GradientCheck check_gradient(GradientProblem& p, double h) {
  Rng unused(0);
  const auto analytic = razor_gradient(p.params, p.data, p.indices, false, unused);
  auto values = p.params.values();
  auto central = [&](std::size_t i, double step) {
    const double saved = values[i];
    values[i] = saved + step;
    const double up = razor_loss(p.params, p.data, p.indices, false, unused).loss;
    values[i] = saved - step;
    const double down = razor_loss(p.params, p.data, p.indices, false, unused).loss;
    values[i] = saved;
    return (up - down) / (2.0 * step);
  };
  GradientCheck out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double c = central(i, h);
    const double c_half = central(i, 0.5 * h);
    if (std::abs(c - c_half) > 1e-7 + 1e-6 * std::abs(c)) {
      ++out.skipped;
      continue;
    }
    const double a = analytic.grad[i];
    const double err = std::abs(a - c) / std::max({std::abs(a), std::abs(c), 1e-6});
    out.max_rel_error = std::max(out.max_rel_error, err);
    ++out.checked;
  }
  return out;
}

}  // namespace razorkit::testing
