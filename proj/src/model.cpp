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

#include "razorkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "binary_io.hpp"
#include "razorkit/error.hpp"

namespace razorkit {

namespace {

constexpr std::size_t kDays = 7;
constexpr double kEmbeddingInitRange = 0.05;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double safe_std(double variance) {
  const double s = std::sqrt(std::max(variance, 0.0));
  return s > 1e-12 ? s : 1.0;
}

void fill_numeric(const TransactionRecord& r, Side side, FeatureSet features, const FeatureScaler& s,
                  double* out) {
  std::size_t k = 0;
  if (features.contains(Feature::kDirection)) out[k++] = side == Side::kBuyer ? 1.0 : 0.0;
  if (features.contains(Feature::kNotional)) {
    out[k++] = (std::log(r.notional) - s.log_notional_mean) / s.log_notional_std;
  }
  if (features.contains(Feature::kPrice)) {
    out[k++] = (r.price - s.price_mean.at(r.product)) / s.price_std.at(r.product);
  }
  if (features.contains(Feature::kMarketPrice)) {
    out[k++] = (r.market_price - s.market_mean.at(r.product)) / s.market_std.at(r.product);
  }
  if (features.contains(Feature::kTime)) out[k++] = r.time_of_day;
  if (features.contains(Feature::kDealerSpread)) {
    if (r.dealer_spreads.size() != s.spread_mean.size()) {
      throw std::out_of_range("featurize: dealer_spreads width mismatch");
    }
    for (std::size_t i = 0; i < r.dealer_spreads.size(); ++i) {
      out[k++] = (r.dealer_spreads[i] - s.spread_mean[i]) / s.spread_std[i];
    }
  }
}

// Forward activations kept for the backward pass.
struct ForwardCache {
  std::vector<RowMatrix> acts;   // acts[0] = input, acts[h + 1] = output of hidden layer h
  std::vector<RowMatrix> gates;  // d acts[h + 1] / d preactivation: relu' times dropout scale
  RowMatrix logp;
};

// Rows of `x` are inputs; `chooser[r]` is masked out of row r's softmax.
void run_network(const ModelParams& params, RowMatrix x, std::span<const std::int32_t> chooser,
                 bool train_mode, Rng& rng, ForwardCache& cache) {
  const std::size_t layers = params.layer_count();
  const double drop = params.config().dropout;
  const bool use_dropout = train_mode && drop > 0.0;
  const double keep_scale = use_dropout ? 1.0 / (1.0 - drop) : 1.0;

  cache.acts.clear();
  cache.gates.clear();
  cache.acts.push_back(std::move(x));
  for (std::size_t l = 0; l < layers; ++l) {
    const auto w = params.view(params.weight_block(l));
    const auto b = params.view(params.bias_block(l));
    RowMatrix z = cache.acts.back() * w.transpose();
    z.rowwise() += b.row(0);
    if (l + 1 == layers) {
      cache.logp = std::move(z);
      break;
    }
    RowMatrix gate(z.rows(), z.cols());
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        double g = z(r, c) > 0.0 ? 1.0 : 0.0;
        if (use_dropout) g *= uniform01(rng) < 1.0 - drop ? keep_scale : 0.0;
        gate(r, c) = g;
      }
    }
    cache.acts.push_back(z.cwiseProduct(gate));
    cache.gates.push_back(std::move(gate));
  }

  auto& lp = cache.logp;
  for (Eigen::Index r = 0; r < lp.rows(); ++r) {
    lp(r, chooser[r]) = kNegInf;
    const double m = lp.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < lp.cols(); ++c) sum += std::exp(lp(r, c) - m);
    const double lse = m + std::log(sum);
    for (Eigen::Index c = 0; c < lp.cols(); ++c) lp(r, c) -= lse;
    lp(r, chooser[r]) = kNegInf;
  }
}

// Writes the embedding and numeric columns of one input row.
void fill_input_row(const ModelParams& params, std::int32_t entity, std::int32_t product, std::int32_t day,
                    const double* numeric, std::size_t numeric_cols, double* row) {
  std::size_t k = 0;
  auto copy_embedding = [&](const ParamBlock& block, std::int32_t id, const char* what) {
    if (block.size() == 0) return;
    if (id < 0 || static_cast<std::size_t>(id) >= block.rows) {
      throw std::out_of_range(std::string("model: ") + what + " id out of range");
    }
    const double* src = params.values().data() + block.offset + static_cast<std::size_t>(id) * block.cols;
    std::copy(src, src + block.cols, row + k);
    k += block.cols;
  };
  copy_embedding(params.entity_block(), entity, "entity");
  copy_embedding(params.product_block(), product, "product");
  copy_embedding(params.day_block(), day, "day");
  std::copy(numeric, numeric + numeric_cols, row + k);
}

// Input rows for items `indices`: rows [0, B) have the buyer choosing, rows [B, 2B) the seller.
RowMatrix build_pair_inputs(const ModelParams& params, const EncodedData& data,
                            std::span<const std::size_t> indices, std::vector<std::int32_t>& chooser) {
  const std::size_t batch = indices.size();
  RowMatrix x(2 * batch, params.input_width());
  chooser.resize(2 * batch);
  for (int s = 0; s < 2; ++s) {
    const auto& numeric = data.numeric[s];
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t item = indices[i];
      const std::size_t row = s * batch + i;
      chooser[row] = data.chooser[s][item];
      // numeric is column-major; gather the row into a small buffer.
      thread_local std::vector<double> buf;
      buf.resize(static_cast<std::size_t>(numeric.cols()));
      for (Eigen::Index c = 0; c < numeric.cols(); ++c) buf[c] = numeric(static_cast<Eigen::Index>(item), c);
      fill_input_row(params, data.chooser[s][item], data.product[item], data.day[item], buf.data(), buf.size(),
                     x.row(static_cast<Eigen::Index>(row)).data());
    }
  }
  return x;
}

struct PairForward {
  ForwardCache cache;
  std::vector<std::int32_t> chooser;
  RazorLoss loss;
};

PairForward pair_forward(const ModelParams& params, const EncodedData& data, std::span<const std::size_t> indices,
                         bool train_mode, Rng& rng) {
  if (indices.empty()) throw std::invalid_argument("razor_loss: empty batch");
  PairForward out;
  RowMatrix x = build_pair_inputs(params, data, indices, out.chooser);
  run_network(params, std::move(x), out.chooser, train_mode, rng, out.cache);

  const std::size_t batch = indices.size();
  const auto& lp = out.cache.logp;
  out.loss.item_losses.resize(batch);
  out.loss.directions.resize(batch);
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const auto buyer_row = static_cast<Eigen::Index>(i);
    const auto seller_row = static_cast<Eigen::Index>(batch + i);
    const double buyer_view = lp(buyer_row, out.chooser[seller_row]);  // log f(buyer, c)[seller]
    const double seller_view = lp(seller_row, out.chooser[buyer_row]);
    const bool buyer_wins = buyer_view >= seller_view;
    out.loss.directions[i] = buyer_wins ? Side::kBuyer : Side::kSeller;
    out.loss.item_losses[i] = -(buyer_wins ? buyer_view : seller_view);
    total += out.loss.item_losses[i];
  }
  out.loss.loss = total / static_cast<double>(batch);
  return out;
}

}  // namespace

void ModelConfig::validate() const {
  if (entity_dim < 1 || product_dim < 1 || day_dim < 1) {
    throw std::invalid_argument("model: embedding widths must be >= 1");
  }
  if (hidden_sizes.size() > 2) throw std::invalid_argument("model: at most two hidden layers");
  for (std::size_t h : hidden_sizes) {
    if (h < 1) throw std::invalid_argument("model: hidden sizes must be >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("model: dropout must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("model: learning_rate must be positive");
  if (!(early_stop_alpha > 0.0 && early_stop_alpha <= 1.0)) {
    throw std::invalid_argument("model: early_stop_alpha must be in (0, 1]");
  }
  if (early_stop_k < 1) throw std::invalid_argument("model: early_stop_k must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("model: max_epochs must be >= 1");
}

FeatureScaler FeatureScaler::fit(std::span<const TransactionRecord> records, std::span<const std::size_t> indices,
                                 std::size_t n_entities, std::size_t n_products) {
  FeatureScaler s;
  std::vector<double> count(n_products, 0.0), p_sum(n_products, 0.0), p_sq(n_products, 0.0),
      m_sum(n_products, 0.0), m_sq(n_products, 0.0), d_sum(n_entities, 0.0), d_sq(n_entities, 0.0);
  double n_sum = 0.0, n_sq = 0.0;
  for (std::size_t idx : indices) {
    const auto& r = records[idx];
    if (r.product >= n_products) throw std::out_of_range("scaler: product id out of range");
    count[r.product] += 1.0;
    p_sum[r.product] += r.price;
    p_sq[r.product] += r.price * r.price;
    m_sum[r.product] += r.market_price;
    m_sq[r.product] += r.market_price * r.market_price;
    const double ln = std::log(r.notional);
    n_sum += ln;
    n_sq += ln * ln;
    for (std::size_t i = 0; i < n_entities && i < r.dealer_spreads.size(); ++i) {
      d_sum[i] += r.dealer_spreads[i];
      d_sq[i] += r.dealer_spreads[i] * r.dealer_spreads[i];
    }
  }
  s.price_mean.assign(n_products, 0.0);
  s.price_std.assign(n_products, 1.0);
  s.market_mean.assign(n_products, 0.0);
  s.market_std.assign(n_products, 1.0);
  for (std::size_t p = 0; p < n_products; ++p) {
    if (count[p] == 0.0) continue;
    s.price_mean[p] = p_sum[p] / count[p];
    s.price_std[p] = safe_std(p_sq[p] / count[p] - s.price_mean[p] * s.price_mean[p]);
    s.market_mean[p] = m_sum[p] / count[p];
    s.market_std[p] = safe_std(m_sq[p] / count[p] - s.market_mean[p] * s.market_mean[p]);
  }
  const double n = static_cast<double>(indices.size());
  s.spread_mean.assign(n_entities, 0.0);
  s.spread_std.assign(n_entities, 1.0);
  if (n > 0) {
    s.log_notional_mean = n_sum / n;
    s.log_notional_std = safe_std(n_sq / n - s.log_notional_mean * s.log_notional_mean);
    for (std::size_t i = 0; i < n_entities; ++i) {
      s.spread_mean[i] = d_sum[i] / n;
      s.spread_std[i] = safe_std(d_sq[i] / n - s.spread_mean[i] * s.spread_mean[i]);
    }
  }
  return s;
}

std::size_t numeric_width(FeatureSet features, std::size_t n_entities) {
  std::size_t w = 0;
  for (Feature f : {Feature::kDirection, Feature::kNotional, Feature::kPrice, Feature::kMarketPrice, Feature::kTime}) {
    if (features.contains(f)) ++w;
  }
  if (features.contains(Feature::kDealerSpread)) w += n_entities;
  return w;
}

Featurized featurize(const TransactionRecord& txn, Side chooser, FeatureSet features, const FeatureScaler& scaler) {
  const std::size_t n_entities = scaler.spread_mean.size();
  const std::size_t n_products = scaler.price_mean.size();
  if (txn.buyer >= n_entities || txn.seller >= n_entities) throw std::out_of_range("featurize: unknown entity");
  if (txn.product >= n_products) throw std::out_of_range("featurize: unknown product");
  if (txn.day >= kDays) throw std::out_of_range("featurize: day out of range");

  Featurized f;
  f.chooser = chooser == Side::kBuyer ? txn.buyer : txn.seller;
  f.target = chooser == Side::kBuyer ? txn.seller : txn.buyer;
  if (features.contains(Feature::kEntity)) f.input.entity = static_cast<std::int32_t>(f.chooser);
  if (features.contains(Feature::kProduct)) f.input.product = static_cast<std::int32_t>(txn.product);
  if (features.contains(Feature::kDay)) f.input.day = txn.day;
  f.input.numeric.resize(numeric_width(features, n_entities));
  fill_numeric(txn, chooser, features, scaler, f.input.numeric.data());
  return f;
}

ModelParams::ModelParams(const ModelConfig& config, FeatureSet features, std::size_t n_entities,
                         std::size_t n_products)
    : config_(config), features_(features), n_entities_(n_entities), n_products_(n_products) {
  config_.validate();
  if (n_entities < 2) throw std::invalid_argument("model: need at least two entities");
  if (features.contains(Feature::kEntity)) entity_ = reserve(n_entities, config.entity_dim);
  if (features.contains(Feature::kProduct)) product_ = reserve(n_products, config.product_dim);
  if (features.contains(Feature::kDay)) day_ = reserve(kDays, config.day_dim);
  input_width_ = entity_.cols + product_.cols + day_.cols + numeric_width(features, n_entities);

  std::size_t fan_in = input_width_;
  for (std::size_t h : config.hidden_sizes) {
    weights_.push_back(reserve(h, fan_in));
    biases_.push_back(reserve(1, h));
    fan_in = h;
  }
  weights_.push_back(reserve(n_entities, fan_in));
  biases_.push_back(reserve(1, n_entities));
}

ParamBlock ModelParams::reserve(std::size_t rows, std::size_t cols) {
  ParamBlock b{values_.size(), rows, cols};
  values_.resize(values_.size() + rows * cols, 0.0);
  return b;
}

void ModelParams::initialize(Rng& rng) {
  auto fill = [&](const ParamBlock& b, double range) {
    for (std::size_t i = 0; i < b.size(); ++i) values_[b.offset + i] = (2.0 * uniform01(rng) - 1.0) * range;
  };
  fill(entity_, kEmbeddingInitRange);
  fill(product_, kEmbeddingInitRange);
  fill(day_, kEmbeddingInitRange);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    const double fan_sum = static_cast<double>(w.rows + w.cols);
    fill(w, fan_sum > 0 ? std::sqrt(6.0 / fan_sum) : 0.0);
    std::fill_n(values_.begin() + static_cast<std::ptrdiff_t>(biases_[l].offset), biases_[l].size(), 0.0);
  }
}

bool ModelParams::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

std::vector<double> forward(const ModelParams& params, const ModelInput& input, EntityId chooser, bool train_mode,
                            Rng& rng) {
  if (chooser >= params.n_entities()) throw std::out_of_range("forward: chooser out of range");
  const std::size_t numeric_cols = numeric_width(params.features(), params.n_entities());
  if (input.numeric.size() != numeric_cols) throw std::invalid_argument("forward: numeric width mismatch");
  RowMatrix x(1, params.input_width());
  fill_input_row(params, input.entity, input.product, input.day, input.numeric.data(), numeric_cols, x.data());
  const std::int32_t who = static_cast<std::int32_t>(chooser);
  ForwardCache cache;
  run_network(params, std::move(x), std::span<const std::int32_t>(&who, 1), train_mode, rng, cache);
  std::vector<double> probs(params.n_entities());
  for (std::size_t c = 0; c < probs.size(); ++c) probs[c] = std::exp(cache.logp(0, static_cast<Eigen::Index>(c)));
  return probs;
}

EncodedData encode(std::span<const TransactionRecord> records, std::span<const std::size_t> indices,
                   FeatureSet features, const FeatureScaler& scaler) {
  const std::size_t n_entities = scaler.spread_mean.size();
  const std::size_t width = numeric_width(features, n_entities);
  EncodedData d;
  d.size = indices.size();
  for (int s = 0; s < 2; ++s) {
    d.chooser[s].resize(d.size);
    d.numeric[s].resize(static_cast<Eigen::Index>(d.size), static_cast<Eigen::Index>(width));
  }
  d.product.resize(d.size);
  d.day.resize(d.size);
  std::vector<double> row(width);
  for (std::size_t i = 0; i < d.size; ++i) {
    const auto& r = records[indices[i]];
    for (int s = 0; s < 2; ++s) {
      const Featurized f = featurize(r, static_cast<Side>(s), features, scaler);
      d.chooser[s][i] = static_cast<std::int32_t>(f.chooser);
      for (std::size_t c = 0; c < width; ++c) {
        d.numeric[s](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = f.input.numeric[c];
      }
    }
    d.product[i] = static_cast<std::int32_t>(r.product);
    d.day[i] = r.day;
  }
  return d;
}

RazorLoss razor_loss(const ModelParams& params, const EncodedData& data, std::span<const std::size_t> indices,
                     bool train_mode, Rng& rng) {
  return pair_forward(params, data, indices, train_mode, rng).loss;
}

double fixed_direction_cross_entropy(const ModelParams& params, const EncodedData& data,
                                     std::span<const std::size_t> indices, std::span<const Side> directions) {
  if (indices.size() != directions.size()) throw std::invalid_argument("cross_entropy: size mismatch");
  if (indices.empty()) throw std::invalid_argument("cross_entropy: empty batch");
  const std::size_t n = indices.size();
  const std::size_t numeric_cols = numeric_width(params.features(), params.n_entities());
  RowMatrix x(n, params.input_width());
  std::vector<std::int32_t> chooser(n), target(n);
  std::vector<double> buf(numeric_cols);
  for (std::size_t i = 0; i < n; ++i) {
    const int s = static_cast<int>(directions[i]);
    const std::size_t item = indices[i];
    chooser[i] = data.chooser[s][item];
    target[i] = data.chooser[1 - s][item];
    for (std::size_t c = 0; c < numeric_cols; ++c) {
      buf[c] = data.numeric[s](static_cast<Eigen::Index>(item), static_cast<Eigen::Index>(c));
    }
    fill_input_row(params, chooser[i], data.product[item], data.day[item], buf.data(), numeric_cols,
                   x.row(static_cast<Eigen::Index>(i)).data());
  }
  Rng unused(0);
  ForwardCache cache;
  run_network(params, std::move(x), chooser, false, unused, cache);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total -= cache.logp(static_cast<Eigen::Index>(i), target[i]);
  return total / static_cast<double>(n);
}

RazorGradient razor_gradient(const ModelParams& params, const EncodedData& data, std::span<const std::size_t> indices,
                             bool train_mode, Rng& rng) {
  PairForward fwd = pair_forward(params, data, indices, train_mode, rng);
  const std::size_t batch = indices.size();
  const std::size_t layers = params.layer_count();

  // Only the winning row of each item carries gradient.
  std::vector<Eigen::Index> rows(batch);
  std::vector<std::int32_t> targets(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const bool buyer = fwd.loss.directions[i] == Side::kBuyer;
    rows[i] = static_cast<Eigen::Index>(buyer ? i : batch + i);
    targets[i] = fwd.chooser[buyer ? batch + i : i];
  }

  RowMatrix dz = fwd.cache.logp(rows, Eigen::all).array().exp().matrix();
  for (std::size_t i = 0; i < batch; ++i) dz(static_cast<Eigen::Index>(i), targets[i]) -= 1.0;
  dz /= static_cast<double>(batch);

  RazorGradient out;
  out.grad.assign(params.values().size(), 0.0);
  auto grad_view = [&](const ParamBlock& b) {
    return ModelParams::RowMatrixMap(out.grad.data() + b.offset, Eigen::Index(b.rows), Eigen::Index(b.cols));
  };

  RowMatrix dx;
  for (std::size_t l = layers; l-- > 0;) {
    const RowMatrix a = fwd.cache.acts[l](rows, Eigen::all);
    grad_view(params.weight_block(l)) += dz.transpose() * a;
    grad_view(params.bias_block(l)) += dz.colwise().sum();
    RowMatrix da = dz * params.view(params.weight_block(l));
    if (l == 0) {
      dx = std::move(da);
    } else {
      dz = da.cwiseProduct(fwd.cache.gates[l - 1](rows, Eigen::all));
    }
  }

  // Scatter input gradients into the embedding tables.
  std::size_t col = 0;
  auto scatter = [&](const ParamBlock& block, auto id_of) {
    if (block.size() == 0) return;
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t id = static_cast<std::size_t>(id_of(i));
      double* dst = out.grad.data() + block.offset + id * block.cols;
      for (std::size_t c = 0; c < block.cols; ++c) dst[c] += dx(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col + c));
    }
    col += block.cols;
  };
  scatter(params.entity_block(), [&](std::size_t i) { return fwd.chooser[static_cast<std::size_t>(rows[i])]; });
  scatter(params.product_block(), [&](std::size_t i) { return data.product[indices[i]]; });
  scatter(params.day_block(), [&](std::size_t i) { return data.day[indices[i]]; });

  out.loss = std::move(fwd.loss);
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam: shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = AdamState::kBeta1 * state.m[i] + (1.0 - AdamState::kBeta1) * g;
    state.v[i] = AdamState::kBeta2 * state.v[i] + (1.0 - AdamState::kBeta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
  }
}

EarlyStopper::EarlyStopper(double alpha, std::size_t k) : alpha_(alpha), k_(k), counter_(k) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("early stop: alpha must be in (0, 1]");
  if (k < 1) throw std::invalid_argument("early stop: k must be >= 1");
}

bool EarlyStopper::update(double train_loss) {
  if (train_loss < alpha_ * best_) {
    best_ = train_loss;
    counter_ = k_;
  } else if (counter_ > 0) {
    --counter_;
  }
  return counter_ == 0;
}

ChronologicalSplit chronological_split(std::span<const TransactionRecord> records, double train_fraction) {
  const auto order = chronological_order(records);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(order.size())));
  if (n_train == 0 || n_train == order.size()) throw DataError("split: train or test split is empty");
  ChronologicalSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return split;
}

TrainResult train(const TransactionTable& dataset, const ModelConfig& config, FeatureSet features) {
  config.validate();
  const auto split = chronological_split(dataset.records);

  TrainResult result;
  result.scaler = FeatureScaler::fit(dataset.records, split.train, dataset.n_entities, dataset.n_products);
  const EncodedData train_data = encode(dataset.records, split.train, features, result.scaler);
  const EncodedData test_data = encode(dataset.records, split.test, features, result.scaler);

  result.params = ModelParams(config, features, dataset.n_entities, dataset.n_products);
  {
    Rng init(derive_seed(config.seed, {0x1417}));
    result.params.initialize(init);
  }
  AdamState adam(result.params.values().size());
  Rng dropout_rng(derive_seed(config.seed, {0xd50}));
  Rng eval_rng(0);
  EarlyStopper stopper(config.early_stop_alpha, config.early_stop_k);

  std::vector<std::size_t> order(train_data.size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> test_all(test_data.size);
  std::iota(test_all.begin(), test_all.end(), std::size_t{0});
  const std::size_t batch = config.batch_size == 0 ? order.size() : config.batch_size;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng shuffle(derive_seed(config.seed, {0x5f, epoch}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle, i)]);

    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const RazorGradient g = razor_gradient(result.params, train_data, idx, true, dropout_rng);
      adam_step(result.params.values(), g.grad, adam, config.learning_rate);
      total += g.loss.loss * static_cast<double>(idx.size());
    }
    const double train_loss = total / static_cast<double>(order.size());
    result.train_loss.push_back(train_loss);
    result.test_loss.push_back(razor_loss(result.params, test_data, test_all, false, eval_rng).loss);
    result.epochs = epoch + 1;
    if (!std::isfinite(train_loss)) throw std::runtime_error("train: loss diverged");
    if (stopper.update(train_loss)) break;
  }

  RazorLoss final = razor_loss(result.params, test_data, test_all, false, eval_rng);
  result.final_test_loss = final.loss;
  result.test_item_losses = std::move(final.item_losses);
  return result;
}

BaselineLoss marginal_baseline_loss(const TransactionTable& dataset) {
  const auto split = chronological_split(dataset.records);
  const std::size_t n = dataset.n_entities;
  std::vector<double> q(n, 1.0);
  for (std::size_t idx : split.train) {
    q[dataset.records[idx].buyer] += 1.0;
    q[dataset.records[idx].seller] += 1.0;
  }
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  for (double& x : q) x /= total;

  BaselineLoss out;
  for (std::size_t idx : split.test) {
    const auto& r = dataset.records[idx];
    const double buyer_view = q[r.seller] / (1.0 - q[r.buyer]);
    const double seller_view = q[r.buyer] / (1.0 - q[r.seller]);
    out.item_losses.push_back(-std::log(std::max(buyer_view, seller_view)));
  }
  out.loss = std::accumulate(out.item_losses.begin(), out.item_losses.end(), 0.0) /
             static_cast<double>(out.item_losses.size());
  return out;
}

namespace {
constexpr std::array<char, 8> kModelMagic = {'R', 'Z', 'K', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kModelVersion = 1;

void put_vec(std::ostream& out, const std::vector<double>& v) {
  binio::put_u64(out, v.size());
  for (double x : v) binio::put_f64(out, x);
}

std::vector<double> get_vec(std::istream& in, std::size_t max_len) {
  const std::uint64_t n = binio::get_u64(in, "checkpoint");
  if (n > max_len) throw DataError("checkpoint: array length out of range");
  std::vector<double> v(n);
  for (double& x : v) x = binio::get_f64(in, "checkpoint");
  return v;
}
}  // namespace

void save_checkpoint(std::ostream& out, const ModelParams& params, const FeatureScaler& scaler) {
  const ModelConfig& c = params.config();
  out.write(kModelMagic.data(), kModelMagic.size());
  binio::put_u32(out, kModelVersion);
  binio::put_u64(out, c.entity_dim);
  binio::put_u64(out, c.product_dim);
  binio::put_u64(out, c.day_dim);
  binio::put_u64(out, c.hidden_sizes.size());
  for (std::size_t h : c.hidden_sizes) binio::put_u64(out, h);
  binio::put_f64(out, c.dropout);
  binio::put_u64(out, c.batch_size);
  binio::put_f64(out, c.learning_rate);
  binio::put_f64(out, c.early_stop_alpha);
  binio::put_u64(out, c.early_stop_k);
  binio::put_u64(out, c.max_epochs);
  binio::put_u64(out, c.seed);
  binio::put_u32(out, params.features().mask());
  binio::put_u64(out, params.n_entities());
  binio::put_u64(out, params.n_products());
  put_vec(out, scaler.price_mean);
  put_vec(out, scaler.price_std);
  put_vec(out, scaler.market_mean);
  put_vec(out, scaler.market_std);
  binio::put_f64(out, scaler.log_notional_mean);
  binio::put_f64(out, scaler.log_notional_std);
  put_vec(out, scaler.spread_mean);
  put_vec(out, scaler.spread_std);
  put_vec(out, std::vector<double>(params.values().begin(), params.values().end()));
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kModelMagic) throw DataError("checkpoint: bad magic header");
  const auto version = binio::get_u32(in, "checkpoint");
  if (version != kModelVersion) throw DataError("checkpoint: unsupported version " + std::to_string(version));
  constexpr std::size_t kLimit = std::size_t{1} << 32;
  ModelConfig c;
  c.entity_dim = binio::get_u64(in, "checkpoint");
  c.product_dim = binio::get_u64(in, "checkpoint");
  c.day_dim = binio::get_u64(in, "checkpoint");
  const auto hidden = binio::get_u64(in, "checkpoint");
  if (hidden > 2) throw DataError("checkpoint: too many hidden layers");
  c.hidden_sizes.resize(hidden);
  for (auto& h : c.hidden_sizes) h = binio::get_u64(in, "checkpoint");
  c.dropout = binio::get_f64(in, "checkpoint");
  c.batch_size = binio::get_u64(in, "checkpoint");
  c.learning_rate = binio::get_f64(in, "checkpoint");
  c.early_stop_alpha = binio::get_f64(in, "checkpoint");
  c.early_stop_k = binio::get_u64(in, "checkpoint");
  c.max_epochs = binio::get_u64(in, "checkpoint");
  c.seed = binio::get_u64(in, "checkpoint");
  const FeatureSet features(binio::get_u32(in, "checkpoint"));
  const auto n_entities = binio::get_u64(in, "checkpoint");
  const auto n_products = binio::get_u64(in, "checkpoint");

  Checkpoint cp;
  cp.scaler.price_mean = get_vec(in, kLimit);
  cp.scaler.price_std = get_vec(in, kLimit);
  cp.scaler.market_mean = get_vec(in, kLimit);
  cp.scaler.market_std = get_vec(in, kLimit);
  cp.scaler.log_notional_mean = binio::get_f64(in, "checkpoint");
  cp.scaler.log_notional_std = binio::get_f64(in, "checkpoint");
  cp.scaler.spread_mean = get_vec(in, kLimit);
  cp.scaler.spread_std = get_vec(in, kLimit);
  try {
    cp.params = ModelParams(c, features, n_entities, n_products);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  const auto values = get_vec(in, kLimit);
  if (values.size() != cp.params.values().size()) throw DataError("checkpoint: parameter count mismatch");
  std::copy(values.begin(), values.end(), cp.params.values().begin());
  return cp;
}

}  // namespace razorkit
