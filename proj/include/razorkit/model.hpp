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

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "razorkit/random.hpp"
#include "razorkit/transactions.hpp"

namespace razorkit {

/// Which party of a trade is taken as the one choosing its counterpart.
enum class Side : std::uint8_t { kBuyer = 0, kSeller = 1 };

struct ModelConfig {
  std::size_t entity_dim = 16;
  std::size_t product_dim = 6;
  std::size_t day_dim = 2;
  std::vector<std::size_t> hidden_sizes = {50};
  double dropout = 0.7;
  /// 0 means full-batch updates.
  std::size_t batch_size = 4096;
  double learning_rate = 2e-3;
  double early_stop_alpha = 0.99;
  std::size_t early_stop_k = 50;
  /// Hard cap on epochs in case the loss never converges.
  std::size_t max_epochs = 2000;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Standardization statistics, fitted on the training split only.
struct FeatureScaler {
  std::vector<double> price_mean, price_std;    ///< per product
  std::vector<double> market_mean, market_std;  ///< per product
  double log_notional_mean = 0.0, log_notional_std = 1.0;
  std::vector<double> spread_mean, spread_std;  ///< per dealer

  friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;

  static FeatureScaler fit(std::span<const TransactionRecord> records, std::span<const std::size_t> indices,
                           std::size_t n_entities, std::size_t n_products);
};

/// Context as seen by one chooser. Categorical ids are -1 when the feature is excluded.
struct ModelInput {
  std::int32_t entity = -1;
  std::int32_t product = -1;
  std::int32_t day = -1;
  std::vector<double> numeric;  ///< direction, log-notional, price, market price, time, dealer spreads
};

struct Featurized {
  ModelInput input;
  EntityId target = 0;
  EntityId chooser = 0;
};

/// Width of ModelInput::numeric for a feature subset.
std::size_t numeric_width(FeatureSet features, std::size_t n_entities);

/// Builds the chooser's context. Throws std::out_of_range on ids outside the scaler's vocabulary.
Featurized featurize(const TransactionRecord& txn, Side chooser, FeatureSet features,
                     const FeatureScaler& scaler);

/// Offsets of one parameter block inside the flat parameter vector (row-major rows x cols).
struct ParamBlock {
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
  friend bool operator==(const ParamBlock&, const ParamBlock&) = default;
};

/// All trainable parameters in one flat vector, plus the layout needed to interpret it.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(const ModelConfig& config, FeatureSet features, std::size_t n_entities, std::size_t n_products);

  /// Glorot-uniform layer weights, zero biases, embeddings uniform in +-0.05.
  void initialize(Rng& rng);

  const ModelConfig& config() const { return config_; }
  FeatureSet features() const { return features_; }
  std::size_t n_entities() const { return n_entities_; }
  std::size_t n_products() const { return n_products_; }
  std::size_t input_width() const { return input_width_; }
  std::size_t layer_count() const { return weights_.size(); }

  const ParamBlock& entity_block() const { return entity_; }
  const ParamBlock& product_block() const { return product_; }
  const ParamBlock& day_block() const { return day_; }
  const ParamBlock& weight_block(std::size_t layer) const { return weights_[layer]; }
  const ParamBlock& bias_block(std::size_t layer) const { return biases_[layer]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  using RowMatrixMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstRowMatrixMap =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  RowMatrixMap view(const ParamBlock& b) { return {values_.data() + b.offset, Eigen::Index(b.rows), Eigen::Index(b.cols)}; }
  ConstRowMatrixMap view(const ParamBlock& b) const {
    return {values_.data() + b.offset, Eigen::Index(b.rows), Eigen::Index(b.cols)};
  }

  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  ParamBlock reserve(std::size_t rows, std::size_t cols);

  ModelConfig config_;
  FeatureSet features_;
  std::size_t n_entities_ = 0;
  std::size_t n_products_ = 0;
  std::size_t input_width_ = 0;
  ParamBlock entity_, product_, day_;
  std::vector<ParamBlock> weights_, biases_;
  std::vector<double> values_;
};

/// Probabilities over entities for one chooser. The chooser's own entry is exactly 0.
/// In train mode hidden activations get inverted dropout drawn from `rng`.
std::vector<double> forward(const ModelParams& params, const ModelInput& input, EntityId chooser,
                            bool train_mode, Rng& rng);

/// Dataset featurized from both sides of each trade, ready for batched evaluation.
struct EncodedData {
  std::size_t size = 0;
  std::array<std::vector<std::int32_t>, 2> chooser;  ///< indexed by Side; target is the other side
  std::vector<std::int32_t> product;
  std::vector<std::int32_t> day;
  std::array<Eigen::MatrixXd, 2> numeric;
};

EncodedData encode(std::span<const TransactionRecord> records, std::span<const std::size_t> indices,
                   FeatureSet features, const FeatureScaler& scaler);

struct RazorLoss {
  double loss = 0.0;                ///< mean of item losses
  std::vector<double> item_losses;  ///< -log max(f(a,c)[b], f(b,c)[a]) per item
  std::vector<Side> directions;     ///< side whose prediction achieved the max; ties go to the buyer
};

/// Razor objective on `indices` of `data`.
RazorLoss razor_loss(const ModelParams& params, const EncodedData& data, std::span<const std::size_t> indices,
                     bool train_mode, Rng& rng);

/// Plain cross-entropy with the chooser side fixed per item (dropout off).
double fixed_direction_cross_entropy(const ModelParams& params, const EncodedData& data,
                                     std::span<const std::size_t> indices, std::span<const Side> directions);

struct RazorGradient {
  RazorLoss loss;
  std::vector<double> grad;  ///< aligned with ModelParams::values()
};

/// Razor loss and its reverse-mode gradient; only the winning side of each item is differentiated,
/// with the dropout masks drawn in the forward pass.
RazorGradient razor_gradient(const ModelParams& params, const EncodedData& data,
                             std::span<const std::size_t> indices, bool train_mode, Rng& rng);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// Bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

/// Convergence-based early stopping on the training loss.
class EarlyStopper {
 public:
  EarlyStopper(double alpha, std::size_t k);

  /// Records one epoch's training loss; returns true when training should stop.
  bool update(double train_loss);

  double best() const { return best_; }
  std::size_t counter() const { return counter_; }

 private:
  double alpha_;
  std::size_t k_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t counter_;
};

/// First floor(0.8 n) records by time train, the rest test. Throws DataError if either side is empty.
struct ChronologicalSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
ChronologicalSplit chronological_split(std::span<const TransactionRecord> records, double train_fraction = 0.8);

struct TrainResult {
  ModelParams params;
  FeatureScaler scaler;
  std::vector<double> train_loss;  ///< per epoch, train-mode mean over batches
  std::vector<double> test_loss;   ///< per epoch, eval mode
  std::vector<double> test_item_losses;  ///< final model
  double final_test_loss = 0.0;
  std::size_t epochs = 0;
};

TrainResult train(const TransactionTable& dataset, const ModelConfig& config, FeatureSet features);

/// Razor loss on the test split of a model that predicts the training-split party frequencies
/// (add-one smoothed) with the chooser masked out.
struct BaselineLoss {
  double loss = 0.0;
  std::vector<double> item_losses;
};
BaselineLoss marginal_baseline_loss(const TransactionTable& dataset);

/// Versioned binary checkpoint: config, feature set, vocabulary sizes, scaler and parameters.
struct Checkpoint {
  ModelParams params;
  FeatureScaler scaler;
};
void save_checkpoint(std::ostream& out, const ModelParams& params, const FeatureScaler& scaler);
/// Throws DataError on a bad header or truncated stream.
Checkpoint load_checkpoint(std::istream& in);

}  // namespace razorkit
