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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "razorkit/model.hpp"
#include "razorkit/shapley.hpp"
#include "razorkit/transactions.hpp"

namespace razorkit {

/// Smaller batches and a shorter patience than the training defaults, so that the ~230
/// retrainings of a 9-feature game stay affordable.
ModelConfig reliance_model_config();

/// Players are the entries of `universe`; bit i of a coalition stands for universe[i].
struct FeatureGameSpec {
  std::shared_ptr<const TransactionTable> dataset;
  ModelConfig config = reliance_model_config();
  std::vector<Feature> universe = std::vector<Feature>(kAllFeatures.begin(), kAllFeatures.end());
  std::size_t runs_per_subset = 5;
  std::uint64_t base_seed = 0;
  std::size_t workers = 1;

  void validate() const;
  FeatureSet features_of(Coalition s) const;
  /// Seed of run r for coalition s, keyed by the feature mask so it does not depend on universe order.
  std::uint64_t run_seed(Coalition s, std::size_t run) const;
};

/// Thread-safe store of per-run test losses, keyed by coalition.
class SubsetLossCache {
 public:
  /// Trains every missing (coalition, run) pair, spreading jobs over spec.workers threads.
  void evaluate(const FeatureGameSpec& spec, std::span<const Coalition> coalitions);
  std::vector<double> runs(Coalition s) const;
  /// Mean over runs; throws std::out_of_range when s was never evaluated.
  double mean(Coalition s) const;
  std::size_t size() const;
  std::map<Coalition, std::vector<double>> snapshot() const;

 private:
  mutable std::mutex mutex_;
  std::map<Coalition, std::vector<double>> losses_;
};

/// h(S): mean final test razor loss over spec.runs_per_subset trainings restricted to S.
double subset_loss(const FeatureGameSpec& spec, Coalition s);

/// f(S) = h(empty) - h(S) in nats. Trainings are shared through `cache` when given.
CoalitionalGame build_feature_game(const FeatureGameSpec& spec, std::shared_ptr<SubsetLossCache> cache = {});

struct RelianceReport {
  std::vector<Feature> universe;
  std::size_t runs_per_subset = 0;
  std::uint64_t base_seed = 0;
  std::vector<std::size_t> order;  ///< universe positions, strongest first
  std::vector<double> phi;         ///< per universe position
  std::vector<std::vector<double>> gains;  ///< gains[k][i] = f(S_k + i) - f(S_k); NaN if i in S_k
  double empty_loss = 0.0;         ///< h(empty)
  double full_value = 0.0;         ///< f(universe)
  double baseline_loss = 0.0;      ///< masked marginal-frequency model
  std::size_t evaluations = 0;     ///< distinct coalitions trained, the empty one included
  std::map<Coalition, std::vector<double>> run_losses;
  std::optional<RelaxedEfficiencyCheck> relaxed;  ///< only when requested (trains all 2^n subsets)
};

RelianceReport run_reliance(const FeatureGameSpec& spec, bool relaxed_check = false);

/// Versioned JSON report (schema "razorkit.reliance/1").
void write_reliance_json(std::ostream& out, const RelianceReport& report);
/// Tab-separated marginal-gain curves: step, prefix, feature, gain, selected.
void write_gain_table(std::ostream& out, const RelianceReport& report);

}  // namespace razorkit
