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
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "razorkit/random.hpp"

namespace razorkit {

enum class ParamKind { kCategorical, kInteger, kReal };
enum class ParamScale { kLinear, kLog };

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::kReal;
  double low = 0.0;
  double high = 1.0;
  std::vector<std::string> categories;
  ParamScale scale = ParamScale::kLinear;

  static ParamSpec real(std::string name, double low, double high, bool log = false);
  static ParamSpec integer(std::string name, std::int64_t low, std::int64_t high, bool log = false);
  static ParamSpec categorical(std::string name, std::vector<std::string> categories);

  /// Throws std::invalid_argument (empty or inverted bounds, log scale on non-positive bounds, ...).
  void validate() const;
  /// Interval the estimators work on: bounds mapped through the scale, widened by 0.5 for integers.
  std::pair<double, double> internal_domain() const;
  double to_internal(double value) const;
  /// Inverse of to_internal, rounded and clamped for integers. Categorical values are indices.
  double from_internal(double x) const;
  bool contains(double value) const;
  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

/// Truncated Gaussian mixture on [low, high]: one kernel per observation plus a prior kernel
/// centered on the domain with the domain's width. Kernel width is (high - low) / max(2, count).
class ParzenEstimator {
 public:
  ParzenEstimator(std::vector<double> observations, double low, double high);
  double pdf(double x) const;
  double log_pdf(double x) const;
  double sample(Rng& rng) const;
  double bandwidth() const { return bandwidth_; }
  const std::vector<double>& centers() const { return centers_; }

 private:
  struct Kernel {
    double mu, sigma, mass;
  };
  double low_, high_, bandwidth_;
  std::vector<double> centers_;
  std::vector<Kernel> kernels_;
};

/// Parzen estimator over scaled values of a bounded domain.
ParzenEstimator parzen_fit(std::vector<double> values, double low, double high);

/// Add-one smoothed categorical frequencies.
std::vector<double> smoothed_category_probs(const std::vector<std::size_t>& counts);

struct TpeSettings {
  double gamma = 0.25;
  std::size_t n_candidates = 24;
  std::size_t n_startup = 10;
  void validate() const;
};

struct TrialRecord {
  std::map<std::string, double> params;  ///< emitted values; categorical entries are category indices
  double value = 0.0;
  bool failed = false;
};

class TrialHistory {
 public:
  explicit TrialHistory(TpeSettings settings = {});

  const TpeSettings& settings() const { return settings_; }
  const std::vector<TrialRecord>& trials() const { return trials_; }
  const std::map<std::string, ParamSpec>& specs() const { return specs_; }

  /// Registers a parameter; a second registration under the same name must match.
  void declare(const ParamSpec& spec);
  void add(TrialRecord record);

  /// (internal value, objective) for every finished trial that requested `name`.
  std::vector<std::pair<double, double>> observations(const std::string& name) const;

 private:
  TpeSettings settings_;
  std::vector<TrialRecord> trials_;
  std::map<std::string, ParamSpec> specs_;
};

/// Below-split estimator l and above-split estimator g for a numeric parameter.
struct TpeSplit {
  std::vector<double> below;
  std::vector<double> above;
};
TpeSplit tpe_split(std::vector<std::pair<double, double>> observations, double gamma);

/// Suggests an emitted value for `spec` (a category index for categoricals).
double tpe_suggest(const TrialHistory& history, const ParamSpec& spec, Rng& rng);

/// Define-by-run handle passed to the objective.
class Trial {
 public:
  Trial(TrialHistory& history, Rng& rng, std::size_t number);

  double suggest_float(const std::string& name, double low, double high, bool log = false);
  std::int64_t suggest_int(const std::string& name, std::int64_t low, std::int64_t high, bool log = false);
  std::string suggest_categorical(const std::string& name, const std::vector<std::string>& categories);

  std::size_t number() const { return number_; }
  const std::map<std::string, double>& params() const { return params_; }

 private:
  double suggest(const ParamSpec& spec);

  TrialHistory& history_;
  Rng& rng_;
  std::size_t number_;
  std::map<std::string, double> params_;
};

using Objective = std::function<double(Trial&)>;

struct OptimizeResult {
  std::size_t best_trial = 0;
  double best_value = 0.0;
  std::map<std::string, double> best_params;
  TrialHistory history;
};

/// Runs n_trials sequentially. An objective that throws or returns NaN is recorded as failed
/// with value +inf and the search continues.
OptimizeResult optimize(const Objective& objective, std::size_t n_trials, std::uint64_t seed,
                        TpeSettings settings = {});

/// Versioned JSON trial history (schema "razorkit.tune/1"); categorical values are written by name.
void write_history_json(std::ostream& out, const OptimizeResult& result);

}  // namespace razorkit
