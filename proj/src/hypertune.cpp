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

#include "razorkit/hypertune.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace razorkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxTruncationRetries = 1000;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double log_sum_exp(const std::vector<double>& xs) {
  const double hi = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(hi)) return hi;
  double total = 0.0;
  for (double x : xs) total += std::exp(x - hi);
  return hi + std::log(total);
}

}  // namespace

ParamSpec ParamSpec::real(std::string name, double low, double high, bool log) {
  ParamSpec s{std::move(name), ParamKind::kReal, low, high, {}, log ? ParamScale::kLog : ParamScale::kLinear};
  s.validate();
  return s;
}

ParamSpec ParamSpec::integer(std::string name, std::int64_t low, std::int64_t high, bool log) {
  ParamSpec s{std::move(name), ParamKind::kInteger, static_cast<double>(low), static_cast<double>(high), {},
              log ? ParamScale::kLog : ParamScale::kLinear};
  s.validate();
  return s;
}

ParamSpec ParamSpec::categorical(std::string name, std::vector<std::string> categories) {
  ParamSpec s{std::move(name), ParamKind::kCategorical, 0.0, 0.0, std::move(categories), ParamScale::kLinear};
  s.high = static_cast<double>(s.categories.size()) - 1.0;
  s.validate();
  return s;
}

void ParamSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("hypertune: parameter without a name");
  if (kind == ParamKind::kCategorical) {
    if (categories.empty()) throw std::invalid_argument("hypertune: '" + name + "' has no categories");
    if (scale == ParamScale::kLog) throw std::invalid_argument("hypertune: categorical '" + name + "' cannot be log");
    return;
  }
  if (!(std::isfinite(low) && std::isfinite(high) && low <= high)) {
    throw std::invalid_argument("hypertune: '" + name + "' has invalid bounds");
  }
  if (kind == ParamKind::kInteger && (low != std::round(low) || high != std::round(high))) {
    throw std::invalid_argument("hypertune: integer '" + name + "' needs integral bounds");
  }
  if (scale == ParamScale::kLog && !(low > 0.0)) {
    throw std::invalid_argument("hypertune: log-scaled '" + name + "' needs positive bounds");
  }
}

std::pair<double, double> ParamSpec::internal_domain() const {
  double lo = low, hi = high;
  if (kind == ParamKind::kInteger) {
    lo -= 0.5;
    hi += 0.5;
    if (scale == ParamScale::kLog) lo = std::max(lo, low * 0.5);
  }
  if (scale == ParamScale::kLog) return {std::log(lo), std::log(hi)};
  return {lo, hi};
}

double ParamSpec::to_internal(double value) const { return scale == ParamScale::kLog ? std::log(value) : value; }

double ParamSpec::from_internal(double x) const {
  double v = scale == ParamScale::kLog ? std::exp(x) : x;
  if (kind == ParamKind::kInteger) v = std::round(v);
  return std::clamp(v, low, high);
}

bool ParamSpec::contains(double value) const {
  if (!(value >= low && value <= high)) return false;
  if (kind != ParamKind::kReal) return value == std::round(value);
  return true;
}

ParzenEstimator::ParzenEstimator(std::vector<double> observations, double low, double high)
    : low_(low), high_(high), centers_(std::move(observations)) {
  if (!(std::isfinite(low) && std::isfinite(high) && low <= high)) {
    throw std::invalid_argument("parzen: invalid domain");
  }
  const double width = std::max(high - low, 1e-12);
  bandwidth_ = width / std::max<double>(2.0, static_cast<double>(centers_.size()));
  auto kernel = [&](double mu, double sigma) {
    const double mass = normal_cdf((high_ - mu) / sigma) - normal_cdf((low_ - mu) / sigma);
    return Kernel{mu, sigma, std::max(mass, 1e-300)};
  };
  for (double c : centers_) kernels_.push_back(kernel(std::clamp(c, low_, high_), bandwidth_));
  kernels_.push_back(kernel(0.5 * (low_ + high_), width));
}

double ParzenEstimator::log_pdf(double x) const {
  if (x < low_ || x > high_) return -kInf;
  std::vector<double> terms;
  terms.reserve(kernels_.size());
  const double log_weight = -std::log(static_cast<double>(kernels_.size()));
  for (const Kernel& k : kernels_) {
    const double z = (x - k.mu) / k.sigma;
    terms.push_back(log_weight - 0.5 * z * z - std::log(k.sigma * std::sqrt(2.0 * std::numbers::pi) * k.mass));
  }
  return log_sum_exp(terms);
}

double ParzenEstimator::pdf(double x) const { return std::exp(log_pdf(x)); }

double ParzenEstimator::sample(Rng& rng) const {
  const Kernel& k = kernels_[uniform_index(rng, kernels_.size())];
  for (std::size_t i = 0; i < kMaxTruncationRetries; ++i) {
    const double x = k.mu + k.sigma * normal01(rng);
    if (x >= low_ && x <= high_) return x;
  }
  return low_ + (high_ - low_) * uniform01(rng);
}

ParzenEstimator parzen_fit(std::vector<double> values, double low, double high) {
  return ParzenEstimator(std::move(values), low, high);
}

std::vector<double> smoothed_category_probs(const std::vector<std::size_t>& counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0})) +
                       static_cast<double>(counts.size());
  std::vector<double> p;
  p.reserve(counts.size());
  for (std::size_t c : counts) p.push_back((static_cast<double>(c) + 1.0) / total);
  return p;
}

void TpeSettings::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("tpe: gamma must be in (0, 1]");
  if (n_candidates < 1) throw std::invalid_argument("tpe: n_candidates must be >= 1");
}

TrialHistory::TrialHistory(TpeSettings settings) : settings_(settings) { settings_.validate(); }

void TrialHistory::declare(const ParamSpec& spec) {
  spec.validate();
  auto [it, inserted] = specs_.emplace(spec.name, spec);
  if (!inserted && !(it->second == spec)) {
    throw std::invalid_argument("hypertune: parameter '" + spec.name + "' redeclared with a different space");
  }
}

void TrialHistory::add(TrialRecord record) { trials_.push_back(std::move(record)); }

std::vector<std::pair<double, double>> TrialHistory::observations(const std::string& name) const {
  std::vector<std::pair<double, double>> out;
  auto spec = specs_.find(name);
  for (const TrialRecord& t : trials_) {
    auto it = t.params.find(name);
    if (it == t.params.end()) continue;
    const double x = spec == specs_.end() ? it->second : spec->second.to_internal(it->second);
    out.emplace_back(x, t.failed ? kInf : t.value);
  }
  return out;
}

TpeSplit tpe_split(std::vector<std::pair<double, double>> obs, double gamma) {
  std::stable_sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  const auto n_below = std::min(
      obs.size(), std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(obs.size())))));
  TpeSplit split;
  for (std::size_t i = 0; i < obs.size(); ++i) (i < n_below ? split.below : split.above).push_back(obs[i].first);
  return split;
}

double tpe_suggest(const TrialHistory& history, const ParamSpec& spec, Rng& rng) {
  spec.validate();
  const TpeSettings& st = history.settings();
  const auto obs = history.observations(spec.name);

  if (spec.kind == ParamKind::kCategorical) {
    const std::size_t k = spec.categories.size();
    if (obs.size() < st.n_startup || obs.empty()) return static_cast<double>(uniform_index(rng, k));
    const TpeSplit split = tpe_split(obs, st.gamma);
    std::vector<std::size_t> below(k, 0), above(k, 0);
    for (double x : split.below) ++below[static_cast<std::size_t>(x)];
    for (double x : split.above) ++above[static_cast<std::size_t>(x)];
    const auto l = smoothed_category_probs(below);
    const auto g = smoothed_category_probs(above);
    std::size_t best = 0;
    double best_ratio = -kInf;
    for (std::size_t c = 0; c < st.n_candidates; ++c) {
      double u = uniform01(rng);
      std::size_t cat = k - 1;
      for (std::size_t j = 0; j < k; ++j) {
        if (u < l[j]) {
          cat = j;
          break;
        }
        u -= l[j];
      }
      const double ratio = std::log(l[cat]) - std::log(g[cat]);
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = cat;
      }
    }
    return static_cast<double>(best);
  }

  const auto [lo, hi] = spec.internal_domain();
  if (obs.size() < st.n_startup || obs.empty()) return spec.from_internal(lo + (hi - lo) * uniform01(rng));
  const TpeSplit split = tpe_split(obs, st.gamma);
  const ParzenEstimator l(split.below, lo, hi);
  const ParzenEstimator g(split.above, lo, hi);
  double best = 0.0, best_ratio = -kInf;
  for (std::size_t c = 0; c < st.n_candidates; ++c) {
    const double x = l.sample(rng);
    const double ratio = l.log_pdf(x) - g.log_pdf(x);
    if (c == 0 || ratio > best_ratio) {
      best_ratio = ratio;
      best = x;
    }
  }
  return spec.from_internal(best);
}

Trial::Trial(TrialHistory& history, Rng& rng, std::size_t number) : history_(history), rng_(rng), number_(number) {}

double Trial::suggest(const ParamSpec& spec) {
  history_.declare(spec);
  if (auto it = params_.find(spec.name); it != params_.end()) return it->second;
  const double v = tpe_suggest(history_, spec, rng_);
  params_[spec.name] = v;
  return v;
}

double Trial::suggest_float(const std::string& name, double low, double high, bool log) {
  return suggest(ParamSpec::real(name, low, high, log));
}

std::int64_t Trial::suggest_int(const std::string& name, std::int64_t low, std::int64_t high, bool log) {
  return static_cast<std::int64_t>(suggest(ParamSpec::integer(name, low, high, log)));
}

std::string Trial::suggest_categorical(const std::string& name, const std::vector<std::string>& categories) {
  return categories[static_cast<std::size_t>(suggest(ParamSpec::categorical(name, categories)))];
}

OptimizeResult optimize(const Objective& objective, std::size_t n_trials, std::uint64_t seed, TpeSettings settings) {
  if (n_trials < 1) throw std::invalid_argument("optimize: n_trials must be >= 1");
  OptimizeResult result{0, kInf, {}, TrialHistory(settings)};
  for (std::size_t n = 0; n < n_trials; ++n) {
    Rng rng(derive_seed(seed, {n}));
    Trial trial(result.history, rng, n);
    TrialRecord record;
    try {
      record.value = objective(trial);
      record.failed = std::isnan(record.value);
    } catch (const std::exception&) {
      record.failed = true;
    }
    if (record.failed) record.value = kInf;
    record.params = trial.params();
    if (n == 0 || record.value < result.best_value) {
      result.best_trial = n;
      result.best_value = record.value;
      result.best_params = record.params;
    }
    result.history.add(std::move(record));
  }
  return result;
}

void write_history_json(std::ostream& out, const OptimizeResult& result) {
  using nlohmann::json;
  const auto& specs = result.history.specs();
  auto encode = [&](const std::map<std::string, double>& params) {
    json j = json::object();
    for (const auto& [name, v] : params) {
      const ParamSpec& s = specs.at(name);
      if (s.kind == ParamKind::kCategorical) {
        j[name] = s.categories[static_cast<std::size_t>(v)];
      } else if (s.kind == ParamKind::kInteger) {
        j[name] = static_cast<std::int64_t>(v);
      } else {
        j[name] = v;
      }
    }
    return j;
  };
  json j;
  j["schema"] = "razorkit.tune/1";
  const TpeSettings& st = result.history.settings();
  j["settings"] = {{"gamma", st.gamma}, {"n_candidates", st.n_candidates}, {"n_startup", st.n_startup}};
  json space = json::object();
  for (const auto& [name, s] : specs) {
    json p;
    p["kind"] = s.kind == ParamKind::kCategorical ? "categorical" : s.kind == ParamKind::kInteger ? "integer" : "real";
    if (s.kind == ParamKind::kCategorical) {
      p["categories"] = s.categories;
    } else {
      p["low"] = s.low;
      p["high"] = s.high;
      p["scale"] = s.scale == ParamScale::kLog ? "log" : "linear";
    }
    space[name] = p;
  }
  j["space"] = space;
  json trials = json::array();
  const auto& ts = result.history.trials();
  for (std::size_t n = 0; n < ts.size(); ++n) {
    json t;
    t["number"] = n;
    t["state"] = ts[n].failed ? "failed" : "complete";
    t["value"] = ts[n].failed ? json(nullptr) : json(ts[n].value);
    t["params"] = encode(ts[n].params);
    trials.push_back(t);
  }
  j["trials"] = trials;
  if (std::isfinite(result.best_value)) {
    j["best"] = {{"number", result.best_trial}, {"value", result.best_value}, {"params", encode(result.best_params)}};
  } else {
    j["best"] = nullptr;
  }
  out << j.dump(2) << '\n';
}

}  // namespace razorkit
