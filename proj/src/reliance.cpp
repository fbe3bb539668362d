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

#include "razorkit/reliance.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "json.hpp"

#include "razorkit/random.hpp"

namespace razorkit {

ModelConfig reliance_model_config() {
  ModelConfig c;
  c.batch_size = 512;
  c.early_stop_k = 10;
  c.max_epochs = 300;
  return c;
}

void FeatureGameSpec::validate() const {
  if (!dataset) throw std::invalid_argument("reliance: no dataset");
  if (universe.empty()) throw std::invalid_argument("reliance: empty feature universe");
  if (universe.size() > 63) throw std::invalid_argument("reliance: too many features");
  if (runs_per_subset < 1) throw std::invalid_argument("reliance: runs_per_subset must be >= 1");
  if (workers < 1) throw std::invalid_argument("reliance: workers must be >= 1");
  FeatureSet seen;
  for (Feature f : universe) {
    if (seen.contains(f)) throw std::invalid_argument("reliance: duplicate feature in universe");
    seen.insert(f);
  }
  config.validate();
}

FeatureSet FeatureGameSpec::features_of(Coalition s) const {
  FeatureSet out;
  for (std::size_t i = 0; i < universe.size(); ++i) {
    if ((s >> i) & 1U) out.insert(universe[i]);
  }
  return out;
}

std::uint64_t FeatureGameSpec::run_seed(Coalition s, std::size_t run) const {
  return derive_seed(base_seed, {features_of(s).mask(), static_cast<std::uint64_t>(run)});
}

void SubsetLossCache::evaluate(const FeatureGameSpec& spec, std::span<const Coalition> coalitions) {
  spec.validate();
  struct Job {
    Coalition s;
    std::size_t run;
  };
  std::vector<Job> jobs;
  {
    std::lock_guard lock(mutex_);
    for (Coalition s : coalitions) {
      if (losses_.count(s) != 0) continue;
      bool queued = false;
      for (const Job& j : jobs) queued = queued || j.s == s;
      if (queued) continue;
      for (std::size_t r = 0; r < spec.runs_per_subset; ++r) jobs.push_back({s, r});
    }
  }
  if (jobs.empty()) return;

  std::vector<double> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        ModelConfig cfg = spec.config;
        cfg.seed = spec.run_seed(jobs[j].s, jobs[j].run);
        results[j] = train(*spec.dataset, cfg, spec.features_of(jobs[j].s)).final_test_loss;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  const std::size_t threads = std::min(spec.workers, jobs.size());
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::lock_guard lock(mutex_);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto& runs = losses_[jobs[j].s];
    runs.resize(spec.runs_per_subset);
    runs[jobs[j].run] = results[j];
  }
}

std::vector<double> SubsetLossCache::runs(Coalition s) const {
  std::lock_guard lock(mutex_);
  auto it = losses_.find(s);
  if (it == losses_.end()) throw std::out_of_range("reliance: coalition not evaluated");
  return it->second;
}

double SubsetLossCache::mean(Coalition s) const {
  const auto r = runs(s);
  double total = 0.0;
  for (double x : r) total += x;
  return total / static_cast<double>(r.size());
}

std::size_t SubsetLossCache::size() const {
  std::lock_guard lock(mutex_);
  return losses_.size();
}

std::map<Coalition, std::vector<double>> SubsetLossCache::snapshot() const {
  std::lock_guard lock(mutex_);
  return losses_;
}

double subset_loss(const FeatureGameSpec& spec, Coalition s) {
  SubsetLossCache cache;
  const Coalition one[] = {s};
  cache.evaluate(spec, one);
  return cache.mean(s);
}

CoalitionalGame build_feature_game(const FeatureGameSpec& spec, std::shared_ptr<SubsetLossCache> cache) {
  spec.validate();
  if (!cache) cache = std::make_shared<SubsetLossCache>();
  const Coalition empty[] = {0};
  cache->evaluate(spec, empty);
  const double h_empty = cache->mean(0);

  auto value = [spec, cache, h_empty](Coalition s) {
    if (s == 0) return 0.0;
    const Coalition one[] = {s};
    cache->evaluate(spec, one);
    return h_empty - cache->mean(s);
  };
  auto batch = [spec, cache, h_empty](std::span<const Coalition> coalitions) {
    cache->evaluate(spec, coalitions);
    std::vector<double> out;
    out.reserve(coalitions.size());
    for (Coalition s : coalitions) out.push_back(s == 0 ? 0.0 : h_empty - cache->mean(s));
    return out;
  };
  return CoalitionalGame(spec.universe.size(), value, batch);
}

RelianceReport run_reliance(const FeatureGameSpec& spec, bool relaxed_check) {
  auto cache = std::make_shared<SubsetLossCache>();
  CoalitionalGame game = build_feature_game(spec, cache);
  const Attribution attribution = topk_shapley(game);

  RelianceReport report;
  report.universe = spec.universe;
  report.runs_per_subset = spec.runs_per_subset;
  report.base_seed = spec.base_seed;
  report.order = attribution.order;
  report.phi = attribution.phi;
  report.gains = attribution.gains;
  report.empty_loss = cache->mean(0);
  report.full_value = game.value(game.grand_coalition());
  report.evaluations = game.evaluation_count();
  report.baseline_loss = marginal_baseline_loss(*spec.dataset).loss;
  if (relaxed_check) {
    std::vector<Coalition> all(std::size_t{1} << spec.universe.size());
    for (std::size_t s = 0; s < all.size(); ++s) all[s] = s;
    game.prefetch(all);
    report.relaxed = check_relaxed_topk_efficiency(game, attribution);
  }
  report.run_losses = cache->snapshot();
  return report;
}

namespace {

std::string coalition_label(const std::vector<Feature>& universe, Coalition s) {
  std::string out;
  for (std::size_t i = 0; i < universe.size(); ++i) {
    if (!((s >> i) & 1U)) continue;
    if (!out.empty()) out += ',';
    out += feature_name(universe[i]);
  }
  return out;
}

nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

void write_reliance_json(std::ostream& out, const RelianceReport& r) {
  using nlohmann::json;
  json j;
  j["schema"] = "razorkit.reliance/1";
  j["units"] = "nats";
  j["runs_per_subset"] = r.runs_per_subset;
  j["base_seed"] = r.base_seed;
  json features = json::array();
  for (Feature f : r.universe) features.push_back(feature_name(f));
  j["features"] = features;
  json order = json::array();
  for (std::size_t i : r.order) order.push_back(feature_name(r.universe[i]));
  j["order"] = order;
  json phi = json::object();
  for (std::size_t i = 0; i < r.universe.size(); ++i) phi[std::string(feature_name(r.universe[i]))] = r.phi[i];
  j["phi"] = phi;
  json gains = json::array();
  Coalition prefix = 0;
  for (std::size_t k = 0; k < r.gains.size(); ++k) {
    json row;
    row["prefix"] = coalition_label(r.universe, prefix);
    json g = json::object();
    for (std::size_t i = 0; i < r.universe.size(); ++i) {
      g[std::string(feature_name(r.universe[i]))] = number_or_null(r.gains[k][i]);
    }
    row["gains"] = g;
    gains.push_back(row);
    if (k < r.order.size()) prefix |= Coalition{1} << r.order[k];
  }
  j["marginal_gains"] = gains;
  j["empty_loss"] = r.empty_loss;
  j["full_value"] = r.full_value;
  j["baseline_loss"] = r.baseline_loss;
  j["evaluations"] = r.evaluations;
  json subsets = json::array();
  for (const auto& [s, runs] : r.run_losses) {
    subsets.push_back({{"mask", s}, {"features", coalition_label(r.universe, s)}, {"test_losses", runs}});
  }
  j["subsets"] = subsets;
  if (r.relaxed) {
    j["relaxed_efficiency"] = {{"status", r.relaxed->holds ? "holds" : "violated"},
                               {"best_value", r.relaxed->best_value},
                               {"top_sum", r.relaxed->top_sum}};
  } else {
    j["relaxed_efficiency"] = {{"status", "not_run"}};
  }
  out << j.dump(2) << '\n';
}

void write_gain_table(std::ostream& out, const RelianceReport& r) {
  out << "step\tprefix\tfeature\tgain\tselected\n";
  out.precision(17);
  Coalition prefix = 0;
  for (std::size_t k = 0; k < r.gains.size() && k < r.order.size(); ++k) {
    for (std::size_t i = 0; i < r.universe.size(); ++i) {
      if (!std::isfinite(r.gains[k][i])) continue;
      out << k << '\t' << (prefix == 0 ? "-" : coalition_label(r.universe, prefix)) << '\t'
          << feature_name(r.universe[i]) << '\t' << r.gains[k][i] << '\t' << (r.order[k] == i ? 1 : 0) << '\n';
    }
    prefix |= Coalition{1} << r.order[k];
  }
}

}  // namespace razorkit
