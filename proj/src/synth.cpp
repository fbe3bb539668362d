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

#include "razorkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "razorkit/random.hpp"

namespace razorkit {

namespace {

constexpr std::size_t kWeekdays = 5;

std::size_t sample_logits(std::span<const double> logits, std::size_t masked, Rng& rng) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i != masked) hi = std::max(hi, logits[i]);
  }
  std::vector<double> w(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i == masked) continue;
    w[i] = std::exp(logits[i] - hi);
    total += w[i];
  }
  double u = uniform01(rng) * total;
  std::size_t last = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    last = i;
    if (u < w[i]) return i;
    u -= w[i];
  }
  return last;
}

}  // namespace

std::string_view scheme_name(AffinityScheme s) {
  switch (s) {
    case AffinityScheme::kPlanted: return "planted";
    case AffinityScheme::kProductFree: return "product_free";
    case AffinityScheme::kOneHot: return "one_hot";
    case AffinityScheme::kUniform: return "uniform";
  }
  return "planted";
}

AffinityScheme parse_scheme(std::string_view name) {
  for (auto s : {AffinityScheme::kPlanted, AffinityScheme::kProductFree, AffinityScheme::kOneHot,
                 AffinityScheme::kUniform}) {
    if (scheme_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown affinity scheme '" + std::string(name) + "'");
}

void MarketConfig::validate() const {
  if (n_entities < 3) throw std::invalid_argument("synth: need at least three entities");
  if (n_products < 1) throw std::invalid_argument("synth: need at least one product");
  if (n_transactions < 1) throw std::invalid_argument("synth: n_transactions must be >= 1");
  if (n_days < 2) throw std::invalid_argument("synth: n_days must be >= 2");
  if (!affinity.empty() && affinity.size() != n_entities * n_entities * n_products) {
    throw std::invalid_argument("synth: affinity table has the wrong size");
  }
}

std::vector<double> market_affinity(const MarketConfig& c) {
  c.validate();
  if (!c.affinity.empty()) return c.affinity;
  const std::size_t n = c.n_entities, p = c.n_products;
  std::vector<double> a(n * n * p, 0.0);
  Rng rng(derive_seed(c.seed, {0xaff}));
  auto at = [&](std::size_t chooser, std::size_t partner, std::size_t product) -> double& {
    return a[(chooser * n + partner) * p + product];
  };
  switch (c.scheme) {
    case AffinityScheme::kUniform:
      break;
    case AffinityScheme::kOneHot:
      // Mutual pairs (0,1), (2,3), ...; with an odd count the last entity prefers 0.
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t partner = (i ^ 1u) < n ? (i ^ 1u) : 0;
        for (std::size_t k = 0; k < p; ++k) at(i, partner, k) = c.one_hot_logit;
      }
      break;
    case AffinityScheme::kPlanted:
    case AffinityScheme::kProductFree:
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double base = c.entity_strength * normal01(rng);
          for (std::size_t k = 0; k < p; ++k) {
            const double wobble = normal01(rng);
            at(i, j, k) = base + (c.scheme == AffinityScheme::kPlanted ? c.product_strength * wobble : 0.0);
          }
        }
      }
      break;
  }
  return a;
}

TransactionTable generate_market(const MarketConfig& config, std::vector<EntityId>* choosers) {
  config.validate();
  const std::size_t n = config.n_entities, np = config.n_products, days = config.n_days;
  const auto affinity = market_affinity(config);
  Rng rng(derive_seed(config.seed, {0x5a7}));

  // Per-entity product preferences.
  std::vector<double> product_logits(n * np);
  for (double& x : product_logits) x = config.product_skew * normal01(rng);

  // Daily product spread levels and dealer spread levels (log random walks).
  std::vector<double> level(days * np), dealer(days * n);
  for (std::size_t k = 0; k < np; ++k) level[k] = 50.0 + 450.0 * uniform01(rng);
  for (std::size_t e = 0; e < n; ++e) dealer[e] = 40.0 + 80.0 * uniform01(rng);
  for (std::size_t d = 1; d < days; ++d) {
    for (std::size_t k = 0; k < np; ++k) {
      level[d * np + k] = level[(d - 1) * np + k] * std::exp(config.price_volatility * normal01(rng));
    }
    for (std::size_t e = 0; e < n; ++e) {
      dealer[d * n + e] = dealer[(d - 1) * n + e] * std::exp(config.spread_volatility * normal01(rng));
    }
  }

  // Trades land on days 1..days-1 so a previous day always exists.
  struct Slot {
    std::size_t day;
    double time;
  };
  std::vector<Slot> slots(config.n_transactions);
  for (auto& s : slots) {
    s.day = 1 + uniform_index(rng, days - 1);
    s.time = 0.3 + 0.45 * uniform01(rng);
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    return a.day != b.day ? a.day < b.day : a.time < b.time;
  });

  TransactionTable table;
  table.n_entities = n;
  table.n_products = np;
  table.records.reserve(slots.size());
  if (choosers != nullptr) choosers->clear();
  double last_stamp = -1.0;
  std::vector<double> partner_logits(n);
  for (const Slot& slot : slots) {
    TransactionRecord r;
    const std::size_t chooser = uniform_index(rng, n);
    const std::size_t product =
        sample_logits(std::span<const double>(product_logits).subspan(chooser * np, np), np, rng);
    for (std::size_t j = 0; j < n; ++j) partner_logits[j] = affinity[(chooser * n + j) * np + product];
    const std::size_t partner = sample_logits(partner_logits, chooser, rng);
    const bool chooser_buys = uniform01(rng) < 0.5;

    r.buyer = static_cast<EntityId>(chooser_buys ? chooser : partner);
    r.seller = static_cast<EntityId>(chooser_buys ? partner : chooser);
    r.product = static_cast<std::uint32_t>(product);
    r.notional = std::exp(2.3 + 0.8 * normal01(rng));
    r.price = level[slot.day * np + product] * std::exp(0.01 * normal01(rng));
    r.market_price = level[(slot.day - 1) * np + product] * std::exp(0.005 * normal01(rng));
    r.dealer_spreads.assign(dealer.begin() + static_cast<std::ptrdiff_t>((slot.day - 1) * n),
                            dealer.begin() + static_cast<std::ptrdiff_t>(slot.day * n));
    r.day = static_cast<std::uint8_t>(slot.day % kWeekdays);
    r.time_of_day = slot.time;
    const double calendar_day = static_cast<double>((slot.day / kWeekdays) * 7 + slot.day % kWeekdays);
    r.timestamp = std::max(calendar_day + slot.time, std::nextafter(last_stamp, 1e300));
    last_stamp = r.timestamp;
    table.records.push_back(std::move(r));
    if (choosers != nullptr) choosers->push_back(static_cast<EntityId>(chooser));
  }
  return table;
}

std::vector<Feature> ground_truth_importance(const MarketConfig& config) {
  switch (config.scheme) {
    case AffinityScheme::kUniform: return {};
    case AffinityScheme::kOneHot:
    case AffinityScheme::kProductFree: return {Feature::kEntity};
    case AffinityScheme::kPlanted: return {Feature::kEntity, Feature::kProduct};
  }
  return {};
}

}  // namespace razorkit
