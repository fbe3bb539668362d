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
#include <string_view>
#include <vector>

#include "razorkit/transactions.hpp"

namespace razorkit {

/// How counterpart preferences are planted.
enum class AffinityScheme {
  kPlanted,      ///< strong chooser-partner term plus a weaker chooser-partner-product term
  kProductFree,  ///< chooser-partner term only
  kOneHot,       ///< every entity trades with one fixed partner: 2i with 2i+1, a leftover entity with 0
  kUniform,      ///< no preference at all
};

std::string_view scheme_name(AffinityScheme s);
/// Throws std::invalid_argument on an unknown name.
AffinityScheme parse_scheme(std::string_view name);

struct MarketConfig {
  std::size_t n_entities = 19;
  std::size_t n_products = 9;
  std::size_t n_transactions = 15000;
  std::size_t n_days = 230;  ///< trading days, Monday to Friday
  AffinityScheme scheme = AffinityScheme::kPlanted;
  double entity_strength = 1.5;    ///< sd of chooser-partner logits
  double product_strength = 0.75;  ///< sd of chooser-partner-product logits
  double product_skew = 1.0;       ///< sd of per-entity product preference logits
  double one_hot_logit = 20.0;
  double price_volatility = 0.02;   ///< daily log-return sd of product spreads
  double spread_volatility = 0.02;  ///< daily log-return sd of dealer spreads
  std::uint64_t seed = 0;
  /// Explicit preference logits indexed [(chooser * n_entities + partner) * n_products + product].
  /// Empty means "derive from scheme and seed".
  std::vector<double> affinity;

  void validate() const;
};

/// Preference logits for the config (explicit table if given, else drawn from the scheme).
std::vector<double> market_affinity(const MarketConfig& config);

/// Time-sorted synthetic trades. When `choosers` is non-null it receives the chooser of each record.
TransactionTable generate_market(const MarketConfig& config, std::vector<EntityId>* choosers = nullptr);

/// Features carrying planted signal, most important first. Empty for the uniform market.
std::vector<Feature> ground_truth_importance(const MarketConfig& config);

}  // namespace razorkit
