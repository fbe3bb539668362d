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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace razorkit {

using EntityId = std::uint32_t;

/// The context features a counterpart-choice model may see.
enum class Feature : std::uint8_t {
  kEntity = 0,
  kDirection,
  kProduct,
  kNotional,
  kPrice,
  kMarketPrice,
  kDealerSpread,
  kDay,
  kTime,
};

inline constexpr std::size_t kFeatureCount = 9;
inline constexpr std::array<Feature, kFeatureCount> kAllFeatures = {
    Feature::kEntity, Feature::kDirection,    Feature::kProduct, Feature::kNotional, Feature::kPrice,
    Feature::kMarketPrice, Feature::kDealerSpread, Feature::kDay, Feature::kTime};

std::string_view feature_name(Feature f);
std::optional<Feature> parse_feature(std::string_view name);

/// Subset of features, stored as a bitmask indexed by the Feature value.
class FeatureSet {
 public:
  constexpr FeatureSet() = default;
  constexpr explicit FeatureSet(std::uint32_t mask) : mask_(mask & ((1u << kFeatureCount) - 1)) {}
  static constexpr FeatureSet all() { return FeatureSet((1u << kFeatureCount) - 1); }
  static FeatureSet of(std::initializer_list<Feature> fs) {
    FeatureSet s;
    for (Feature f : fs) s.insert(f);
    return s;
  }
  /// Comma-separated feature names; "all" and "" (empty) are accepted. Throws std::invalid_argument.
  static FeatureSet parse(std::string_view text);

  constexpr bool contains(Feature f) const { return (mask_ >> static_cast<unsigned>(f)) & 1u; }
  void insert(Feature f) { mask_ |= 1u << static_cast<unsigned>(f); }
  void erase(Feature f) { mask_ &= ~(1u << static_cast<unsigned>(f)); }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr std::uint32_t mask() const { return mask_; }
  std::size_t size() const;
  std::string to_string() const;

  friend constexpr bool operator==(FeatureSet, FeatureSet) = default;

 private:
  std::uint32_t mask_ = 0;
};

/// One interdealer trade with its context.
struct TransactionRecord {
  double timestamp = 0.0;  ///< days since an arbitrary origin
  EntityId buyer = 0;
  EntityId seller = 0;
  std::uint32_t product = 0;
  double notional = 1.0;
  double price = 0.0;         ///< traded spread
  double market_price = 0.0;  ///< prior-day market spread of the product
  std::vector<double> dealer_spreads;  ///< prior-day spread per entity
  std::uint8_t day = 0;       ///< day of week, 0-6
  double time_of_day = 0.0;   ///< in [0, 1]

  friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

/// Records plus the sizes of the entity and product vocabularies.
struct TransactionTable {
  std::size_t n_entities = 0;
  std::size_t n_products = 0;
  std::vector<TransactionRecord> records;

  /// Throws DataError on self-trades, ids out of range, bad day/time, or a wrong spread width.
  void validate() const;
};

/// Comma-separated text. A `# n_entities=<E> n_products=<P>` line may precede the header;
/// without it the sizes are inferred from the data. dealer_spreads are `;`-separated.
void write_transactions(std::ostream& out, const TransactionTable& table);
/// Throws DataError with the line number on malformed input.
TransactionTable read_transactions(std::istream& in);

/// Indices of `records` in chronological order (stable for equal timestamps).
std::vector<std::size_t> chronological_order(std::span<const TransactionRecord> records);

}  // namespace razorkit
