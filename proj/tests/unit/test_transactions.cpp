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

#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "model_fixtures.hpp"
#include "razorkit/error.hpp"
#include "razorkit/transactions.hpp"

using namespace razorkit;

namespace {

TransactionTable read_text(const std::string& text) {
  std::istringstream in(text);
  return read_transactions(in);
}

const std::string kGoodHeader =
    "timestamp,buyer,seller,product,notional,price,market_price,dealer_spreads,day,time\n";

}  // namespace

TEST_CASE("feature names round trip and aliases resolve") {
  for (Feature f : kAllFeatures) CHECK(parse_feature(feature_name(f)) == f);
  CHECK(parse_feature("market") == Feature::kMarketPrice);
  CHECK(parse_feature("dealer_spreads") == Feature::kDealerSpread);
  CHECK_FALSE(parse_feature("volume").has_value());
}

TEST_CASE("feature set parsing") {
  CHECK(FeatureSet::parse("all") == FeatureSet::all());
  CHECK(FeatureSet::parse("").empty());
  CHECK(FeatureSet::parse("none").empty());
  const auto s = FeatureSet::parse("product, entity");
  CHECK(s == FeatureSet::of({Feature::kEntity, Feature::kProduct}));
  CHECK(s.size() == 2);
  CHECK(s.to_string() == "entity,product");
  CHECK(FeatureSet::parse(FeatureSet::all().to_string()) == FeatureSet::all());
  CHECK_THROWS_AS(FeatureSet::parse("entity,volume"), std::invalid_argument);
  for (std::uint32_t mask = 0; mask < (1u << kFeatureCount); ++mask) {
    const FeatureSet f(mask);
    REQUIRE(FeatureSet::parse(f.to_string()) == f);
  }
}

TEST_CASE("CSV round trip is exact") {
  const auto table = testing::small_market(7, 3, 200, 21);
  std::stringstream buf;
  write_transactions(buf, table);
  const auto back = read_transactions(buf);
  CHECK(back.n_entities == table.n_entities);
  CHECK(back.n_products == table.n_products);
  CHECK(back.records == table.records);
}

TEST_CASE("malformed input raises DataError") {
  const std::string row = "1.5,0,1,0,10,100,99,1;2;3,2,0.5\n";
  CHECK(read_text(kGoodHeader + row).records.size() == 1);
  CHECK_THROWS_AS(read_text(row), DataError);
  CHECK_THROWS_AS(read_text(""), DataError);
  CHECK_THROWS_AS(read_text(kGoodHeader + "1.5,0,1,0,10,100,99,1;2;3,2\n"), DataError);
  CHECK_THROWS_AS(read_text(kGoodHeader + "x,0,1,0,10,100,99,1;2;3,2,0.5\n"), DataError);
  CHECK_THROWS_AS(read_text(kGoodHeader + "1.5,-1,1,0,10,100,99,1;2;3,2,0.5\n"), DataError);
  CHECK_THROWS_AS(read_text(kGoodHeader + "1.5,1,1,0,10,100,99,1;2;3,2,0.5\n"), DataError);
  CHECK_THROWS_AS(read_text(kGoodHeader + "1.5,0,1,0,10,100,99,1;2;3,9,0.5\n"), DataError);
  CHECK_THROWS_AS(read_text(kGoodHeader + "1.5,0,1,0,10,100,99,1;2;3,2,1.5\n"), DataError);
  CHECK_THROWS_AS(read_text(kGoodHeader + "1.5,0,1,0,-4,100,99,1;2;3,2,0.5\n"), DataError);
  CHECK_THROWS_AS(read_text(kGoodHeader + row + "1.6,0,1,0,10,100,99,1;2,2,0.5\n"), DataError);
  CHECK_THROWS_AS(read_text("# n_entities=2\n" + kGoodHeader + row), DataError);
}

TEST_CASE("chronological order is a stable sort on timestamp") {
  std::vector<TransactionRecord> rs(6);
  const double ts[] = {3.0, 1.0, 3.0, 0.5, 1.0, 3.0};
  for (std::size_t i = 0; i < 6; ++i) rs[i].timestamp = ts[i];
  CHECK(chronological_order(rs) == std::vector<std::size_t>{3, 1, 4, 0, 2, 5});
}
