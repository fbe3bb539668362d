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

#include "razorkit/transactions.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "razorkit/error.hpp"

namespace razorkit {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "entity", "direction", "product", "notional", "price", "market_price", "dealer_spread", "day", "time"};

constexpr std::string_view kHeader =
    "timestamp,buyer,seller,product,notional,price,market_price,dealer_spreads,day,time";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_double(std::string_view s, std::size_t line, std::string_view field) {
  // std::from_chars for double is not available in every libstdc++ we target.
  std::string buf(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(buf, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (buf.empty() || used != buf.size()) {
    throw DataError("transactions line " + std::to_string(line) + ": bad " + std::string(field) +
                    " '" + buf + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view s, std::size_t line, std::string_view field) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("transactions line " + std::to_string(line) + ": bad " + std::string(field) +
                    " '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string_view feature_name(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

std::optional<Feature> parse_feature(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureNames[i] == name) return static_cast<Feature>(i);
  }
  if (name == "market") return Feature::kMarketPrice;
  if (name == "dealer_spreads") return Feature::kDealerSpread;
  return std::nullopt;
}

FeatureSet FeatureSet::parse(std::string_view text) {
  text = trim(text);
  if (text == "all") return all();
  FeatureSet set;
  if (text.empty() || text == "none") return set;
  for (std::string_view part : split(text, ',')) {
    const auto f = parse_feature(part);
    if (!f) throw std::invalid_argument("unknown feature '" + std::string(part) + "'");
    set.insert(*f);
  }
  return set;
}

std::size_t FeatureSet::size() const { return static_cast<std::size_t>(std::popcount(mask_)); }

std::string FeatureSet::to_string() const {
  std::string out;
  for (Feature f : kAllFeatures) {
    if (!contains(f)) continue;
    if (!out.empty()) out += ',';
    out += feature_name(f);
  }
  return out;
}

void TransactionTable::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string where = "record " + std::to_string(i) + ": ";
    if (r.buyer >= n_entities || r.seller >= n_entities) throw DataError(where + "entity id out of range");
    if (r.buyer == r.seller) throw DataError(where + "buyer equals seller");
    if (r.product >= n_products) throw DataError(where + "product id out of range");
    if (r.day > 6) throw DataError(where + "day must be in 0..6");
    if (!(r.time_of_day >= 0.0 && r.time_of_day <= 1.0)) throw DataError(where + "time must be in [0, 1]");
    if (!(r.notional > 0.0) || !std::isfinite(r.notional)) throw DataError(where + "notional must be positive");
    if (r.dealer_spreads.size() != n_entities) throw DataError(where + "dealer_spreads width mismatch");
    if (!std::isfinite(r.price) || !std::isfinite(r.market_price) || !std::isfinite(r.timestamp)) {
      throw DataError(where + "non-finite value");
    }
  }
}

void write_transactions(std::ostream& out, const TransactionTable& table) {
  out << "# n_entities=" << table.n_entities << " n_products=" << table.n_products << '\n';
  out << kHeader << '\n';
  out << std::setprecision(17);
  for (const auto& r : table.records) {
    out << r.timestamp << ',' << r.buyer << ',' << r.seller << ',' << r.product << ',' << r.notional
        << ',' << r.price << ',' << r.market_price << ',';
    for (std::size_t i = 0; i < r.dealer_spreads.size(); ++i) {
      if (i) out << ';';
      out << r.dealer_spreads[i];
    }
    out << ',' << static_cast<int>(r.day) << ',' << r.time_of_day << '\n';
  }
}

TransactionTable read_transactions(std::istream& in) {
  TransactionTable table;
  std::optional<std::size_t> declared_entities, declared_products;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      std::istringstream meta{std::string(view.substr(1))};
      std::string token;
      while (meta >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const auto key = std::string_view(token).substr(0, eq);
        const auto value = std::string_view(token).substr(eq + 1);
        if (key == "n_entities") declared_entities = parse_uint(value, line_no, key);
        if (key == "n_products") declared_products = parse_uint(value, line_no, key);
      }
      continue;
    }
    if (!header_seen) {
      if (view != kHeader) {
        throw DataError("transactions line " + std::to_string(line_no) + ": expected header '" +
                        std::string(kHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split(view, ',');
    if (fields.size() != 10) {
      throw DataError("transactions line " + std::to_string(line_no) + ": expected 10 fields, got " +
                      std::to_string(fields.size()));
    }
    TransactionRecord r;
    r.timestamp = parse_double(fields[0], line_no, "timestamp");
    r.buyer = static_cast<EntityId>(parse_uint(fields[1], line_no, "buyer"));
    r.seller = static_cast<EntityId>(parse_uint(fields[2], line_no, "seller"));
    r.product = static_cast<std::uint32_t>(parse_uint(fields[3], line_no, "product"));
    r.notional = parse_double(fields[4], line_no, "notional");
    r.price = parse_double(fields[5], line_no, "price");
    r.market_price = parse_double(fields[6], line_no, "market_price");
    if (!fields[7].empty()) {
      for (std::string_view s : split(fields[7], ';')) {
        r.dealer_spreads.push_back(parse_double(s, line_no, "dealer_spreads"));
      }
    }
    const auto day = parse_uint(fields[8], line_no, "day");
    if (day > 6) throw DataError("transactions line " + std::to_string(line_no) + ": day must be in 0..6");
    r.day = static_cast<std::uint8_t>(day);
    r.time_of_day = parse_double(fields[9], line_no, "time");
    table.records.push_back(std::move(r));
  }
  if (!header_seen) throw DataError("transactions: missing header");

  std::size_t max_entity = 0, max_product = 0;
  for (const auto& r : table.records) {
    max_entity = std::max<std::size_t>({max_entity, r.buyer + 1u, r.seller + 1u, r.dealer_spreads.size()});
    max_product = std::max<std::size_t>(max_product, r.product + 1u);
  }
  table.n_entities = declared_entities.value_or(max_entity);
  table.n_products = declared_products.value_or(max_product);
  table.validate();
  return table;
}

std::vector<std::size_t> chronological_order(std::span<const TransactionRecord> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].timestamp < records[b].timestamp;
  });
  return order;
}

}  // namespace razorkit
