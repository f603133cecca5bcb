#include "vdasap/bid_file.hpp"

#include <charconv>
#include <cstdio>
#include <optional>
#include <sstream>

#include "vdasap/error.hpp"

namespace vdasap {

namespace {

[[noreturn]] void syntax(int line, const std::string& what) {
  throw Error(ErrorCode::kFormat, "bid file line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& token, int line) {
  double x = 0.0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
  if (ec != std::errc() || end != token.data() + token.size()) syntax(line, "bad number '" + token + "'");
  return x;
}

int parse_int(const std::string& token, int line) {
  int x = 0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
  if (ec != std::errc() || end != token.data() + token.size()) syntax(line, "bad integer '" + token + "'");
  return x;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  // Prefer the shortest form that parses back to the same value.
  for (int digits = 1; digits < 17; ++digits) {
    char trial[64];
    std::snprintf(trial, sizeof trial, "%.*g", digits, x);
    if (std::strtod(trial, nullptr) == x) return trial;
  }
  return buf;
}

}  // namespace

BidFile parse_bid_file(const std::string& text) {
  BidFile file;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  bool versioned = false;
  std::optional<int> units, lots;
  std::optional<double> reserve;
  std::vector<std::pair<int, std::vector<std::string>>> records;
  while (std::getline(in, raw)) {
    ++line;
    std::istringstream words(raw);
    std::vector<std::string> tokens;
    for (std::string t; words >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    if (tokens[0] == "#") {
      if (tokens.size() >= 4 && tokens[1] == "vdasap-bids" && tokens[2] == "version") {
        if (parse_int(tokens[3], line) != kBidFileVersion) syntax(line, "unsupported bid file version");
        versioned = true;
      }
      continue;
    }
    if (tokens[0].front() == '#') continue;
    if (tokens[0] == "units" && tokens.size() == 2) {
      units = parse_int(tokens[1], line);
    } else if (tokens[0] == "lots" && tokens.size() == 2) {
      lots = parse_int(tokens[1], line);
    } else if (tokens[0] == "reserve" && tokens.size() == 2) {
      reserve = parse_number(tokens[1], line);
    } else if (tokens[0] == "bid" && tokens.size() >= 2) {
      records.emplace_back(line, std::vector<std::string>(tokens.begin() + 1, tokens.end()));
    } else {
      syntax(line, "unrecognised record '" + tokens[0] + "'");
    }
  }
  if (!versioned) throw Error(ErrorCode::kFormat, "bid file lacks the '# vdasap-bids version 1' header");
  if (!units || !lots || !reserve) throw Error(ErrorCode::kFormat, "bid file needs units, lots and reserve");
  file.total_units = *units;
  file.lot_count = *lots;
  file.reserve_price = *reserve;
  const LotGrid grid = file.grid();
  const ReservePrice floor(file.reserve_price);
  for (std::size_t c = 0; c < records.size(); ++c) {
    const auto& [at, tokens] = records[c];
    if (static_cast<int>(tokens.size()) != file.lot_count + 1) {
      syntax(at, "expected a requirement and " + std::to_string(file.lot_count) + " prices");
    }
    const int requirement = parse_int(tokens[0], at);
    std::vector<std::optional<Money>> prices(file.lot_count);
    for (int j = 0; j < file.lot_count; ++j) {
      if (tokens[j + 1] != "-") prices[j] = parse_number(tokens[j + 1], at);
    }
    try {
      file.bids.push_back(validate_bid(BidSchedule(std::move(prices), requirement), floor, grid));
    } catch (const Error& e) {
      throw Error(e.code(), "consumer " + std::to_string(c + 1) + ": " + e.what(), e.lot());
    }
  }
  if (file.bids.empty()) throw Error(ErrorCode::kFormat, "bid file contains no bids");
  return file;
}

std::string serialize_bid_file(const BidFile& file) {
  std::string out = "# vdasap-bids version " + std::to_string(kBidFileVersion) + "\n";
  out += "units " + std::to_string(file.total_units) + "\n";
  out += "lots " + std::to_string(file.lot_count) + "\n";
  out += "reserve " + format_number(file.reserve_price) + "\n";
  for (const auto& b : file.bids) {
    out += "bid " + std::to_string(b.requirement());
    for (int j = 0; j < b.lot_count(); ++j) {
      out += " ";
      out += b.demanded(j) ? format_number(*b.price(j)) : "-";
    }
    out += "\n";
  }
  return out;
}

}  // namespace vdasap
