#pragma once
// Plain-text bid files for the one-shot commands:
//
//   # vdasap-bids version 1
//   units 2500
//   lots 5
//   reserve 3
//   bid 2500 20 18 18 16 16
//   bid 1500 18 17 17 - -
//
// Each `bid` line is one consumer: the requirement followed by one price per
// lot, with `-` for lots the consumer does not demand. Blank lines and other
// `#` lines are ignored.
#include <string>
#include <vector>

#include "vdasap/auction.hpp"

namespace vdasap {

inline constexpr int kBidFileVersion = 1;

struct BidFile {
  int total_units = 0;
  int lot_count = 0;
  Money reserve_price = 0.0;
  std::vector<BidSchedule> bids;

  LotGrid grid() const { return LotGrid(total_units, lot_count); }
};

/// Syntax problems throw kFormat; bids that violate the schedule rules throw
/// the validation error naming the consumer and lot.
BidFile parse_bid_file(const std::string& text);
std::string serialize_bid_file(const BidFile& file);

}  // namespace vdasap
