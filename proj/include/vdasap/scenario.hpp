#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vdasap/auction.hpp"
#include "vdasap/business.hpp"
#include "vdasap/mechanism.hpp"

namespace vdasap {

inline constexpr int kScenarioFormatVersion = 1;

/// Units [first_unit, last_unit] are priced at base * (1 - discount).
struct DiscountRange {
  int first_unit = 1;
  int last_unit = 1;
  double discount = 0.0;

  bool operator==(const DiscountRange&) const = default;
};

struct ConsumerArchetype {
  std::string name;
  std::vector<DiscountRange> ranges;
  int requirement = 0;

  bool operator==(const ConsumerArchetype&) const = default;
};

struct UniformDistribution {
  double low = 0.0;
  double high = 1.0;

  bool operator==(const UniformDistribution&) const = default;
};

struct Scenario {
  int total_units = 0;
  int lot_count = 1;
  double reserve_price = 1.0;
  UniformDistribution valuation;
  std::vector<ConsumerArchetype> consumers;
  std::vector<BusinessConstraint> business;
  std::uint64_t seed = 0;

  int consumer_count() const { return static_cast<int>(consumers.size()); }
  LotGrid grid() const { return LotGrid(total_units, lot_count); }
  ReservePrice reserve() const { return ReservePrice(reserve_price); }
  ScenarioFingerprint fingerprint() const;
  InputScaling scaling() const { return InputScaling{reserve_price, valuation.high}; }

  // Throws kConfig describing the first violated invariant.
  void validate() const;

  bool operator==(const Scenario&) const = default;
};

/// 1000 units, five consumers with the flat and stepped discount archetypes,
/// base prices U[3.5, 4.5], reserve 3, twenty lots of 50 units.
Scenario default_scenario();

// Per-lot multiplier (1 - discount) of a consumer's archetype.
std::vector<double> discount_factors(const Scenario& scenario, int consumer);

ValuationSchedule archetype_schedule(const Scenario& scenario, int consumer, double base);

std::vector<ValuationSchedule> sample_profile(const Scenario& scenario, std::mt19937_64& rng);

// Fills row `row` of `batch` with a freshly sampled valuation profile.
void sample_into(const Scenario& scenario, std::mt19937_64& rng, ProfileBatch& batch, int row);

/// Independent stream seed derived from a global seed (SplitMix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

std::string serialize_scenario(const Scenario& scenario);
Scenario parse_scenario(const std::string& text);

/// "default" yields default_scenario(); a relative path that does not exist
/// is also looked up in $VDASAP_SCENARIO_DIR.
Scenario load_scenario(const std::string& name_or_path);

}  // namespace vdasap
