#include "vdasap/scenario.hpp"

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "vdasap/persistence.hpp"

namespace vdasap {

using nlohmann::json;

ScenarioFingerprint Scenario::fingerprint() const {
  std::ostringstream dist;
  dist.precision(17);
  dist << "uniform(" << valuation.low << "," << valuation.high << ")";
  return ScenarioFingerprint{total_units, consumer_count(), lot_count, reserve_price, dist.str()};
}

void Scenario::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
  if (total_units <= 0) fail("total_units must be positive");
  if (lot_count <= 0 || lot_count > total_units) fail("lot_count must lie in [1, total_units]");
  if (!(reserve_price > 0.0)) fail("reserve_price must be positive");
  if (!(valuation.low <= valuation.high)) fail("valuation range is empty");
  if (valuation.low < reserve_price) fail("valuation lower bound is below the reserve price");
  if (!(valuation.high > reserve_price)) fail("valuation upper bound must exceed the reserve price");
  if (consumers.empty()) fail("scenario has no consumers");
  const LotGrid g = grid();
  const auto on_boundary = [&](int unit_count) {
    return unit_count == total_units ||
           (unit_count % g.lot_size() == 0 && unit_count <= g.lot_offset(lot_count - 1));
  };
  for (const auto& c : consumers) {
    const std::string who = "consumer '" + c.name + "': ";
    if (c.ranges.empty()) fail(who + "no discount ranges");
    int expected_first = 1;
    double previous = 0.0;
    for (const auto& r : c.ranges) {
      if (r.first_unit != expected_first || r.last_unit < r.first_unit) {
        fail(who + "discount ranges must tile [1, m] in order");
      }
      if (!on_boundary(r.first_unit - 1) || !on_boundary(r.last_unit)) {
        fail(who + "discount range [" + std::to_string(r.first_unit) + "," +
             std::to_string(r.last_unit) + "] is not aligned to the lot grid");
      }
      if (r.discount < previous || r.discount < 0.0 || r.discount >= 1.0) {
        fail(who + "discounts must be non-decreasing fractions in [0, 1)");
      }
      if (valuation.low * (1.0 - r.discount) < reserve_price) {
        fail(who + "discounted price can fall below the reserve");
      }
      previous = r.discount;
      expected_first = r.last_unit + 1;
    }
    if (expected_first != total_units + 1) fail(who + "discount ranges do not end at m");
    if (c.requirement < 0 || c.requirement > total_units || !on_boundary(c.requirement)) {
      fail(who + "requirement must be a lot boundary in [0, m]");
    }
  }
  for (const auto& b : business) {
    if (b.count < 0 || b.floor < 0.0 || b.floor > total_units || b.share_cap < 0.0 ||
        b.share_cap > 1.0) {
      fail("business constraint parameters out of range");
    }
  }
}

Scenario default_scenario() {
  Scenario s;
  s.total_units = 1000;
  s.lot_count = 20;
  s.reserve_price = 3.0;
  s.valuation = {3.5, 4.5};
  s.seed = 20240601;
  const auto consumer = [&](std::string name, std::vector<DiscountRange> ranges) {
    s.consumers.push_back({std::move(name), std::move(ranges), s.total_units});
  };
  consumer("flat", {{1, 1000, 0.0}});
  consumer("two-step", {{1, 500, 0.0}, {501, 1000, 0.05}});
  consumer("three-step", {{1, 300, 0.0}, {301, 600, 0.03}, {601, 1000, 0.06}});
  consumer("four-step", {{1, 250, 0.0}, {251, 500, 0.02}, {501, 750, 0.04}, {751, 1000, 0.06}});
  consumer("five-step",
           {{1, 200, 0.0}, {201, 400, 0.02}, {401, 600, 0.04}, {601, 800, 0.06}, {801, 1000, 0.08}});
  return s;
}

std::vector<double> discount_factors(const Scenario& scenario, int consumer) {
  const LotGrid g = scenario.grid();
  const auto& ranges = scenario.consumers.at(consumer).ranges;
  std::vector<double> factors(g.lot_count(), 1.0);
  for (int j = 0; j < g.lot_count(); ++j) {
    const int unit = g.lot_first_unit(j);
    for (const auto& r : ranges) {
      if (unit >= r.first_unit && unit <= r.last_unit) factors[j] = 1.0 - r.discount;
    }
  }
  return factors;
}

ValuationSchedule archetype_schedule(const Scenario& scenario, int consumer, double base) {
  const LotGrid g = scenario.grid();
  const auto factors = discount_factors(scenario, consumer);
  const int requirement = scenario.consumers.at(consumer).requirement;
  std::vector<std::optional<Money>> prices(g.lot_count());
  for (int j = 0; j < g.lot_count(); ++j) {
    if (g.lot_offset(j) < requirement) prices[j] = base * factors[j];
  }
  return ValuationSchedule(std::move(prices), requirement);
}

std::vector<ValuationSchedule> sample_profile(const Scenario& scenario, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> base(scenario.valuation.low, scenario.valuation.high);
  std::vector<ValuationSchedule> out;
  out.reserve(scenario.consumers.size());
  for (int i = 0; i < scenario.consumer_count(); ++i) {
    out.push_back(archetype_schedule(scenario, i, base(rng)));
  }
  return out;
}

void sample_into(const Scenario& scenario, std::mt19937_64& rng, ProfileBatch& batch, int row) {
  const auto profile = sample_profile(scenario, rng);
  for (int i = 0; i < scenario.consumer_count(); ++i) {
    auto s = batch.schedule(row, i);
    for (int j = 0; j < batch.lots; ++j) s[j] = profile[i].price_or(j, scenario.reserve_price);
    batch.cap(row, i) = profile[i].requirement();
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string serialize_scenario(const Scenario& s) {
  json j;
  j["format"] = "vdasap-scenario";
  j["version"] = kScenarioFormatVersion;
  j["total_units"] = s.total_units;
  j["lot_count"] = s.lot_count;
  j["reserve_price"] = s.reserve_price;
  j["valuation"] = {{"distribution", "uniform"}, {"low", s.valuation.low}, {"high", s.valuation.high}};
  j["seed"] = s.seed;
  json consumers = json::array();
  for (const auto& c : s.consumers) {
    json ranges = json::array();
    for (const auto& r : c.ranges) {
      ranges.push_back({{"first_unit", r.first_unit}, {"last_unit", r.last_unit}, {"discount", r.discount}});
    }
    consumers.push_back({{"name", c.name}, {"requirement", c.requirement}, {"discounts", ranges}});
  }
  j["consumers"] = consumers;
  json business = json::array();
  for (const auto& b : s.business) {
    json entry{{"kind", std::string(to_string(b.kind))}};
    switch (b.kind) {
      case BusinessConstraint::Kind::kMinWinnersWithFloor:
        entry["count"] = b.count;
        entry["floor"] = b.floor;
        break;
      case BusinessConstraint::Kind::kMaxWinnerShare:
        entry["share_cap"] = b.share_cap;
        break;
      case BusinessConstraint::Kind::kMaxWinners:
        entry["count"] = b.count;
        break;
    }
    business.push_back(entry);
  }
  j["business"] = business;
  return j.dump(2) + "\n";
}

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "vdasap-scenario") {
      throw Error(ErrorCode::kFormat, "not a scenario file");
    }
    if (j.at("version").get<int>() != kScenarioFormatVersion) {
      throw Error(ErrorCode::kFormat, "unsupported scenario file version");
    }
    s.total_units = j.at("total_units").get<int>();
    s.lot_count = j.at("lot_count").get<int>();
    s.reserve_price = j.at("reserve_price").get<double>();
    const auto& v = j.at("valuation");
    if (v.at("distribution").get<std::string>() != "uniform") {
      throw Error(ErrorCode::kConfig, "only uniform valuation distributions are supported");
    }
    s.valuation = {v.at("low").get<double>(), v.at("high").get<double>()};
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& c : j.at("consumers")) {
      ConsumerArchetype a;
      a.name = c.at("name").get<std::string>();
      a.requirement = c.at("requirement").get<int>();
      for (const auto& r : c.at("discounts")) {
        a.ranges.push_back({r.at("first_unit").get<int>(), r.at("last_unit").get<int>(),
                            r.at("discount").get<double>()});
      }
      s.consumers.push_back(std::move(a));
    }
    if (j.contains("business")) {
      for (const auto& b : j.at("business")) {
        BusinessConstraint c;
        c.kind = business_kind_from_string(b.at("kind").get<std::string>());
        c.count = b.value("count", 0);
        c.floor = b.value("floor", 0.0);
        c.share_cap = b.value("share_cap", 1.0);
        s.business.push_back(c);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed scenario: ") + e.what());
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& name_or_path) {
  if (name_or_path == "default") return default_scenario();
  std::filesystem::path path(name_or_path);
  if (!std::filesystem::exists(path) && path.is_relative()) {
    if (const char* dir = std::getenv("VDASAP_SCENARIO_DIR")) {
      auto candidate = std::filesystem::path(dir) / path;
      if (std::filesystem::exists(candidate)) path = candidate;
    }
  }
  return parse_scenario(read_file(path));
}

}  // namespace vdasap
