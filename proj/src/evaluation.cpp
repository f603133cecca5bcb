#include "vdasap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "vdasap/error.hpp"

namespace vdasap {

using nlohmann::json;

namespace {

constexpr std::array<Metric, kMetricCount> kMetrics = {
    Metric::kFcUtility, Metric::kConsumerUtility, Metric::kSocialWelfare, Metric::kNsw,
    Metric::kFcRevenue, Metric::kRegret,          Metric::kEnvy};

constexpr double kBoundTolerance = 1e-9;

}  // namespace

std::string_view metric_key(Metric metric) {
  switch (metric) {
    case Metric::kFcUtility: return "fc_utility";
    case Metric::kConsumerUtility: return "consumer_utility";
    case Metric::kSocialWelfare: return "social_welfare";
    case Metric::kNsw: return "nash_social_welfare";
    case Metric::kFcRevenue: return "fc_revenue";
    case Metric::kRegret: return "regret";
    case Metric::kEnvy: return "envy";
  }
  return "";
}

std::string_view metric_title(Metric metric) {
  switch (metric) {
    case Metric::kFcUtility: return "FC utility";
    case Metric::kConsumerUtility: return "Consumer utility";
    case Metric::kSocialWelfare: return "Social welfare";
    case Metric::kNsw: return "NSW";
    case Metric::kFcRevenue: return "FC revenue";
    case Metric::kRegret: return "Regret";
    case Metric::kEnvy: return "Envy";
  }
  return "";
}

bool higher_is_better(Metric metric) { return metric != Metric::kRegret && metric != Metric::kEnvy; }

MetricsReport evaluate(const Mechanism& mechanism, std::string name, const Scenario& scenario,
                       const EvaluationConfig& config) {
  if (config.samples <= 0) throw Error(ErrorCode::kConfig, "evaluation needs at least one sample");
  if (config.chunk_rows <= 0) throw Error(ErrorCode::kConfig, "chunk size must be positive");
  const LotGrid grid = scenario.grid();
  if (!(mechanism.grid() == grid) || mechanism.reserve() != scenario.reserve_price) {
    throw Error(ErrorCode::kFingerprintMismatch, "mechanism does not match the scenario");
  }
  const int n = scenario.consumer_count();
  const int k = grid.lot_count();
  const double m = scenario.total_units;
  const double reserve = scenario.reserve_price;
  const int total = config.samples;

  ProfileBatch values(total, n, k);
  std::mt19937_64 sampler(derive_seed(config.seed, 2));
  for (int r = 0; r < total; ++r) sample_into(scenario, sampler, values, r);

  std::vector<std::array<double, kMetricCount>> per_sample(total);
  MetricsReport report;
  report.mechanism = std::move(name);
  report.fingerprint = scenario.fingerprint();
  report.samples = total;
  report.seed = config.seed;
  report.regret_steps = config.regret_steps;
  report.regret_starts = config.regret_starts;
  report.min_consumer_utility = INFINITY;
  long business_ok = 0;

  AscentConfig ascent;
  ascent.steps = config.regret_steps;
  ascent.rate = config.regret_rate;
  ascent.starts = config.regret_starts;
  ascent.upper = scenario.valuation.high;

  for (int first = 0, chunk = 0; first < total; first += config.chunk_rows, ++chunk) {
    const int rows = std::min(config.chunk_rows, total - first);
    ProfileBatch part(rows, n, k);
    std::copy(values.prices.begin() + static_cast<std::ptrdiff_t>(first) * n * k,
              values.prices.begin() + static_cast<std::ptrdiff_t>(first + rows) * n * k, part.prices.begin());
    std::copy(values.caps.begin() + static_cast<std::ptrdiff_t>(first) * n,
              values.caps.begin() + static_cast<std::ptrdiff_t>(first + rows) * n, part.caps.begin());

    ascent.seed = derive_seed(config.seed, 3 + static_cast<std::uint64_t>(chunk));
    const MisreportSearch search = search_misreports(mechanism, part, ascent);
    const auto regret = sample_regret(search, scenario.total_units);
    BatchOutcome out;
    mechanism.outcomes(part, out);

    for (int r = 0; r < rows; ++r) {
      const std::size_t base = static_cast<std::size_t>(r) * n;
      double revenue = 0.0, consumers = 0.0, envy = 0.0;
      std::vector<double> alloc(n);
      for (int i = 0; i < n; ++i) {
        const double a = out.allocation[base + i];
        const double p = out.payment[base + i];
        const double value = row_value(part.schedule(r, i), a, grid);
        const double u = value - p;
        revenue += p;
        consumers += u;
        alloc[i] = a;
        report.min_consumer_utility = std::min(report.min_consumer_utility, u);
        if (p < reserve * a - kBoundTolerance * std::max(1.0, reserve * a) ||
            p > value + kBoundTolerance * std::max(1.0, value)) {
          ++report.payment_bound_violations;
        }
        double best = u;
        for (int h = 0; h < n; ++h) {
          const double q = std::min(out.allocation[base + h], part.cap(r, i));
          best = std::max(best, row_value(part.schedule(r, i), q, grid) - out.payment[base + h]);
        }
        envy = std::max(envy, best - u);
      }
      if (business_satisfied(alloc, scenario.business, scenario.total_units)) ++business_ok;
      const double fc = revenue - reserve * m;
      auto& s = per_sample[first + r];
      s[static_cast<int>(Metric::kFcUtility)] = fc;
      s[static_cast<int>(Metric::kConsumerUtility)] = consumers;
      s[static_cast<int>(Metric::kSocialWelfare)] = fc + consumers;
      s[static_cast<int>(Metric::kNsw)] = fc * consumers;
      s[static_cast<int>(Metric::kFcRevenue)] = revenue;
      s[static_cast<int>(Metric::kRegret)] = regret[r];
      s[static_cast<int>(Metric::kEnvy)] = envy / m;
    }
  }

  for (int c = 0; c < kMetricCount; ++c) {
    double sum = 0.0;
    for (const auto& s : per_sample) sum += s[c];
    const double avg = sum / total;
    double sq = 0.0;
    for (const auto& s : per_sample) sq += (s[c] - avg) * (s[c] - avg);
    report.mean[c] = avg;
    report.std_error[c] = total > 1 ? std::sqrt(sq / (total - 1) / total) : 0.0;
  }
  report.business_satisfied = static_cast<double>(business_ok) / total;
  return report;
}

namespace {

json report_to_json(const MetricsReport& r) {
  json metrics = json::object();
  for (Metric m : kMetrics) {
    metrics[std::string(metric_key(m))] = {{"mean", r.value(m)}, {"std_error", r.error(m)}};
  }
  return {{"mechanism", r.mechanism},
          {"scenario",
           {{"total_units", r.fingerprint.total_units},
            {"consumers", r.fingerprint.consumers},
            {"lot_count", r.fingerprint.lot_count},
            {"reserve_price", r.fingerprint.reserve_price},
            {"distribution", r.fingerprint.distribution}}},
          {"samples", r.samples},
          {"seed", r.seed},
          {"regret_steps", r.regret_steps},
          {"regret_starts", r.regret_starts},
          {"metrics", metrics},
          {"min_consumer_utility", r.min_consumer_utility},
          {"payment_bound_violations", r.payment_bound_violations},
          {"business_satisfied", r.business_satisfied}};
}

MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  r.mechanism = j.at("mechanism").get<std::string>();
  const auto& s = j.at("scenario");
  r.fingerprint = {s.at("total_units").get<int>(), s.at("consumers").get<int>(),
                   s.at("lot_count").get<int>(), s.at("reserve_price").get<double>(),
                   s.at("distribution").get<std::string>()};
  r.samples = j.at("samples").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.regret_steps = j.at("regret_steps").get<int>();
  r.regret_starts = j.at("regret_starts").get<int>();
  for (Metric m : kMetrics) {
    const auto& e = j.at("metrics").at(std::string(metric_key(m)));
    r.mean[static_cast<int>(m)] = e.at("mean").get<double>();
    r.std_error[static_cast<int>(m)] = e.at("std_error").get<double>();
  }
  r.min_consumer_utility = j.at("min_consumer_utility").get<double>();
  r.payment_bound_violations = j.at("payment_bound_violations").get<long>();
  r.business_satisfied = j.at("business_satisfied").get<double>();
  return r;
}

}  // namespace

std::string serialize_reports(const std::vector<MetricsReport>& reports) {
  json j;
  j["format"] = "vdasap-report";
  j["version"] = kReportFormatVersion;
  json list = json::array();
  for (const auto& r : reports) list.push_back(report_to_json(r));
  j["reports"] = list;
  return j.dump(2) + "\n";
}

std::vector<MetricsReport> parse_reports(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "vdasap-report") {
      throw Error(ErrorCode::kFormat, "not a report file");
    }
    if (j.at("version").get<int>() != kReportFormatVersion) {
      throw Error(ErrorCode::kFormat, "unsupported report file version");
    }
    std::vector<MetricsReport> out;
    for (const auto& r : j.at("reports")) out.push_back(report_from_json(r));
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed report: ") + e.what());
  }
}

Comparison compare(const std::vector<MetricsReport>& reports) {
  Comparison c;
  c.rows = reports;
  c.best.assign(reports.size(), {});
  for (const auto& r : reports) {
    if (!(r.fingerprint == reports.front().fingerprint) || r.seed != reports.front().seed) {
      throw Error(ErrorCode::kFingerprintMismatch,
                  "report '" + r.mechanism + "' was produced for a different scenario or seed");
    }
  }
  if (reports.size() < 2) return c;
  for (Metric m : kMetrics) {
    const int col = static_cast<int>(m);
    double best = reports.front().mean[col];
    for (const auto& r : reports) {
      best = higher_is_better(m) ? std::max(best, r.mean[col]) : std::min(best, r.mean[col]);
    }
    for (std::size_t i = 0; i < reports.size(); ++i) c.best[i][col] = reports[i].mean[col] == best;
  }
  return c;
}

std::string comparison_text(const Comparison& comparison) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"Mechanism"};
  for (Metric m : kMetrics) header.emplace_back(metric_title(m));
  cells.push_back(header);
  for (std::size_t i = 0; i < comparison.rows.size(); ++i) {
    const auto& r = comparison.rows[i];
    std::vector<std::string> row{r.mechanism};
    for (Metric m : kMetrics) {
      char buf[64];
      const bool small = m == Metric::kRegret || m == Metric::kEnvy;
      std::snprintf(buf, sizeof buf, small ? "%.4f" : "%.0f", r.value(m));
      std::string cell = buf;
      if (comparison.best[i][static_cast<int>(m)]) cell += " *";
      row.push_back(cell);
    }
    cells.push_back(row);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const auto& cell = cells[r][c];
      const std::string pad(width[c] - cell.size(), ' ');
      out += c == 0 ? cell + pad : "  " + pad + cell;
    }
    out += "\n";
    if (r == 0) {
      std::size_t line = 0;
      for (std::size_t c = 0; c < width.size(); ++c) line += width[c] + (c == 0 ? 0 : 2);
      out += std::string(line, '-') + "\n";
    }
  }
  if (comparison.rows.size() > 1) out += "* best in column\n";
  return out;
}

std::string comparison_json(const Comparison& comparison) {
  json j;
  j["format"] = "vdasap-comparison";
  j["version"] = kReportFormatVersion;
  json columns = json::array();
  for (Metric m : kMetrics) columns.push_back(std::string(metric_key(m)));
  j["columns"] = columns;
  json rows = json::array();
  for (std::size_t i = 0; i < comparison.rows.size(); ++i) {
    const auto& r = comparison.rows[i];
    json values = json::array(), best = json::array();
    for (Metric m : kMetrics) {
      values.push_back(r.value(m));
      best.push_back(static_cast<bool>(comparison.best[i][static_cast<int>(m)]));
    }
    rows.push_back({{"mechanism", r.mechanism}, {"values", values}, {"best", best}});
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace vdasap
