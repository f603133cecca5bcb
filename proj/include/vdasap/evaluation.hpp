#pragma once
// Monte-Carlo evaluation with the Table-1 metrics, and side-by-side
// comparison of several reports.
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vdasap/regret.hpp"
#include "vdasap/scenario.hpp"

namespace vdasap {

inline constexpr int kReportFormatVersion = 1;

struct EvaluationConfig {
  int samples = 6000;
  std::uint64_t seed = 1;
  int regret_steps = 200;
  int regret_starts = 5;
  double regret_rate = 0.1;
  int chunk_rows = 128;  // samples per misreport-search batch
};

// Column order of the comparison table.
enum class Metric { kFcUtility, kConsumerUtility, kSocialWelfare, kNsw, kFcRevenue, kRegret, kEnvy };
inline constexpr int kMetricCount = 7;
std::string_view metric_key(Metric metric);
std::string_view metric_title(Metric metric);
bool higher_is_better(Metric metric);

struct MetricsReport {
  std::string mechanism;
  ScenarioFingerprint fingerprint;
  int samples = 0;
  std::uint64_t seed = 0;
  int regret_steps = 0;
  int regret_starts = 0;
  std::array<double, kMetricCount> mean{};
  std::array<double, kMetricCount> std_error{};
  // Diagnostics over every sample and consumer.
  double min_consumer_utility = 0.0;  // truthful utilities, must be >= 0 for IR mechanisms
  long payment_bound_violations = 0;  // p_i outside [reserve*a_i, value(a_i)] beyond 1e-9
  double business_satisfied = 1.0;    // fraction of samples meeting the scenario's business rules

  double value(Metric m) const { return mean[static_cast<int>(m)]; }
  double error(Metric m) const { return std_error[static_cast<int>(m)]; }
  bool operator==(const MetricsReport&) const = default;
};

/// Draws `samples` truthful profiles from the scenario and runs the
/// mechanism on each; regret uses the multi-start misreport search.
MetricsReport evaluate(const Mechanism& mechanism, std::string name, const Scenario& scenario,
                       const EvaluationConfig& config);

std::string serialize_reports(const std::vector<MetricsReport>& reports);
std::vector<MetricsReport> parse_reports(const std::string& text);

struct Comparison {
  std::vector<MetricsReport> rows;
  // best[row][metric]: row attains the column's best value (ties all flagged).
  // Nothing is flagged when there is a single row.
  std::vector<std::array<bool, kMetricCount>> best;
};

/// Throws kFingerprintMismatch when the reports disagree on scenario or seed.
Comparison compare(const std::vector<MetricsReport>& reports);
std::string comparison_text(const Comparison& comparison);
std::string comparison_json(const Comparison& comparison);

}  // namespace vdasap
