// Acceptance checks, one per criterion. Usage:
//
//   acceptance --train --dir D        train the four variants and write their reports into D
//   acceptance --criterion N --dir D  check one criterion (4-9 read the reports in D)
//   acceptance [--dir D]              train if needed, then check all eleven
//
// Each check prints a single "criterion N PASS|FAIL ..." line.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli_support.hpp"
#include "vdasap/conversion.hpp"
#include "vdasap/evaluation.hpp"
#include "vdasap/persistence.hpp"
#include "vdasap/trainer.hpp"
#include "vdasap/vcg.hpp"

using namespace vdasap;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEvalSeed = 7;
constexpr int kVcgSamples = 6000;
// Learned mechanisms pay for a 200-step, 5-start misreport search per
// sample, so they are evaluated on the first 1000 profiles of the same seed.
constexpr int kLearnedSamples = 1000;

struct Trained {
  Variant variant;
  std::string name;
};

const std::vector<Trained> kVariants{{Variant::kFcOptimal, "fc-optimal"},
                                     {Variant::kConsumerOptimal, "consumer-optimal"},
                                     {Variant::kNsw, "nsw"},
                                     {Variant::kNswEnvy, "nsw-envy"}};

BusinessConstraint three_at_twenty_percent() {
  return {BusinessConstraint::Kind::kMinWinnersWithFloor, 3, 200.0, 1.0};
}

Scenario scenario_for(Variant v) {
  Scenario s = default_scenario();
  if (v == Variant::kNsw || v == Variant::kNswEnvy) s.business.push_back(three_at_twenty_percent());
  return s;
}

TrainerConfig config_for(Variant v) {
  TrainerConfig c;
  c.variant = v;
  c.batch_size = 64;
  c.ascent.steps = 10;
  c.ascent.rate = 0.1;
  c.learning_rate = 1e-3;
  c.multiplier_rate = 1.0;
  c.seed = 101 + static_cast<int>(v);
  c.steps = v == Variant::kFcOptimal ? 3000 : 2000;
  if (v == Variant::kNsw || v == Variant::kNswEnvy) {
    c.business = scenario_for(v).business;
    c.rho_business = 10.0;
    c.business_margin = 10.0;
  }
  return c;
}

EvaluationConfig eval_config(int samples) {
  EvaluationConfig e;
  e.samples = samples;
  e.seed = kEvalSeed;
  return e;
}

// Everything that determines a trained model, so reruns can skip training.
std::string stamp(const TrainerConfig& c) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s steps=%d batch=%d R=%d rate=%g lr=%g mult=%g rho=%g,%g,%g margin=%g seed=%llu eval=%d\n",
                std::string(to_string(c.variant)).c_str(), c.steps, c.batch_size, c.ascent.steps, c.ascent.rate,
                c.learning_rate, c.multiplier_rate, c.rho_regret, c.rho_envy, c.rho_business, c.business_margin,
                static_cast<unsigned long long>(c.seed), kLearnedSamples);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

int train_all(const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& t : kVariants) {
    const auto config = config_for(t.variant);
    const auto weights = dir / (t.name + ".json");
    const auto report = dir / (t.name + ".report.json");
    const auto stamp_file = dir / (t.name + ".stamp");
    if (fs::exists(weights) && fs::exists(report) && fs::exists(stamp_file) &&
        read_file(stamp_file) == stamp(config)) {
      std::printf("%s: up to date\n", t.name.c_str());
      continue;
    }
    fs::remove(stamp_file);
    const Scenario scenario = scenario_for(t.variant);
    auto started = std::chrono::steady_clock::now();
    const auto result = train(scenario, config, [&](const TrainingLogRow& row) {
      if (row.step % 250 == 0 || row.step + 1 == config.steps) {
        std::printf("%s step %d revenue %.1f nsw %.0f regret %.4f envy %.4f\n", t.name.c_str(), row.step,
                    row.revenue, row.nsw, row.regret, row.envy);
        std::fflush(stdout);
      }
    });
    std::string log = training_log_header();
    for (const auto& row : result.log) log += format_log_row(row);
    write_file_atomic(dir / (t.name + ".log.csv"), log);
    save_mechanism(result.params, weights);
    std::printf("%s: trained in %.0f s\n", t.name.c_str(), seconds_since(started));

    started = std::chrono::steady_clock::now();
    const NeuralMechanism net(result.params, scenario.grid(), scenario.reserve());
    const auto r = evaluate(LearnedMechanism(net), t.name, scenario, eval_config(kLearnedSamples));
    write_file_atomic(report, serialize_reports({r}));
    write_file_atomic(stamp_file, stamp(config));
    std::printf("%s: evaluated in %.0f s\n", t.name.c_str(), seconds_since(started));
    std::fflush(stdout);
  }
  const auto vcg_report = dir / "vcg.report.json";
  if (!fs::exists(vcg_report)) {
    const Scenario s = scenario_for(Variant::kNsw);
    const VcgMechanism vcg(s.grid(), s.reserve());
    write_file_atomic(vcg_report, serialize_reports({evaluate(vcg, "vcg", s, eval_config(kLearnedSamples))}));
  }
  std::vector<MetricsReport> all;
  for (const std::string name : {"vcg", "fc-optimal", "consumer-optimal", "nsw", "nsw-envy"}) {
    all.push_back(parse_reports(read_file(dir / (name + ".report.json"))).front());
  }
  const auto table = comparison_text(compare(all));
  write_file_atomic(dir / "table.txt", table);
  std::printf("%s", table.c_str());
  return 0;
}

MetricsReport load_report(const fs::path& dir, const std::string& name) {
  const auto path = dir / (name + ".report.json");
  if (!fs::exists(path)) throw Error(ErrorCode::kIo, "missing " + path.string() + "; run --train first");
  return parse_reports(read_file(path)).front();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Verdict vcg_reproduction(const fs::path&) {
  const Scenario s = default_scenario();
  const VcgMechanism vcg(s.grid(), s.reserve());
  const auto started = std::chrono::steady_clock::now();
  const auto r = evaluate(vcg, "vcg", s, eval_config(kVcgSamples));
  const double revenue = r.value(Metric::kFcRevenue), fc = r.value(Metric::kFcUtility);
  const double welfare = r.value(Metric::kSocialWelfare), regret = r.value(Metric::kRegret);
  const bool ok = std::abs(revenue - 3763) <= 0.05 * 3763 && std::abs(fc - 763) <= 0.07 * 763 &&
                  std::abs(welfare - 1027) <= 0.05 * 1027 && regret <= 1e-4;
  return {ok, fmt("revenue %.1f (target 3763), fc utility %.1f (763), welfare %.1f (1027), regret %.2g, "
                  "consumer utility %.1f, N=%d, %.0f s",
                  revenue, fc, welfare, regret, r.value(Metric::kConsumerUtility), kVcgSamples,
                  seconds_since(started))};
}

std::vector<Money> pivot_payments(const std::vector<BidSchedule>& bids, const std::vector<Quantity>& allocation,
                                  const LotGrid& g, ReservePrice r) {
  const double w = brute_force_welfare(bids, g, r).welfare;
  std::vector<Money> out(bids.size(), 0.0);
  for (std::size_t i = 0; i < bids.size(); ++i) {
    std::vector<BidSchedule> others;
    for (std::size_t h = 0; h < bids.size(); ++h)
      if (h != i) others.push_back(bids[h]);
    out[i] = brute_force_welfare(others, g, r).welfare - (w - schedule_value(bids[i], allocation[i], g));
  }
  return out;
}

Verdict vcg_oracle(const fs::path&) {
  std::mt19937_64 rng(2);
  int welfare_mismatch = 0, payment_mismatch = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = std::uniform_int_distribution<int>(1, 20)(rng);
    const int k = std::uniform_int_distribution<int>(1, std::min(4, m))(rng);
    const int n = std::uniform_int_distribution<int>(1, 4)(rng);
    const LotGrid g(m, k);
    const ReservePrice r(3);
    std::vector<BidSchedule> bids;
    for (int i = 0; i < n; ++i) {
      const int lots = std::uniform_int_distribution<int>(0, k)(rng);
      std::vector<std::optional<Money>> prices(k);
      double p = 3.0 + std::uniform_int_distribution<int>(0, 12)(rng) * 0.25;
      for (int j = 0; j < lots; ++j) {
        prices[j] = p;
        p = std::max(3.0, p - std::uniform_int_distribution<int>(0, 4)(rng) * 0.25);
      }
      bids.push_back(BidSchedule(prices, lots == k ? m : g.lot_offset(lots)));
    }
    if (efficient_allocation(bids, g, r).welfare != brute_force_welfare(bids, g, r).welfare) ++welfare_mismatch;
    const auto o = vcg_payments(bids, g, r);
    const auto expected = pivot_payments(bids, o.allocation, g, r);
    for (int i = 0; i < n; ++i) {
      const double d = std::abs(o.payments[i] - expected[i]);
      worst = std::max(worst, d);
      if (d > 1e-9) ++payment_mismatch;
    }
  }
  return {welfare_mismatch == 0 && payment_mismatch == 0,
          fmt("1000 instances: %d welfare mismatches, %d payment mismatches, max payment gap %.3g", welfare_mismatch,
              payment_mismatch, worst)};
}

Verdict gradient_check(const fs::path&) {
  const Scenario s = scenario_for(Variant::kNswEnvy);
  auto config = config_for(Variant::kNswEnvy);
  const auto params = MechanismParams::initialize(s.fingerprint(), s.scaling(), config.hidden, 17);
  const NeuralMechanism net(params, s.grid(), s.reserve(), kernels::Exec::kSerial);
  ProfileBatch values(8, s.consumer_count(), s.lot_count);
  std::mt19937_64 rng(23);
  for (int r = 0; r < values.rows; ++r) sample_into(s, rng, values, r);
  const auto search = search_misreports(LearnedMechanism(net), values, {10, 0.3, 2, s.valuation.high, 29});
  LagrangeState lambda(s.consumer_count());
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (auto& x : lambda.regret) x = u(rng);
  for (auto& x : lambda.envy) x = u(rng);
  const PenaltyWeights weights{5.0, 3.0, 10.0};

  MechanismGradients grads(params);
  std::vector<double> grad_bids(values.prices.size());
  batch_loss(net, values, values, search, lambda, config, weights, &grads, grad_bids);
  const auto loss_at = [&](const MechanismParams& p, const ProfileBatch& bids) {
    const NeuralMechanism m(p, s.grid(), s.reserve(), kernels::Exec::kSerial);
    return batch_loss(m, values, bids, search, lambda, config, weights, nullptr).loss;
  };
  // Relative error with a floor so that coordinates with a vanishing
  // derivative (inactive ReLUs) compare absolutely.
  const auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); };
  const double h = 1e-6;
  double worst_param = 0.0, worst_bid = 0.0;
  int bad = 0;
  const std::size_t na = params.allocation_net.parameter_count(), np = params.payment_net.parameter_count();
  std::uniform_int_distribution<std::size_t> pick(0, na + np - 1);
  for (int t = 0; t < 100; ++t) {
    const std::size_t j = pick(rng);
    const bool alloc = j < na;
    const std::size_t at = alloc ? j : j - na;
    auto plus = params, minus = params;
    (alloc ? plus.allocation_net : plus.payment_net).parameters()[at] += h;
    (alloc ? minus.allocation_net : minus.payment_net).parameters()[at] -= h;
    const double fd = (loss_at(plus, values) - loss_at(minus, values)) / (2 * h);
    const double e = rel(alloc ? grads.allocation_net[at] : grads.payment_net[at], fd);
    worst_param = std::max(worst_param, e);
    if (e > 1e-4) ++bad;
  }
  std::uniform_int_distribution<std::size_t> pick_bid(0, values.prices.size() - 1);
  for (int t = 0; t < 100; ++t) {
    const std::size_t j = pick_bid(rng);
    auto plus = values, minus = values;
    plus.prices[j] += h;
    minus.prices[j] -= h;
    const double fd = (loss_at(params, plus) - loss_at(params, minus)) / (2 * h);
    const double e = rel(grad_bids[j], fd);
    worst_bid = std::max(worst_bid, e);
    if (e > 1e-4) ++bad;
  }
  return {bad == 0, fmt("nsw-envy loss, 100 parameter and 100 bid coordinates: %d above 1e-4, worst %.2g / %.2g",
                        bad, worst_param, worst_bid)};
}

Verdict ir_by_construction(const fs::path& dir) {
  bool ok = true;
  std::string detail;
  for (const auto& t : kVariants) {
    const auto r = load_report(dir, t.name);
    ok = ok && r.min_consumer_utility >= -1e-9 && r.payment_bound_violations == 0;
    detail += fmt("%s min utility %.3g, bound violations %ld; ", t.name.c_str(), r.min_consumer_utility,
                  r.payment_bound_violations);
  }
  return {ok, detail + fmt("N=%d each", kLearnedSamples)};
}

Verdict fc_ordering(const fs::path& dir) {
  const auto fc = load_report(dir, "fc-optimal");
  const auto vcg = load_report(dir, "vcg");
  const double a = fc.value(Metric::kFcRevenue), b = vcg.value(Metric::kFcRevenue);
  const double regret = fc.value(Metric::kRegret);
  return {a > b && regret <= 0.06,
          fmt("fc-optimal revenue %.1f (se %.1f) vs VCG %.1f (se %.1f), regret %.4f", a, fc.error(Metric::kFcRevenue),
              b, vcg.error(Metric::kFcRevenue), regret)};
}

Verdict consumer_ordering(const fs::path& dir) {
  const auto c = load_report(dir, "consumer-optimal");
  const auto vcg = load_report(dir, "vcg");
  const double u = c.value(Metric::kFcUtility), limit = 0.05 * vcg.value(Metric::kFcUtility);
  const double regret = c.value(Metric::kRegret);
  return {u <= limit && regret <= 0.01,
          fmt("consumer-optimal FC utility %.2f (limit %.2f), regret %.5f", u, limit, regret)};
}

Verdict nsw_dominance(const fs::path& dir) {
  const auto nsw = load_report(dir, "nsw");
  const auto vcg = load_report(dir, "vcg");
  const double gap = std::abs(nsw.value(Metric::kFcUtility) - nsw.value(Metric::kConsumerUtility));
  const double vcg_gap = std::abs(vcg.value(Metric::kFcUtility) - vcg.value(Metric::kConsumerUtility));
  const double regret = nsw.value(Metric::kRegret);
  return {nsw.value(Metric::kNsw) > vcg.value(Metric::kNsw) && regret <= 0.05 && gap < vcg_gap,
          fmt("NSW %.0f vs VCG %.0f, regret %.4f, utility split %.0f/%.0f vs VCG %.0f/%.0f",
              nsw.value(Metric::kNsw), vcg.value(Metric::kNsw), regret, nsw.value(Metric::kFcUtility),
              nsw.value(Metric::kConsumerUtility), vcg.value(Metric::kFcUtility),
              vcg.value(Metric::kConsumerUtility))};
}

Verdict envy_ordering(const fs::path& dir) {
  const auto envy = load_report(dir, "nsw-envy");
  const auto nsw = load_report(dir, "nsw");
  const auto c = load_report(dir, "consumer-optimal");
  const double a = envy.value(Metric::kEnvy), b = nsw.value(Metric::kEnvy);
  return {a < 0.5 * b && envy.value(Metric::kNsw) > c.value(Metric::kNsw),
          fmt("envy %.4f vs nsw %.4f; NSW %.0f vs consumer-optimal %.0f", a, b, envy.value(Metric::kNsw),
              c.value(Metric::kNsw))};
}

Verdict business_satisfaction(const fs::path& dir) {
  const auto nsw = load_report(dir, "nsw");
  return {nsw.business_satisfied >= 0.95,
          fmt("%.1f%% of %d samples give at least 3 consumers 200 units", 100.0 * nsw.business_satisfied, nsw.samples)};
}

Verdict worked_examples(const fs::path&) {
  const LotGrid g(2500, 5);
  const auto one = BidSchedule::full({20, 18, 18, 16, 16}, 2500);
  const auto two = BidSchedule({18.0, 17.0, 17.0, std::nullopt, std::nullopt}, 1500);
  const double v1 = schedule_value(one, 1800, g), v2 = schedule_value(two, 700, g);
  const LotGrid small(100, 2);
  const FlatBid flat{50, 5.25, 5.0, 100};
  const auto c = convert_flat_to_lot(flat, small);
  const double boundary = schedule_value(c.schedule, 100, small), interior = schedule_value(c.schedule, 75, small);
  const bool ok = v1 == 32800.0 && v2 == 12400.0 && c.boundary_exact && std::abs(boundary - 500.0) < 1e-9 &&
                  std::abs(interior - 381.25) < 1e-9 && std::abs(flat_value(flat, 75) - 375.0) < 1e-9;
  return {ok, fmt("values %.2f and %.2f; converted (%.2f, %.2f) gives %.2f at 100 units, %.2f vs flat %.2f at 75", v1,
                  v2, *c.schedule.price(0), *c.schedule.price(1), boundary, interior, flat_value(flat, 75))};
}

Verdict determinism(const fs::path& dir) {
  const fs::path work = dir / "determinism";
  std::vector<std::string> differing;
  std::vector<std::string> names;
  for (const std::string run : {"a", "b"}) {
    const fs::path d = work / run;
    fs::remove_all(d);
    fs::create_directories(d);
    test::spit(d / "bids.txt",
               "# vdasap-bids version 1\nunits 2500\nlots 5\nreserve 3\nbid 2500 20 18 18 16 16\nbid 1500 18 17 17 - -\n");
    std::string five = "# vdasap-bids version 1\nunits 1000\nlots 20\nreserve 3\n";
    for (int i = 0; i < 5; ++i) {
      five += "bid 1000";
      for (int j = 0; j < 20; ++j) five += fmt(" %.2f", 4.4 - 0.07 * i - 0.01 * j);
      five += "\n";
    }
    test::spit(d / "five.txt", five);
    const std::vector<std::string> commands{
        "train --steps 3 --batch 8 --regret-steps 3 --variant nsw-envy --seed 4 --quiet --out " + (d / "w.json").string() +
            " --business min-winners-with-floor:3:200 --checkpoint-every 2 --checkpoint-dir " + d.string(),
        "evaluate --mechanism " + (d / "w.json").string() +
            " --samples 20 --regret-steps 5 --regret-starts 2 --seed 9 --name learned --out " +
            (d / "learned.json").string() + " --text " + (d / "learned.txt").string(),
        "evaluate --mechanism vcg --samples 200 --seed 9 --out " + (d / "vcg.json").string(),
        "compare --reports " + (d / "vcg.json").string() + " " + (d / "learned.json").string() + " --out " +
            (d / "compare.json").string() + " --text " + (d / "compare.txt").string(),
        "vcg --bids " + (d / "bids.txt").string() + " --out " + (d / "vcg-outcome.txt").string(),
        "run-auction --mechanism " + (d / "w.json").string() + " --bids " + (d / "five.txt").string() + " --out " +
            (d / "run.txt").string(),
        "convert-bid --flat 50:5.25:5 --units 100 --lots 2 --reserve 3 --out " + (d / "convert.txt").string()};
    for (const auto& cmd : commands) {
      const int code = test::run_cli(cmd, d);
      if (code != 0) return {false, "command failed (" + std::to_string(code) + "): " + cmd};
    }
    fs::remove(d / "stdout.txt");
    fs::remove(d / "stderr.txt");
  }
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(work / "a")) {
    const auto name = entry.path().filename();
    if (name == "bids.txt" || name == "five.txt") continue;
    ++compared;
    if (!fs::exists(work / "b" / name) || test::slurp(entry.path()) != test::slurp(work / "b" / name)) {
      differing.push_back(name.string());
    }
  }
  std::string detail = fmt("%d output files compared across two runs", compared);
  for (const auto& d : differing) detail += ", differs: " + d;
  return {differing.empty() && compared >= 10, detail};
}

struct Criterion {
  const char* title;
  std::function<Verdict(const fs::path&)> check;
};

const std::vector<Criterion> kCriteria{
    {"VCG reproduction", vcg_reproduction},
    {"VCG oracle equivalence", vcg_oracle},
    {"gradient correctness", gradient_check},
    {"IR by construction", ir_by_construction},
    {"FC-optimal ordering", fc_ordering},
    {"consumer-optimal ordering", consumer_ordering},
    {"NSW dominance", nsw_dominance},
    {"envy ordering", envy_ordering},
    {"business constraint satisfaction", business_satisfaction},
    {"worked-example regression", worked_examples},
    {"determinism", determinism},
};

bool run_criterion(int index, const fs::path& dir) {
  const auto& c = kCriteria.at(index - 1);
  Verdict v;
  try {
    v = c.check(dir);
  } catch (const std::exception& e) {
    v = {false, std::string("error: ") + e.what()};
  }
  std::printf("criterion %d %s %s: %s\n", index, v.pass ? "PASS" : "FAIL", c.title, v.detail.c_str());
  std::fflush(stdout);
  return v.pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  bool train_only = false;
  int criterion = 0;
  std::string dir = "acceptance_models";
  app.add_flag("--train", train_only, "Train and evaluate the learned variants");
  app.add_option("--criterion", criterion, "Check one criterion (1-11)")->check(CLI::Range(1, 11));
  app.add_option("--dir", dir, "Directory for trained models and reports");
  CLI11_PARSE(app, argc, argv);

  try {
    if (train_only) return train_all(dir);
    if (criterion > 0) return run_criterion(criterion, dir) ? 0 : 1;
    train_all(dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  int failed = 0;
  for (int i = 1; i <= static_cast<int>(kCriteria.size()); ++i) failed += run_criterion(i, dir) ? 0 : 1;
  return failed == 0 ? 0 : 1;
}
