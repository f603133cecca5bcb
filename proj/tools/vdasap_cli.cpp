// vdasap: train, evaluate and run volume-discount auctions.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vdasap/auction.hpp"
#include "vdasap/bid_file.hpp"
#include "vdasap/conversion.hpp"
#include "vdasap/error.hpp"
#include "vdasap/evaluation.hpp"
#include "vdasap/mechanism.hpp"
#include "vdasap/persistence.hpp"
#include "vdasap/scenario.hpp"
#include "vdasap/trainer.hpp"
#include "vdasap/vcg.hpp"

using namespace vdasap;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size()) return x;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kConfig, "bad number '" + s + "' in " + what);
}

// min-winners-with-floor:COUNT:FLOOR | max-winner-share:CAP | max-winners:COUNT
BusinessConstraint parse_business(const std::string& spec) {
  const auto parts = split(spec, ':');
  BusinessConstraint c;
  c.kind = business_kind_from_string(parts.empty() ? "" : parts[0]);
  const auto expect = [&](std::size_t n) {
    if (parts.size() != n) throw Error(ErrorCode::kConfig, "malformed business constraint '" + spec + "'");
  };
  switch (c.kind) {
    case BusinessConstraint::Kind::kMinWinnersWithFloor:
      expect(3);
      c.count = static_cast<int>(number(parts[1], spec));
      c.floor = number(parts[2], spec);
      break;
    case BusinessConstraint::Kind::kMaxWinnerShare:
      expect(2);
      c.share_cap = number(parts[1], spec);
      break;
    case BusinessConstraint::Kind::kMaxWinners:
      expect(2);
      c.count = static_cast<int>(number(parts[1], spec));
      break;
  }
  return c;
}

Scenario scenario_with(const std::string& name, const std::vector<std::string>& business) {
  Scenario s = load_scenario(name);
  for (const auto& b : business) s.business.push_back(parse_business(b));
  s.validate();
  return s;
}

std::string format_outcome(const std::vector<BidSchedule>& bids, const std::vector<double>& allocation,
                           const std::vector<double>& payments, const LotGrid& grid) {
  std::string out = "consumer  allocation  payment  bid_value\n";
  double ta = 0.0, tp = 0.0, tv = 0.0;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    const double value = schedule_value(bids[i], allocation[i], grid);
    char line[160];
    std::snprintf(line, sizeof line, "%8zu  %10.6g  %7.10g  %9.10g\n", i + 1, allocation[i], payments[i], value);
    out += line;
    ta += allocation[i];
    tp += payments[i];
    tv += value;
  }
  char line[160];
  std::snprintf(line, sizeof line, "%8s  %10.6g  %7.10g  %9.10g\n", "total", ta, tp, tv);
  out += line;
  return out;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(path, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volume-discount auctions for farmer collectives: VCG baseline and learned mechanisms"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or INI file with option defaults (command-line flags win)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a learned mechanism");
  std::string scenario_name = "default";
  std::string variant_name = "nsw";
  std::string weights_out, log_out;
  std::vector<std::string> business;
  TrainerConfig tc;
  train_cmd->add_option("--scenario", scenario_name, "Scenario file or 'default'");
  train_cmd->add_option("--variant", variant_name, "fc-optimal | consumer-optimal | nsw | nsw-envy");
  train_cmd->add_option("--out", weights_out, "Weights file to write")->required();
  train_cmd->add_option("--log", log_out, "Training log (default: <out>.log.csv)");
  train_cmd->add_option("--steps", tc.steps, "Outer steps");
  train_cmd->add_option("--batch", tc.batch_size, "Profiles per batch");
  train_cmd->add_option("--seed", tc.seed, "Global seed");
  train_cmd->add_option("--lr", tc.learning_rate, "Adam learning rate");
  train_cmd->add_option("--regret-steps", tc.ascent.steps, "Misreport ascent steps R");
  train_cmd->add_option("--regret-rate", tc.ascent.rate, "Misreport ascent rate");
  train_cmd->add_option("--multiplier-rate", tc.multiplier_rate, "Lagrange multiplier rate");
  train_cmd->add_option("--rho-regret", tc.rho_regret, "Quadratic regret weight");
  train_cmd->add_option("--rho-envy", tc.rho_envy, "Quadratic envy weight");
  train_cmd->add_option("--rho-business", tc.rho_business, "Business penalty weight");
  train_cmd->add_option("--rho-growth", tc.rho_growth, "Penalty growth factor");
  train_cmd->add_option("--rho-interval", tc.rho_interval, "Steps between penalty growth");
  train_cmd->add_option("--business-margin", tc.business_margin, "Units added to business floors in training");
  train_cmd->add_option("--business", business,
                        "Extra business constraint: min-winners-with-floor:S:FLOOR, max-winner-share:CAP, "
                        "max-winners:S");
  train_cmd->add_option("--checkpoint-every", tc.checkpoint_interval, "Checkpoint interval in steps (0 = off)");
  std::string checkpoint_dir = ".";
  train_cmd->add_option("--checkpoint-dir", checkpoint_dir, "Directory for checkpoints");
  train_cmd->add_flag("--timing", tc.record_timing, "Record wall-clock time in the log");
  bool quiet = false;
  train_cmd->add_flag("--quiet", quiet, "No progress output");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Monte-Carlo evaluation of a mechanism");
  std::string mechanism_arg, report_out, text_out, mechanism_label;
  EvaluationConfig ec;
  eval_cmd->add_option("--mechanism", mechanism_arg, "Weights file or 'vcg'")->required();
  eval_cmd->add_option("--scenario", scenario_name, "Scenario file or 'default'");
  eval_cmd->add_option("--samples", ec.samples, "Number of sampled profiles");
  eval_cmd->add_option("--seed", ec.seed, "Evaluation seed");
  eval_cmd->add_option("--regret-steps", ec.regret_steps, "Test-time ascent steps");
  eval_cmd->add_option("--regret-starts", ec.regret_starts, "Ascent starting points (truthful + random)");
  eval_cmd->add_option("--regret-rate", ec.regret_rate, "Test-time ascent rate");
  eval_cmd->add_option("--business", business, "Business constraint to check (see train)");
  eval_cmd->add_option("--name", mechanism_label, "Row label (default: mechanism argument)");
  eval_cmd->add_option("--out", report_out, "Report file to write")->required();
  eval_cmd->add_option("--text", text_out, "Also write the aligned text table here");

  // vcg
  auto* vcg_cmd = app.add_subcommand("vcg", "Analytic VCG on a bid file");
  std::string bids_path, outcome_out;
  vcg_cmd->add_option("--bids", bids_path, "Bid file")->required();
  vcg_cmd->add_option("--out", outcome_out, "Write the outcome here instead of stdout");

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "Side-by-side comparison of reports");
  std::vector<std::string> report_paths;
  std::string compare_json_out;
  compare_cmd->add_option("--reports", report_paths, "Report files")->required();
  compare_cmd->add_option("--out", compare_json_out, "Machine-readable comparison file");
  compare_cmd->add_option("--text", text_out, "Write the text table here instead of stdout");

  // run-auction
  auto* run_cmd = app.add_subcommand("run-auction", "Learned mechanism on a bid file");
  run_cmd->add_option("--mechanism", mechanism_arg, "Weights file")->required();
  run_cmd->add_option("--bids", bids_path, "Bid file")->required();
  run_cmd->add_option("--out", outcome_out, "Write the outcome here instead of stdout");

  // convert-bid
  auto* convert_cmd = app.add_subcommand("convert-bid", "Convert a flat discount bid to lot prices");
  std::string flat_spec;
  int units = 0, lots = 0, requirement = -1;
  double reserve = 0.0;
  convert_cmd->add_option("--flat", flat_spec, "THRESHOLD:PRICE_BELOW:PRICE_ABOVE")->required();
  convert_cmd->add_option("--units", units, "Total units m")->required();
  convert_cmd->add_option("--lots", lots, "Lot count k")->required();
  convert_cmd->add_option("--requirement", requirement, "Maximum quantity (default m)");
  convert_cmd->add_option("--reserve", reserve, "Also validate against this reserve price");
  convert_cmd->add_option("--out", outcome_out, "Write the result here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config " << e.what() << "\n";
    return 3;
  }

  try {
    if (*train_cmd) {
      const Scenario scenario = scenario_with(scenario_name, business);
      tc.variant = variant_from_string(variant_name);
      tc.business = scenario.business;
      tc.checkpoint_dir = checkpoint_dir;
      const int every = std::max(1, tc.steps / 20);
      const auto result = train(scenario, tc, [&](const TrainingLogRow& row) {
        if (quiet || (row.step % every != 0 && row.step + 1 != tc.steps)) return;
        std::fprintf(stderr, "step %d  loss %.5f  revenue %.1f  nsw %.0f  regret %.4f  envy %.4f\n", row.step,
                     row.loss, row.revenue, row.nsw, row.regret, row.envy);
      });
      std::string log = training_log_header();
      for (const auto& row : result.log) log += format_log_row(row);
      write_file_atomic(log_out.empty() ? weights_out + ".log.csv" : log_out, log);
      save_mechanism(result.params, weights_out);
    } else if (*eval_cmd) {
      const Scenario scenario = scenario_with(scenario_name, business);
      MetricsReport report;
      const std::string label = mechanism_label.empty() ? mechanism_arg : mechanism_label;
      if (mechanism_arg == "vcg") {
        const VcgMechanism vcg(scenario.grid(), scenario.reserve());
        report = evaluate(vcg, label, scenario, ec);
      } else {
        const MechanismParams params = load_mechanism(mechanism_arg, scenario.fingerprint());
        const NeuralMechanism net(params, scenario.grid(), scenario.reserve());
        report = evaluate(LearnedMechanism(net), label, scenario, ec);
      }
      write_file_atomic(report_out, serialize_reports({report}));
      const std::string table = comparison_text(compare({report}));
      if (!text_out.empty()) write_file_atomic(text_out, table);
      std::cout << table;
    } else if (*vcg_cmd) {
      const BidFile file = parse_bid_file(read_file(bids_path));
      const LotGrid grid = file.grid();
      const AuctionOutcome o = vcg_payments(file.bids, grid, ReservePrice(file.reserve_price));
      emit(format_outcome(file.bids, o.allocation, o.payments, grid), outcome_out);
    } else if (*compare_cmd) {
      std::vector<MetricsReport> reports;
      for (const auto& path : report_paths) {
        for (auto& r : parse_reports(read_file(path))) reports.push_back(std::move(r));
      }
      const Comparison c = compare(reports);
      if (!compare_json_out.empty()) write_file_atomic(compare_json_out, comparison_json(c));
      emit(comparison_text(c), text_out);
    } else if (*run_cmd) {
      const BidFile file = parse_bid_file(read_file(bids_path));
      const LotGrid grid = file.grid();
      const MechanismParams params = load_mechanism(mechanism_arg);
      if (params.fingerprint.consumers != static_cast<int>(file.bids.size())) {
        throw Error(ErrorCode::kFingerprintMismatch,
                    "mechanism was trained for " + std::to_string(params.fingerprint.consumers) +
                        " consumers, bid file has " + std::to_string(file.bids.size()));
      }
      const NeuralMechanism net(params, grid, ReservePrice(file.reserve_price));
      MechanismTape tape;
      const ProfileBatch batch = make_batch(file.bids, file.reserve_price);
      const BatchOutcome& out = net.forward(batch, tape);
      std::vector<int> caps;
      for (const auto& b : file.bids) caps.push_back(b.requirement());
      int combined = 0;
      for (int c : caps) combined += c;
      const auto rounded = round_allocation(out.allocation, caps, std::min(file.total_units, combined));
      std::vector<double> allocation(rounded.begin(), rounded.end()), payments(allocation.size());
      for (std::size_t i = 0; i < allocation.size(); ++i) {
        const double value = schedule_value(file.bids[i], allocation[i], grid);
        const double base = file.reserve_price * allocation[i];
        payments[i] = base + tape.multiplier[i] * (value - base);
      }
      emit(format_outcome(file.bids, allocation, payments, grid), outcome_out);
    } else if (*convert_cmd) {
      const auto parts = split(flat_spec, ':');
      if (parts.size() != 3) throw Error(ErrorCode::kConfig, "--flat expects THRESHOLD:PRICE_BELOW:PRICE_ABOVE");
      const LotGrid grid = make_lot_grid(units, lots);
      FlatBid flat{static_cast<int>(number(parts[0], "--flat")), number(parts[1], "--flat"),
                   number(parts[2], "--flat"), requirement < 0 ? units : requirement};
      const FlatConversion conv = convert_flat_to_lot(flat, grid);
      if (reserve > 0.0) validate_bid(conv.schedule, ReservePrice(reserve), grid);
      BidFile file{units, lots, reserve > 0.0 ? reserve : 1.0, {conv.schedule}};
      std::string text = serialize_bid_file(file);
      char line[200];
      std::snprintf(line, sizeof line, "# boundary_exact %s\n# max_discrepancy %.10g at %g units\n",
                    conv.boundary_exact ? "yes" : "no", conv.max_discrepancy, conv.worst_quantity);
      text += line;
      emit(text, outcome_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << " " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: io " << e.what() << "\n";
    return 3;
  }
  return 0;
}
