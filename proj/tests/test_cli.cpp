#include <doctest.h>

#include <filesystem>

#include "cli_support.hpp"

namespace fs = std::filesystem;
using test::run_cli;
using test::slurp;
using test::spit;

namespace {

const char* kPaperBids =
    "# vdasap-bids version 1\n"
    "units 2500\n"
    "lots 5\n"
    "reserve 3\n"
    "bid 2500 20 18 18 16 16\n"
    "bid 1500 18 17 17 - -\n";

std::string default_size_bids() {
  std::string text = "# vdasap-bids version 1\nunits 1000\nlots 20\nreserve 3\n";
  for (int i = 0; i < 5; ++i) {
    text += "bid 1000";
    for (int j = 0; j < 20; ++j) text += " " + std::to_string(4.4 - 0.1 * i - 0.01 * j);
    text += "\n";
  }
  return text;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("vcg on the worked bids") {
    const auto dir = test::fresh_dir("vdasap-cli-vcg");
    spit(dir / "bids.txt", kPaperBids);
    REQUIRE(run_cli("vcg --bids " + (dir / "bids.txt").string(), dir) == 0);
    const auto out = slurp(dir / "stdout.txt");
    CHECK(out.find("total        2500") != std::string::npos);
    REQUIRE(run_cli("vcg --bids " + (dir / "bids.txt").string() + " --out " + (dir / "o.txt").string(), dir) == 0);
    CHECK(slurp(dir / "o.txt") == out);
  }

  TEST_CASE("exit codes") {
    const auto dir = test::fresh_dir("vdasap-cli-codes");
    spit(dir / "bad.txt", "# vdasap-bids version 1\nunits 10\nlots 2\nreserve 3\nbid 10 4 2.5\n");
    CHECK(run_cli("vcg --bids " + (dir / "bad.txt").string(), dir) == 2);
    CHECK(slurp(dir / "stderr.txt").find("consumer 1") != std::string::npos);
    spit(dir / "rising.txt", "# vdasap-bids version 1\nunits 10\nlots 2\nreserve 3\nbid 10 4 5\n");
    CHECK(run_cli("vcg --bids " + (dir / "rising.txt").string(), dir) == 2);
    CHECK(run_cli("vcg --bids " + (dir / "missing.txt").string(), dir) == 3);
    spit(dir / "junk.txt", "hello\n");
    CHECK(run_cli("vcg --bids " + (dir / "junk.txt").string(), dir) == 3);
    CHECK(run_cli("vcg --frobnicate", dir) == 3);
    CHECK(run_cli("train --out " + (dir / "w.json").string() + " --variant welfare", dir) == 3);
    CHECK(run_cli("train --out " + (dir / "w.json").string() + " --scenario nowhere.json", dir) == 3);
    CHECK(run_cli("convert-bid --flat 40:5.25:5 --units 100 --lots 2", dir) == 2);
    CHECK(run_cli("evaluate --mechanism vcg --samples 2 --business bogus:1 --out " + (dir / "r.json").string(), dir) == 3);
  }

  TEST_CASE("failed writes leave no output behind") {
    const auto dir = test::fresh_dir("vdasap-cli-atomic");
    spit(dir / "bids.txt", kPaperBids);
    CHECK(run_cli("vcg --bids " + (dir / "bids.txt").string() + " --out " + (dir / "no/such/dir/o.txt").string(),
                  dir) == 3);
    CHECK_FALSE(fs::exists(dir / "no"));
    spit(dir / "o.txt", "previous");
    spit(dir / "bad.txt", "# vdasap-bids version 1\nunits 10\nlots 2\nreserve 3\nbid 10 4 2.5\n");
    CHECK(run_cli("vcg --bids " + (dir / "bad.txt").string() + " --out " + (dir / "o.txt").string(), dir) == 2);
    CHECK(slurp(dir / "o.txt") == "previous");
  }

  TEST_CASE("train with zero steps, then run the weights") {
    const auto dir = test::fresh_dir("vdasap-cli-train0");
    const auto w = (dir / "w.json").string();
    REQUIRE(run_cli("train --steps 0 --out " + w + " --quiet", dir) == 0);
    CHECK(fs::exists(w));
    CHECK(slurp(w + ".log.csv") ==
          "# vdasap-training-log version=1\nstep,loss,nsw,revenue,regret,envy,lambda_norm,wall_ms\n");
    spit(dir / "bids.txt", default_size_bids());
    REQUIRE(run_cli("run-auction --mechanism " + w + " --bids " + (dir / "bids.txt").string(), dir) == 0);
    CHECK(slurp(dir / "stdout.txt").find("total        1000") != std::string::npos);
    spit(dir / "paper.txt", kPaperBids);
    CHECK(run_cli("run-auction --mechanism " + w + " --bids " + (dir / "paper.txt").string(), dir) == 3);
  }

  TEST_CASE("training and evaluation are byte-for-byte reproducible") {
    const auto dir = test::fresh_dir("vdasap-cli-determinism");
    const std::string common = " --steps 2 --batch 4 --regret-steps 2 --seed 5 --variant nsw-envy --quiet";
    REQUIRE(run_cli("train --out " + (dir / "a.json").string() + common, dir) == 0);
    REQUIRE(run_cli("train --out " + (dir / "b.json").string() + common, dir) == 0);
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
    CHECK(slurp(dir / "a.json.log.csv") == slurp(dir / "b.json.log.csv"));

    const std::string sampling = " --samples 6 --regret-steps 3 --regret-starts 2";
    const std::string eval = sampling + " --seed 3";
    REQUIRE(run_cli("evaluate --mechanism " + (dir / "a.json").string() + " --name learned --out " +
                        (dir / "r1.json").string() + eval,
                    dir) == 0);
    REQUIRE(run_cli("evaluate --mechanism " + (dir / "a.json").string() + " --name learned --out " +
                        (dir / "r2.json").string() + eval,
                    dir) == 0);
    CHECK(slurp(dir / "r1.json") == slurp(dir / "r2.json"));
    REQUIRE(run_cli("evaluate --mechanism vcg --out " + (dir / "v.json").string() + eval, dir) == 0);
    REQUIRE(run_cli("compare --reports " + (dir / "v.json").string() + " " + (dir / "r1.json").string() +
                        " --out " + (dir / "c.json").string(),
                    dir) == 0);
    const auto table = slurp(dir / "stdout.txt");
    CHECK(table.find("learned") != std::string::npos);
    CHECK(table.find("vcg") != std::string::npos);
    CHECK(fs::exists(dir / "c.json"));
    REQUIRE(run_cli("evaluate --mechanism vcg --out " + (dir / "v9.json").string() + sampling + " --seed 9", dir) == 0);
    CHECK(run_cli("compare --reports " + (dir / "v.json").string() + " " + (dir / "v9.json").string(), dir) == 3);
  }

  TEST_CASE("options from a config file") {
    const auto dir = test::fresh_dir("vdasap-cli-config");
    spit(dir / "train.toml", "[train]\nsteps = 1\nbatch = 2\nregret-steps = 1\nseed = 8\nquiet = true\n");
    const auto w = (dir / "w.json").string();
    REQUIRE(run_cli("--config " + (dir / "train.toml").string() + " train --out " + w, dir) == 0);
    const auto log = slurp(w + ".log.csv");
    CHECK(log.find("\n0,") != std::string::npos);
    CHECK(log.find("\n1,") == std::string::npos);
  }

  TEST_CASE("convert-bid") {
    const auto dir = test::fresh_dir("vdasap-cli-convert");
    REQUIRE(run_cli("convert-bid --flat 50:5.25:5 --units 100 --lots 2 --reserve 3", dir) == 0);
    const auto out = slurp(dir / "stdout.txt");
    CHECK(out.find("bid 100 5.25 4.75") != std::string::npos);
    CHECK(out.find("# boundary_exact yes") != std::string::npos);
    CHECK(out.find("# max_discrepancy 12.25 at 51 units") != std::string::npos);
  }
}
