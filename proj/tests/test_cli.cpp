#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "peerinf/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = PEERINF_CLI_PATH;
const fs::path kConfigs = PEERINF_CONFIG_DIR;

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / ("peerinf_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  int run(const std::string& args) const {
    const std::string cmd = kCli + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                            (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string out(const std::string& name) const { return (dir / name).string(); }
  std::string cfg(const std::string& name) const { return (kConfigs / name).string(); }
};

}  // namespace

TEST_F(Cli, CommunityPipeline) {
  const auto c = " --config " + cfg("community_small.ini") + " --out " + out("w");
  ASSERT_EQ(run("generate" + c), 0);
  ASSERT_TRUE(fs::exists(out("w/edges.tsv")));
  ASSERT_TRUE(fs::exists(out("w/labels.csv")));
  ASSERT_EQ(run("detect" + c + " --edges " + out("w/edges.tsv") + " --truth " + out("w/labels.csv")), 0);
  ASSERT_TRUE(fs::exists(out("w/labels_hat.csv")));
  const auto det = nlohmann::json::parse(peerinf::io::read_text(out("w/detection.json")));
  EXPECT_TRUE(det.contains("misclassification_rate"));
  ASSERT_EQ(run("simulate" + c + " --edges " + out("w/edges.tsv") + " --locations " + out("w/labels.csv")), 0);
  ASSERT_EQ(run("estimate" + c + " --edges " + out("w/edges.tsv") + " --panel " + out("w/panel.csv") + " --covariates " +
                out("w/covariates.csv") + " --strategy naive --strategy oracle --strategy proxy --true-locations " +
                out("w/labels.csv") + " --estimated-locations " + out("w/labels_hat.csv")),
            0);
  const auto fit = nlohmann::json::parse(peerinf::io::read_text(out("w/fit_oracle.json")));
  EXPECT_EQ(fit.at("strategy"), "oracle");
  EXPECT_EQ(fit.at("coeffs").size(), fit.at("std_errors").size());
  ASSERT_EQ(run("bound --delta 0.1 --fit " + out("w/fit_proxy.json") + " --out " + out("w")), 0);
  const auto bound = nlohmann::json::parse(peerinf::io::read_text(out("w/bound.json")));
  EXPECT_GE(bound.at("bound_value").get<double>(), 0.0);
}

TEST_F(Cli, EstimateEnsemble) {
  const auto c = " --config " + cfg("community_small.ini") + " --out " + out("w");
  ASSERT_EQ(run("generate" + c), 0);
  ASSERT_EQ(run("estimate" + c + " --edges " + out("w/edges.tsv") + " --strategy oracle --true-locations " +
                out("w/labels.csv") + " --replications 5"),
            0);
  std::ifstream is(out("w/ensemble.csv"));
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "replication,strategy,beta_hat");
  int rows = 0;
  while (std::getline(is, line)) rows += !line.empty();
  EXPECT_EQ(rows, 5);
}

TEST_F(Cli, ContinuousGenerateAndEmbed) {
  const auto c = " --config " + cfg("continuous_small.ini") + " --out " + out("w");
  ASSERT_EQ(run("generate" + c + " --n 30"), 0);
  ASSERT_TRUE(fs::exists(out("w/positions.csv")));
  ASSERT_EQ(run("embed" + c + " --edges " + out("w/edges.tsv") + " --n 30 --truth " + out("w/positions.csv")), 0);
  EXPECT_TRUE(fs::exists(out("w/positions_hat.csv")));
  EXPECT_TRUE(fs::exists(out("w/embedding.json")));
}

TEST_F(Cli, BoundFromGamma) {
  ASSERT_EQ(run("bound --delta 0.2 --gamma 1,-1 --k 3 --out " + out("w")), 0);
  const auto j = nlohmann::json::parse(peerinf::io::read_text(out("w/bound.json")));
  EXPECT_GT(j.at("bound_value").get<double>(), 0.0);
  EXPECT_EQ(run("bound --delta 1.5 --gamma 1 --k 2 --out " + out("v")), 1);
}

TEST_F(Cli, ExperimentAndReport) {
  const auto c = " --config " + cfg("community_small.ini") + " --out " + out("e");
  ASSERT_EQ(run("experiment" + c + " --workers 2"), 0);
  for (const char* f : {"rows.csv", "summary.json", "bias.svg"}) EXPECT_TRUE(fs::exists(out(std::string("e/") + f)));
  const auto first = peerinf::io::read_text(out("e/rows.csv"));

  EXPECT_EQ(run("experiment" + c + " --workers 2"), 1);
  EXPECT_EQ(peerinf::io::read_text(out("e/rows.csv")), first);
  ASSERT_EQ(run("experiment" + c + " --overwrite --workers 1"), 0);
  EXPECT_EQ(peerinf::io::read_text(out("e/rows.csv")), first);

  ASSERT_EQ(run("report --in " + out("e") + " --out " + out("r") + " --format svg --format json --log-y"), 0);
  EXPECT_TRUE(fs::exists(out("r/bias.svg")));
  EXPECT_TRUE(fs::exists(out("r/summary.json")));
  EXPECT_FALSE(fs::exists(out("r/rows.csv")));
}

TEST_F(Cli, SeedOverrideChangesRows) {
  const auto c = " --config " + cfg("community_small.ini") + " --format csv";
  ASSERT_EQ(run("experiment" + c + " --out " + out("a")), 0);
  ASSERT_EQ(run("experiment" + c + " --seed 5 --out " + out("b")), 0);
  EXPECT_NE(peerinf::io::read_text(out("a/rows.csv")), peerinf::io::read_text(out("b/rows.csv")));
}

TEST_F(Cli, ExcessiveFailuresExitTwo) {
  EXPECT_EQ(run("experiment --config " + cfg("unstable.ini") + " --out " + out("u")), 2);
  EXPECT_TRUE(fs::exists(out("u/rows.csv")));
}

TEST_F(Cli, ValidationErrorsExitOne) {
  std::ofstream(out("bad.ini")) << "[experiment]\nsetting = community\nbogus = 1\n";
  EXPECT_EQ(run("experiment --config " + out("bad.ini") + " --out " + out("x")), 1);
  EXPECT_EQ(run("experiment --out " + out("x")), 1);
  EXPECT_EQ(run("experiment --config " + out("missing.ini")), 1);
  EXPECT_EQ(run("nonsense"), 1);
  EXPECT_EQ(run("experiment --config " + cfg("community_small.ini") + " --workers 0 --out " + out("x")), 1);
  EXPECT_EQ(run("report --in " + out("nowhere")), 1);
}
