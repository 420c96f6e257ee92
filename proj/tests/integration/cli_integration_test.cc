#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

struct Invocation {
  int exit_code = -1;
  std::string output;
};

Invocation RunCli(const std::string& args) {
  const std::string command = std::string(PSFM_CLI_PATH) + " " + args + " 2>&1";
  Invocation result;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return result;
  char buffer[512];
  while (fgets(buffer, sizeof(buffer), pipe)) result.output += buffer;
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("psfm_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(Cli, MissingScenarioIsAUsageError) {
  const Invocation r = RunCli("run --scenario /no/such/scenario.json");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("/no/such/scenario.json"), std::string::npos) << r.output;
}

TEST(Cli, UnknownOrderingIsAUsageError) {
  EXPECT_EQ(RunCli("run --ordering spiral").exit_code, 2);
  EXPECT_EQ(RunCli("frobnicate").exit_code, 2);
}

TEST(Cli, UnwritableOutputIsAUsageError) {
  const Invocation r = RunCli("run --out /proc/psfm_not_writable --max-events 2");
  EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST(Cli, ReplayReproducesRun) {
  const fs::path run = TempDir("run");
  const fs::path replay = TempDir("replay");
  const std::string scenario = std::string(PSFM_SCENARIO_DIR) + "/temple_shuffled.json";
  ASSERT_EQ(RunCli("run --scenario " + scenario + " --out " + run.string() +
                   " --max-events 25 --snapshot-every 5")
                .exit_code,
            0);
  ASSERT_EQ(RunCli("replay --scenario " + scenario + " --stream " + (run / "stream.json").string() +
                   " --scene " + (run / "scene.json").string() + " --out " + replay.string() +
                   " --max-events 25 --snapshot-every 5")
                .exit_code,
            0);
  const std::string csv = Slurp(run / "metrics.csv");
  EXPECT_FALSE(csv.empty());
  EXPECT_EQ(csv, Slurp(replay / "metrics.csv"));
  EXPECT_TRUE(fs::exists(run / "snapshots" / "0020.json"));
  EXPECT_TRUE(fs::exists(run / "snapshots" / "0024.json"));
  EXPECT_TRUE(fs::exists(run / "final" / "model.json"));
}

TEST(Cli, GenThenEvalAgreesWithTheRun) {
  const fs::path gen = TempDir("gen");
  ASSERT_EQ(RunCli("gen --seed 3 --ordering shuffled --out " + gen.string()).exit_code, 0);
  EXPECT_TRUE(fs::exists(gen / "scene.json"));
  EXPECT_TRUE(fs::exists(gen / "stream.json"));
  const auto stream = nlohmann::json::parse(Slurp(gen / "stream.json"));
  EXPECT_EQ(stream.size(), 60u);

  const fs::path run = TempDir("eval");
  ASSERT_EQ(RunCli("run --seed 3 --ordering shuffled --snapshot-every 100 --out " + run.string())
                .exit_code,
            0);
  EXPECT_EQ(Slurp(gen / "stream.json"), Slurp(run / "stream.json"));
  const Invocation eval = RunCli("eval --model " + (run / "final" / "model.json").string() +
                                 " --scene " + (run / "scene.json").string());
  ASSERT_EQ(eval.exit_code, 0) << eval.output;
  const auto metrics = nlohmann::json::parse(eval.output);
  const std::string csv = Slurp(run / "metrics.csv");
  const std::string last = csv.substr(csv.rfind('\n', csv.size() - 2) + 1);
  int t, raw, effective, registered, outliers, recoveries;
  ASSERT_EQ(std::sscanf(last.c_str(), "%d,%d,%d,%d,%d,%d", &t, &raw, &effective, &registered,
                        &outliers, &recoveries),
            6);
  EXPECT_EQ(metrics.at("registered_cameras").get<int>(), registered);
  EXPECT_EQ(metrics.at("outlier_cameras").get<int>(), outliers);
  EXPECT_EQ(metrics.at("clusters_raw").get<int>(), raw);
  EXPECT_EQ(metrics.at("clusters_effective").get<int>(), effective);
}

}  // namespace
