#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "edgetsn/dataset.hpp"
#include "edgetsn/synthetic.hpp"

namespace edgetsn {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("edgetsn_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(EDGETSN_CLI) + " " + args + " >" + (dir_ / "stdout.txt").string() +
                            " 2>" + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  fs::path dir_;
};

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("train --manifest x.jsonl"), 1);
  EXPECT_EQ(run("eval --manifest a --weights b --crops twelve"), 1);
  EXPECT_EQ(run("ingest --in a --out b --fps notanumber"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, DataErrorsExitWithTwo) {
  EXPECT_EQ(run("train --manifest " + path("missing.jsonl") + " --out " + path("w")), 2);
  std::ofstream(path("bad.edgv")) << "not a video";
  EXPECT_EQ(run("ingest --in " + path("bad.edgv") + " --out " + path("v")), 2);
}

TEST_F(Cli, SynthIngestFlowTrainEvalBench) {
  ASSERT_EQ(run("synth --out " + path("ds") + " --per-class 1 --frames 10 --size 16 --seed 2"), 0);
  const std::string rgb = path("ds/rgb/manifest.jsonl");
  EXPECT_EQ(read_manifest(rgb).records.size(), 4u);

  std::ofstream(path("cfg.json")) << R"({"epochs": 1, "batch_size": 2, "widths": [4, 4], "k_test": 4})";
  ASSERT_EQ(run("flow --manifest " + rgb + " --out " + path("flow") + " --window 2 --vmax 4"), 0);
  EXPECT_EQ(read_manifest(path("flow/manifest.jsonl")).records.front().flow_vmax, 4.0);
  ASSERT_EQ(run("train --manifest " + rgb + " --config " + path("cfg.json") + " --out " + path("w") + " --seed 1"), 0);
  ASSERT_EQ(run("train --manifest " + path("flow/manifest.jsonl") + " --config " + path("cfg.json") + " --out " +
                path("wf") + " --seed 1"),
            0);
  ASSERT_EQ(run("eval --manifest " + rgb + " --weights " + path("w") + " --weights-flow " + path("wf") +
                " --manifest-flow " + path("flow/manifest.jsonl") + " --fuse 0.5 --k 4 --crops tencrop --out " +
                path("pred.jsonl")),
            0);
  std::ifstream preds(path("pred.jsonl"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(preds, line)) {
    const nlohmann::json j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("probabilities").size(), 4u);
    EXPECT_LT(j.at("label").get<std::size_t>(), 4u);
    ++n;
  }
  EXPECT_EQ(n, 4u);
  EXPECT_EQ(run("eval --manifest " + rgb + " --weights " + path("w") + " --weights-flow " + path("wf")), 1);

  ASSERT_EQ(run("bench-mem --spec " + path("w") + " --height 16 --width 16 --k 4 --out " + path("mem.json")), 0);
  std::ifstream mem(path("mem.json"));
  EXPECT_EQ(nlohmann::json::parse(mem).at("activation_ratio").get<double>(), 10.0);

  std::ofstream(path("ts.json")) << R"({"conv1": 3, "conv2": 1})";
  EXPECT_EQ(run("inflate --weights2d " + path("w") + " --temporal-sizes " + path("ts.json") + " --out " + path("w3")), 0);
  EXPECT_TRUE(fs::exists(path("w3/spec.json")));
  std::ofstream(path("ts_bad.json")) << R"({"conv1": 3})";
  EXPECT_EQ(run("inflate --weights2d " + path("w") + " --temporal-sizes " + path("ts_bad.json") + " --out " +
                path("w4")),
            2);
}

}  // namespace
}  // namespace edgetsn
