#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>
#include <unistd.h>

namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("csgnn_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI with stdout and stderr captured to a file.
  CliRun run(const std::string& args) const {
    const fs::path log = dir_ / "out.txt";
    const std::string cmd = "env -u CSGNN_SEED " + std::string(CSGNN_CLI_PATH) + " " + args + " > " +
                            log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
  }

  std::string data_flags() const {
    return "--edges " + (dir_ / "g/edges.csv").string() + " --features " + (dir_ / "g/features.csv").string() +
           " --labels " + (dir_ / "g/labels.csv").string();
  }

  fs::path dir_;
};

TEST_F(CliTest, NoSubcommandIsUsageError) {
  EXPECT_EQ(run("").code, 2);
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
  EXPECT_EQ(run("train --no-such-flag 1").code, 2);
}

TEST_F(CliTest, InvalidConfigValueIsUsageError) {
  const CliRun r = run("sweep-ir --irs 0.5 --seeds 1 --epochs 0 --out " + (dir_ / "s.csv").string());
  EXPECT_EQ(r.code, 2) << r.out;
}

TEST_F(CliTest, MissingDataFileIsUsageError) {
  EXPECT_EQ(run("train --edges /nonexistent.csv --features /x.csv --labels /y.csv").code, 2);
}

TEST_F(CliTest, MalformedDataIsRuntimeError) {
  fs::create_directories(dir_ / "g");
  std::ofstream(dir_ / "g/edges.csv") << "src,dst\n0,1\n";
  std::ofstream(dir_ / "g/features.csv") << "node_id,f0\n0,1.0\n1,abc\n";
  std::ofstream(dir_ / "g/labels.csv") << "node_id,label\n0,0\n1,1\n";
  const CliRun r = run("train " + data_flags() + " --out-dir " + (dir_ / "m").string());
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("error"), std::string::npos);
}

TEST_F(CliTest, GenerateTrainPredictEval) {
  CliRun r = run("generate --n 200 --ir 0.3 --feature-dim 6 --mean-degree 6 --seed 3 --out-dir " +
              (dir_ / "g").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "g/edges.csv"));

  const fs::path model = dir_ / "m";
  r = run("train " + data_flags() + " --epochs 10 --hidden-dim 8 --optimizer adam --out-dir " + model.string() +
          " --trace " + (dir_ / "trace").string());
  ASSERT_EQ(r.code, 0) << r.out;
  ASSERT_TRUE(fs::exists(model / "checkpoint.ckpt"));
  EXPECT_TRUE(fs::exists(dir_ / "trace/bandit_trace.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "trace/cost_trace.csv"));
  std::ifstream metrics_file(model / "metrics.json");
  const auto metrics = nlohmann::json::parse(metrics_file);
  EXPECT_EQ(metrics.at("history").size(), 10u);
  EXPECT_EQ(metrics.at("config").at("hidden_dim").get<int>(), 8);

  const fs::path preds = dir_ / "pred.csv";
  r = run("predict --checkpoint " + (model / "checkpoint.ckpt").string() + " " + data_flags() + " --split all --out " +
          preds.string());
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream pin(preds);
  std::string header;
  std::getline(pin, header);
  EXPECT_EQ(header, "node_id,label,p0,p1");
  std::size_t rows = 0;
  for (std::string line; std::getline(pin, line);) ++rows;
  EXPECT_EQ(rows, 200u);

  r = run("eval --checkpoint " + (model / "checkpoint.ckpt").string() + " " + data_flags() + " --split test");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto eval = nlohmann::json::parse(r.out);
  // Same checkpoint and split as the training run's own test report.
  EXPECT_EQ(eval.at("metrics").at("g_mean"), metrics.at("test").at("g_mean"));
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  ASSERT_EQ(run("generate --n 120 --feature-dim 4 --seed 1 --out-dir " + (dir_ / "g").string()).code, 0);
  std::ofstream(dir_ / "run.cfg") << "epochs = 3\nhidden_dim = 5\n";
  const CliRun r = run("train " + data_flags() + " --config " + (dir_ / "run.cfg").string() +
                    " --hidden-dim 7 --out-dir " + (dir_ / "m").string());
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(dir_ / "m/metrics.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("config").at("epochs").get<int>(), 3);
  EXPECT_EQ(j.at("config").at("hidden_dim").get<int>(), 7);
}

TEST_F(CliTest, GradcheckPasses) {
  const CliRun r = run("gradcheck --seed 7");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("ok"), std::string::npos);
}

}  // namespace
