#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "csgnn/checkpoint.hpp"
#include "csgnn/config.hpp"
#include "csgnn/error.hpp"
#include "csgnn/trainer.hpp"

namespace csgnn {
namespace {

namespace fs = std::filesystem;

Graph small_graph() {
  SyntheticSpec spec;
  spec.n = 150;
  spec.ir = 0.4;
  spec.feature_dim = 6;
  spec.mean_degree = 5.0;
  spec.seed = 2;
  return split_masks(generate_synthetic(spec), 0.3, 0.2, 2);
}

TrainState trained_state(Ablation a, bool bias = false) {
  TrainConfig cfg;
  cfg.epochs = 25;
  cfg.hidden_dim = 6;
  cfg.lr = 0.05;
  cfg.ablation = a;
  cfg.use_bias = bias;
  cfg.optimizer = OptimizerKind::kAdam;
  cfg.action_rule = ActionRule::kCounter;
  cfg.seed = 9;
  return train(small_graph(), cfg).state;
}

TrainState round_trip(const TrainState& s) {
  std::stringstream buf;
  write_checkpoint(buf, s);
  return read_checkpoint(buf);
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("csgnn_persist_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TEST(Checkpoint, RoundTripIsBitExact) {
  for (Ablation a : {Ablation::kFull, Ablation::kNoSampler, Ablation::kNoCost, Ablation::kVanilla}) {
    const TrainState s = trained_state(a, a == Ablation::kFull);
    const TrainState r = round_trip(s);
    EXPECT_EQ(r.transform.weight, s.transform.weight);
    EXPECT_EQ(r.transform.bias, s.transform.bias);
    EXPECT_EQ(r.gnn.weights, s.gnn.weights);
    EXPECT_EQ(r.gnn.biases, s.gnn.biases);
    EXPECT_EQ(r.cost.cost, s.cost.cost);
    EXPECT_EQ(r.epoch, s.epoch);
    EXPECT_EQ(r.sampling_p(), s.sampling_p());
    EXPECT_EQ(r.bandit.has_value(), s.bandit.has_value());
    EXPECT_EQ(config_to_json(r.config), config_to_json(s.config));
  }
}

TEST(Checkpoint, ReloadedModelPredictsIdentically) {
  const Graph g = small_graph();
  const TrainState s = trained_state(Ablation::kFull);
  TempDir dir;
  save_checkpoint(s, dir.path() / "m.ckpt");
  const TrainState r = load_checkpoint(dir.path() / "m.ckpt");
  const Prediction a = predict(s, g, g.test_mask);
  const Prediction b = predict(r, g, g.test_mask);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.probabilities, b.probabilities);
}

TEST(Checkpoint, SubnormalValuesSurvive) {
  TrainState s = trained_state(Ablation::kVanilla);
  s.gnn.weights[0](0, 0) = 4.9406564584124654e-324;
  EXPECT_EQ(round_trip(s).gnn.weights[0](0, 0), s.gnn.weights[0](0, 0));
}

TEST(Checkpoint, BadHeaderIsParseError) {
  std::stringstream buf("not a checkpoint\n");
  EXPECT_THROW(read_checkpoint(buf), ParseError);
}

TEST(Checkpoint, TruncatedTensorIsParseError) {
  std::stringstream full;
  write_checkpoint(full, trained_state(Ablation::kVanilla));
  const std::string text = full.str();
  std::stringstream cut(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_checkpoint(cut), Error);
}

TEST(Checkpoint, MissingFileThrows) {
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/m.ckpt"), Error);
}

TEST(Config, EveryFieldRoundTripsThroughText) {
  TrainConfig cfg;
  cfg.hidden_dim = 17;
  cfg.action_rule = ActionRule::kCounter;
  cfg.optimizer = OptimizerKind::kAdam;
  cfg.similarity = SimilarityBasis::kRaw;
  cfg.ablation = Ablation::kNoCost;
  cfg.lambda = 0.123456789012345;
  TrainConfig copy;
  for (const auto& f : config_fields()) f.set(copy, f.get(cfg));
  EXPECT_EQ(config_to_json(copy), config_to_json(cfg));
}

TEST(Config, UnknownKeyRejected) {
  TrainConfig cfg;
  EXPECT_THROW(set_config_value(cfg, "learning_rate", "0.1"), ParameterError);
}

TEST(Config, BadValueRejected) {
  TrainConfig cfg;
  EXPECT_THROW(set_config_value(cfg, "epochs", "ten"), ParameterError);
  EXPECT_THROW(set_config_value(cfg, "optimizer", "sgd"), ParameterError);
}

TEST(ConfigFile, AppliesValuesAndSkipsComments) {
  TempDir dir;
  const fs::path file = dir.path() / "run.cfg";
  std::ofstream(file) << "# settings\n\nepochs = 7\n  lr=0.5\naction_rule = counter\n";
  TrainConfig cfg;
  apply_config_file(cfg, file);
  EXPECT_EQ(cfg.epochs, 7u);
  EXPECT_EQ(cfg.lr, 0.5);
  EXPECT_EQ(cfg.action_rule, ActionRule::kCounter);
}

TEST(ConfigFile, MalformedLineNamesLineNumber) {
  TempDir dir;
  const fs::path file = dir.path() / "bad.cfg";
  std::ofstream(file) << "epochs = 7\nthis line has no equals sign\n";
  TrainConfig cfg;
  try {
    apply_config_file(cfg, file);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u) << e.what();
  }
}

TEST(MetricsJson, ContainsHeadlineNumbers) {
  MetricsReport m;
  m.per_class_recall = {1.0, 0.25};
  m.macro_recall = 0.625;
  m.g_mean = 0.5;
  m.macro_auc = 0.75;
  const auto j = metrics_to_json(m);
  EXPECT_EQ(j.at("g_mean").get<double>(), 0.5);
  EXPECT_EQ(j.at("macro_auc").get<double>(), 0.75);
}

}  // namespace
}  // namespace csgnn
