#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csgnn/cost.hpp"
#include "csgnn/feature_transform.hpp"
#include "csgnn/gnn.hpp"
#include "csgnn/graph.hpp"
#include "csgnn/metrics.hpp"
#include "csgnn/sampler.hpp"

namespace csgnn {

/// Which CSGNN modules are active. no_sampler trains on the full adjacency,
/// no_cost keeps all-ones costs throughout, vanilla drops both.
enum class Ablation { kFull, kNoSampler, kNoCost, kVanilla };

enum class OptimizerKind { kGd, kAdam };

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t layers = 2;
  std::size_t hidden_dim = 64;
  double lr = 0.01;
  double cost_lr = 0.01;
  double lambda = 1.0;
  double beta = 1.0;
  double tau = 0.02;
  double p_init = 0.5;
  double p_min = 0.05;
  std::size_t window = 16;
  int threshold = 2;
  ActionRule action_rule = ActionRule::kGreedy;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::kFull;
  OptimizerKind optimizer = OptimizerKind::kGd;
  bool use_bias = false;
  SimilarityBasis similarity = SimilarityBasis::kSoftmax;
  double train_frac = 0.2;
  double val_frac = 0.2;

  bool sampler_enabled() const {
    return ablation == Ablation::kFull || ablation == Ablation::kNoCost;
  }
  bool cost_enabled() const {
    return ablation == Ablation::kFull || ablation == Ablation::kNoSampler;
  }
  BanditConfig bandit_config() const;
  /// Throws ParameterError on an inconsistent configuration.
  void validate() const;
};

struct EpochRecord {
  double trans_loss = 0.0;
  double gnn_loss = 0.0;
  double cost_loss = 0.0;  // ||T - C||^2 + validation error; 0 without the cost module
  double total_loss = 0.0;
  double val_error = 0.0;
  double avg_similarity = 0.0;  // NaN when the sampler is off or already frozen
  double p = 1.0;               // threshold used for this epoch's sampling
  int reward = 0;
  bool terminated = false;
  Matrix cost;  // cost matrix after this epoch's update
  // Target pieces from this epoch's logits; empty without the cost module.
  Matrix target;
  Matrix histogram;
  Matrix scatter;
  Matrix confusion;
};

/// Adam moments, one pair per trainable tensor in parameter order
/// (transform weight, transform bias, GNN weights, GNN biases). Unused by GD.
struct OptimizerState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::size_t step = 0;
};

struct TrainState {
  TrainConfig config;
  TransformParams transform;
  GnnParams gnn;
  CostMatrix cost;
  std::optional<BanditState> bandit;
  OptimizerState optimizer;
  std::size_t epoch = 0;
  std::vector<EpochRecord> history;

  /// Threshold used by the prediction path: the frozen p once the bandit has
  /// terminated, the last p otherwise, 1 without the sampler.
  double sampling_p() const;
};

struct TrainResult {
  TrainState state;
  MetricsReport validation;
};

/// Fresh parameters for a graph; the cost matrix starts from the training
/// mask class counts (or all ones when the cost module is off).
TrainState init_state(const Graph& g, const TrainConfig& cfg);

/// Runs one epoch of the full training loop and appends to the history.
void train_epoch(TrainState& state, const Graph& g);

/// All epochs, then a validation report from predict().
TrainResult train(const Graph& g, const TrainConfig& cfg);

/// Sampled graph the trained model aggregates over at prediction time.
SampledGraph prediction_graph(const TrainState& state, const Graph& g);

struct Prediction {
  std::vector<NodeId> nodes;  // ascending ids of the masked nodes
  std::vector<Label> labels;
  Matrix probabilities;       // one row per entry of nodes
};

/// Plain-softmax predictions from the GNN branch; argmax ties go to the
/// lowest class index.
Prediction predict(const TrainState& state, const Graph& g, const NodeMask& mask);

MetricsReport evaluate(const TrainState& state, const Graph& g, const NodeMask& mask);

/// L_CSGNN and its gradients for a fixed sampled graph and cost matrix.
struct CsgnnGradients {
  double gnn_loss = 0.0;
  double trans_loss = 0.0;
  double total_loss = 0.0;
  GnnGrads gnn;
  TransformGrads transform;
};

CsgnnGradients csgnn_loss_and_grads(const TransformParams& transform, const GnnParams& gnn,
                                    const CostMatrix& cost, const Graph& g,
                                    const SampledGraph& sg, double lambda);

std::string ablation_name(Ablation a);
Ablation parse_ablation(const std::string& s);

}  // namespace csgnn
