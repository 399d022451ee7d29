#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "csgnn/feature_transform.hpp"
#include "csgnn/graph.hpp"
#include "csgnn/matrix.hpp"

namespace csgnn {

enum class ActionRule {
  kGreedy,  // positive reward raises p, negative lowers it
  kCounter,  // similarity rose: lower p; otherwise raise it
};

struct BanditConfig {
  double p_init = 0.5;
  double tau = 0.02;
  double p_min = 0.05;
  std::size_t window = 16;
  int threshold = 2;
  ActionRule rule = ActionRule::kGreedy;
};

/// Two-armed Bernoulli bandit over the top-p retention threshold.
struct BanditState {
  BanditConfig config;
  double p = 0.5;
  std::deque<int> reward_window;  // most recent rewards, each +1 or -1
  std::size_t epoch = 0;          // bandit steps taken
  bool terminated = false;
  std::optional<double> frozen_p;
  std::optional<double> prev_avg_similarity;

  static BanditState initial(const BanditConfig& config);
  int window_sum() const;
  /// Threshold the sampler should use now.
  double effective_p() const { return frozen_p.value_or(p); }
};

/// Outcome recorded for one bandit step.
struct BanditOutcome {
  int reward = 0;  // 0 when no reward was issued (first step)
  int action = 0;  // +1 raised p, -1 lowered p, 0 none
};

/// Mean of S(v, v') over undirected edges with both ends in the mask.
/// Throws ValidationError when the mask induces no edge.
double average_similarity(const Matrix& h, const Graph& g, const NodeMask& train_mask,
                          SimilarityBasis basis = SimilarityBasis::kSoftmax);

/// Applies one reward and p-move (+1/-1) to the state, then tests
/// termination over the reward window. Throws if already terminated.
void apply_reward(BanditState& state, int reward, int direction);

/// One epoch of the bandit given this epoch's average similarity. The first
/// call only records the similarity.
BanditOutcome bandit_step(BanditState& state, double g_now);

/// Per-node directed neighbor lists after top-p truncation.
struct SampledGraph {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<NodeId> col_indices;

  static SampledGraph full(const Graph& g);
  std::size_t degree(NodeId v) const { return row_offsets[v + 1] - row_offsets[v]; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {col_indices.data() + row_offsets[v], degree(v)};
  }
  friend bool operator==(const SampledGraph&, const SampledGraph&) = default;
};

/// max(1, ceil(p * degree)) for degree >= 1, else 0.
std::size_t kept_count(double p, std::size_t degree);

/// Keeps, for every node, the kept_count(p, deg) neighbors with the largest
/// similarity, ties to the lower node id. Kept lists are stored ascending.
SampledGraph sample_neighbors(const Graph& g, const Matrix& h, double p,
                              SimilarityBasis basis = SimilarityBasis::kSoftmax);

}  // namespace csgnn
