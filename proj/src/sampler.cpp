#include "csgnn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "csgnn/error.hpp"

namespace csgnn {

BanditState BanditState::initial(const BanditConfig& config) {
  if (!(config.p_min > 0.0 && config.p_min <= 1.0)) throw ParameterError("p_min must be in (0, 1]");
  if (!(config.tau > 0.0)) throw ParameterError("tau must be positive");
  if (config.window == 0) throw ParameterError("reward window must be non-empty");
  BanditState s;
  s.config = config;
  s.p = std::clamp(config.p_init, config.p_min, 1.0);
  return s;
}

int BanditState::window_sum() const {
  return std::accumulate(reward_window.begin(), reward_window.end(), 0);
}

double average_similarity(const Matrix& h, const Graph& g, const NodeMask& train_mask,
                          SimilarityBasis basis) {
  const Matrix b = similarity_basis(h, basis);
  double sum = 0.0;
  std::size_t edges = 0;
  for (std::size_t v = 0; v < g.num_nodes; ++v) {
    if (!train_mask[v]) continue;
    for (NodeId u : g.neighbors(static_cast<NodeId>(v))) {
      if (static_cast<std::size_t>(u) <= v || !train_mask[static_cast<std::size_t>(u)]) continue;
      sum += basis_similarity(b, static_cast<NodeId>(v), u);
      ++edges;
    }
  }
  if (edges == 0) {
    throw ValidationError(
        "training mask induces no edge; use a larger train fraction or a denser graph");
  }
  return sum / static_cast<double>(edges);
}

void apply_reward(BanditState& state, int reward, int direction) {
  if (state.terminated) throw Error("bandit already terminated");
  if (reward != 1 && reward != -1) throw ParameterError("reward must be +1 or -1");
  const auto& cfg = state.config;
  state.p = std::clamp(state.p + direction * cfg.tau, cfg.p_min, 1.0);
  state.reward_window.push_back(reward);
  while (state.reward_window.size() > cfg.window) state.reward_window.pop_front();
  if (state.reward_window.size() == cfg.window && std::abs(state.window_sum()) <= cfg.threshold) {
    state.terminated = true;
    state.frozen_p = state.p;
  }
}

BanditOutcome bandit_step(BanditState& state, double g_now) {
  if (state.terminated) throw Error("bandit already terminated");
  BanditOutcome out;
  ++state.epoch;
  if (!state.prev_avg_similarity) {
    state.prev_avg_similarity = g_now;
    return out;
  }
  const double g_prev = *state.prev_avg_similarity;
  out.reward = g_prev <= g_now ? 1 : -1;
  if (state.config.rule == ActionRule::kGreedy) {
    out.action = out.reward;
  } else {
    // Similarity strictly rose -> p - tau; otherwise -> p + tau.
    out.action = g_prev < g_now ? -1 : 1;
  }
  state.prev_avg_similarity = g_now;
  apply_reward(state, out.reward, out.action);
  return out;
}

SampledGraph SampledGraph::full(const Graph& g) {
  SampledGraph s;
  s.num_nodes = g.num_nodes;
  s.row_offsets = g.row_offsets;
  s.col_indices = g.col_indices;
  return s;
}

std::size_t kept_count(double p, std::size_t degree) {
  if (degree == 0) return 0;
  // The small slack absorbs float noise in p accumulated from +-tau steps.
  const double m = std::ceil(p * static_cast<double>(degree) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(m, 1.0)), 1, degree);
}

SampledGraph sample_neighbors(const Graph& g, const Matrix& h, double p, SimilarityBasis basis) {
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("sampling threshold p must be in (0, 1]");
  if (h.rows() != g.num_nodes) throw ShapeError("sample_neighbors: embedding rows != num_nodes");
  const Matrix b = similarity_basis(h, basis);
  SampledGraph s;
  s.num_nodes = g.num_nodes;
  s.row_offsets.assign(g.num_nodes + 1, 0);
  s.col_indices.reserve(g.col_indices.size());
  std::vector<std::pair<double, NodeId>> scored;
  for (std::size_t v = 0; v < g.num_nodes; ++v) {
    const auto nb = g.neighbors(static_cast<NodeId>(v));
    const std::size_t m = kept_count(p, nb.size());
    if (m == nb.size()) {
      s.col_indices.insert(s.col_indices.end(), nb.begin(), nb.end());
    } else {
      scored.clear();
      for (NodeId u : nb) scored.emplace_back(basis_similarity(b, static_cast<NodeId>(v), u), u);
      std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(m),
                        scored.end(), [](const auto& a, const auto& c) {
                          return a.first != c.first ? a.first > c.first : a.second < c.second;
                        });
      const std::size_t start = s.col_indices.size();
      for (std::size_t i = 0; i < m; ++i) s.col_indices.push_back(scored[i].second);
      std::sort(s.col_indices.begin() + static_cast<std::ptrdiff_t>(start), s.col_indices.end());
    }
    s.row_offsets[v + 1] = s.col_indices.size();
  }
  return s;
}

}  // namespace csgnn
