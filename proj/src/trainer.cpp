#include "csgnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "csgnn/error.hpp"

namespace csgnn {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Parameter tensors in optimizer order, paired with their gradients.
std::vector<Matrix*> param_list(TransformParams& t, GnnParams& g) {
  std::vector<Matrix*> out{&t.weight};
  if (t.has_bias()) out.push_back(&t.bias);
  for (auto& w : g.weights) out.push_back(&w);
  for (auto& b : g.biases) out.push_back(&b);
  return out;
}

std::vector<const Matrix*> grad_list(const TransformGrads& t, const GnnGrads& g) {
  std::vector<const Matrix*> out{&t.weight};
  if (!t.bias.empty()) out.push_back(&t.bias);
  for (const auto& w : g.weights) out.push_back(&w);
  for (const auto& b : g.biases) out.push_back(&b);
  return out;
}

void optimizer_step(TrainState& s, const TransformGrads& tg, const GnnGrads& gg) {
  auto params = param_list(s.transform, s.gnn);
  auto grads = grad_list(tg, gg);
  if (params.size() != grads.size()) throw ShapeError("optimizer: parameter/gradient count mismatch");
  const double lr = s.config.lr;
  if (s.config.optimizer == OptimizerKind::kGd) {
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= *grads[i] * lr;
    return;
  }
  auto& opt = s.optimizer;
  if (opt.m.empty()) {
    for (const Matrix* p : params) {
      opt.m.emplace_back(p->rows(), p->cols());
      opt.v.emplace_back(p->rows(), p->cols());
    }
  }
  ++opt.step;
  const double t = static_cast<double>(opt.step);
  const double c1 = 1.0 - std::pow(kAdamBeta1, t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& pv = params[i]->values();
    const auto& gv = grads[i]->values();
    auto& mv = opt.m[i].values();
    auto& vv = opt.v[i].values();
    for (std::size_t j = 0; j < pv.size(); ++j) {
      mv[j] = kAdamBeta1 * mv[j] + (1.0 - kAdamBeta1) * gv[j];
      vv[j] = kAdamBeta2 * vv[j] + (1.0 - kAdamBeta2) * gv[j] * gv[j];
      pv[j] -= lr * (mv[j] / c1) / (std::sqrt(vv[j] / c2) + kAdamEps);
    }
  }
}

Label argmax_row(std::span<const double> row) {
  return static_cast<Label>(std::max_element(row.begin(), row.end()) - row.begin());
}

// Fraction of masked nodes whose argmax logit differs from the label.
double mask_error(const Matrix& z, const std::vector<Label>& labels, const NodeMask& mask) {
  std::size_t wrong = 0;
  std::size_t total = 0;
  for (std::size_t v = 0; v < z.rows(); ++v) {
    if (!mask[v]) continue;
    ++total;
    if (argmax_row(z.row(v)) != labels[v]) ++wrong;
  }
  return total == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(total);
}

void check_masks(const Graph& g) {
  if (g.train_mask.size() != g.num_nodes || g.val_mask.size() != g.num_nodes ||
      g.test_mask.size() != g.num_nodes) {
    throw ValidationError("graph masks are not set; split the graph first");
  }
  for (std::size_t v = 0; v < g.num_nodes; ++v) {
    const int in = (g.train_mask[v] ? 1 : 0) + (g.val_mask[v] ? 1 : 0) + (g.test_mask[v] ? 1 : 0);
    if (in > 1) throw ValidationError("node " + std::to_string(v) + " is in more than one split");
  }
}

}  // namespace

BanditConfig TrainConfig::bandit_config() const {
  BanditConfig b;
  b.p_init = p_init;
  b.tau = tau;
  b.p_min = p_min;
  b.window = window;
  b.threshold = threshold;
  b.rule = action_rule;
  return b;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ParameterError("config: " + what); };
  if (epochs == 0) fail("epochs must be positive");
  if (layers == 0) fail("layers must be positive");
  if (hidden_dim == 0) fail("hidden_dim must be positive");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(cost_lr > 0.0)) fail("cost_lr must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be finite and >= 0");
  if (!(beta > 0.0)) fail("beta must be positive");
  if (!(tau > 0.0)) fail("tau must be positive");
  if (!(p_min > 0.0 && p_min <= 1.0)) fail("p_min must be in (0, 1]");
  if (!(p_init >= p_min && p_init <= 1.0)) fail("p_init must be in [p_min, 1]");
  if (window == 0) fail("window must be positive");
  if (threshold < 0) fail("threshold must be >= 0");
  if (!(train_frac > 0.0 && train_frac < 1.0)) fail("train_frac must be in (0, 1)");
  if (!(val_frac >= 0.0 && val_frac < 1.0)) fail("val_frac must be in [0, 1)");
  if (train_frac + val_frac > 1.0) fail("train_frac + val_frac must be <= 1");
}

double TrainState::sampling_p() const {
  if (!bandit) return 1.0;
  return bandit->effective_p();
}

TrainState init_state(const Graph& g, const TrainConfig& cfg) {
  cfg.validate();
  g.validate();
  check_masks(g);
  const ClassStats stats = class_stats(g, g.train_mask);
  TrainState s;
  s.config = cfg;
  s.transform = TransformParams::init(g.feature_dim(), g.num_classes, cfg.use_bias, cfg.seed);
  s.gnn = GnnParams::init(g.feature_dim(), cfg.hidden_dim, g.num_classes, cfg.layers,
                          cfg.use_bias, cfg.seed);
  if (cfg.cost_enabled()) {
    s.cost = init_cost(stats, cfg.beta, cfg.cost_lr);
  } else {
    s.cost = CostMatrix::uniform(g.num_classes);
    s.cost.beta = cfg.beta;
    s.cost.lr = cfg.cost_lr;
  }
  if (cfg.sampler_enabled()) s.bandit = BanditState::initial(cfg.bandit_config());
  return s;
}

CsgnnGradients csgnn_loss_and_grads(const TransformParams& transform, const GnnParams& gnn,
                                    const CostMatrix& cost, const Graph& g,
                                    const SampledGraph& sg, double lambda) {
  CsgnnGradients out;
  TransformLoss tl = transform_loss(transform, g.features, g.labels, g.train_mask);
  GnnForward fwd = gnn_forward(gnn, sg, g.features);
  CostLoss cl = cost_loss_and_grad(fwd.z, cost, g.labels, g.train_mask);
  out.trans_loss = tl.loss;
  out.gnn_loss = cl.loss;
  out.total_loss = cl.loss + lambda * tl.loss;
  out.gnn = gnn_backward(fwd.cache, cl.grad_z);
  out.transform = std::move(tl.grads);
  out.transform.weight *= lambda;
  if (!out.transform.bias.empty()) out.transform.bias *= lambda;
  return out;
}

void train_epoch(TrainState& state, const Graph& g) {
  const TrainConfig& cfg = state.config;
  EpochRecord rec;
  rec.avg_similarity = std::numeric_limits<double>::quiet_NaN();

  // Transform and its auxiliary loss.
  const Matrix h = transform(state.transform, g.features);
  TransformLoss tl = transform_loss(state.transform, g.features, g.labels, g.train_mask);
  rec.trans_loss = tl.loss;

  // Neighbor selection.
  SampledGraph sg;
  if (state.bandit) {
    BanditState& b = *state.bandit;
    if (!b.terminated) {
      rec.avg_similarity = average_similarity(h, g, g.train_mask, cfg.similarity);
      rec.reward = bandit_step(b, rec.avg_similarity).reward;
    }
    rec.p = b.effective_p();
    rec.terminated = b.terminated;
    sg = sample_neighbors(g, h, rec.p, cfg.similarity);
  } else {
    sg = SampledGraph::full(g);
    rec.p = 1.0;
  }

  // GNN forward and the cost-sensitive loss.
  GnnForward fwd = gnn_forward(state.gnn, sg, g.features);
  CostLoss cl = cost_loss_and_grad(fwd.z, state.cost, g.labels, g.train_mask);
  rec.gnn_loss = cl.loss;
  rec.total_loss = cl.loss + cfg.lambda * tl.loss;
  rec.val_error = mask_error(fwd.z, g.labels, g.val_mask);
  if (!std::isfinite(rec.total_loss)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "non-finite loss at epoch " << state.epoch << ": L_GNN=" << rec.gnn_loss
        << " L_trans=" << rec.trans_loss << " L_CSGNN=" << rec.total_loss;
    throw NumericError(msg.str());
  }

  // Parameter update.
  GnnGrads gg = gnn_backward(fwd.cache, cl.grad_z);
  tl.grads.weight *= cfg.lambda;
  if (!tl.grads.bias.empty()) tl.grads.bias *= cfg.lambda;
  optimizer_step(state, tl.grads, gg);

  // Cost matrix update from this epoch's logits, after the GNN loss.
  if (cfg.cost_enabled()) {
    const ClassStats stats = class_stats(g, g.train_mask);
    CostTarget t = build_target(fwd.z, g.labels, g.train_mask, stats, cfg.beta);
    CostMatrix cur = state.cost;
    cur.target = t.target;
    rec.cost_loss = cost_objective(cur, rec.val_error);
    state.cost = update_cost(state.cost, t.target);
    state.cost.histogram = t.histogram;
    state.cost.scatter = t.scatter;
    state.cost.confusion = t.confusion;
    rec.target = std::move(t.target);
    rec.histogram = std::move(t.histogram);
    rec.scatter = std::move(t.scatter);
    rec.confusion = std::move(t.confusion);
  }
  rec.cost = state.cost.cost;

  state.history.push_back(std::move(rec));
  ++state.epoch;
}

TrainResult train(const Graph& g, const TrainConfig& cfg) {
  TrainResult r;
  r.state = init_state(g, cfg);
  for (std::size_t e = 0; e < cfg.epochs; ++e) train_epoch(r.state, g);
  if (mask_count(g.val_mask) > 0) r.validation = evaluate(r.state, g, g.val_mask);
  return r;
}

SampledGraph prediction_graph(const TrainState& state, const Graph& g) {
  if (!state.bandit) return SampledGraph::full(g);
  const Matrix h = transform(state.transform, g.features);
  return sample_neighbors(g, h, state.sampling_p(), state.config.similarity);
}

Prediction predict(const TrainState& state, const Graph& g, const NodeMask& mask) {
  if (mask.size() != g.num_nodes) throw ShapeError("predict: mask length != node count");
  const SampledGraph sg = prediction_graph(state, g);
  const Matrix z = gnn_forward(state.gnn, sg, g.features).z;
  const Matrix probs = cost_softmax(z, state.cost, {}, CostMode::kInfer);
  Prediction p;
  p.nodes = mask_indices(mask);
  p.probabilities = Matrix(p.nodes.size(), probs.cols());
  p.labels.reserve(p.nodes.size());
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    const auto v = static_cast<std::size_t>(p.nodes[i]);
    auto src = probs.row(v);
    std::copy(src.begin(), src.end(), p.probabilities.row(i).begin());
    p.labels.push_back(argmax_row(z.row(v)));
  }
  return p;
}

MetricsReport evaluate(const TrainState& state, const Graph& g, const NodeMask& mask) {
  const Prediction p = predict(state, g, mask);
  std::vector<Label> truth;
  truth.reserve(p.nodes.size());
  for (NodeId v : p.nodes) truth.push_back(g.labels[static_cast<std::size_t>(v)]);
  return compute_metrics(truth, p.labels, p.probabilities);
}

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kNoSampler: return "no_sampler";
    case Ablation::kNoCost: return "no_cost";
    case Ablation::kVanilla: return "vanilla";
  }
  return "full";
}

Ablation parse_ablation(const std::string& s) {
  if (s == "full") return Ablation::kFull;
  if (s == "no_sampler") return Ablation::kNoSampler;
  if (s == "no_cost") return Ablation::kNoCost;
  if (s == "vanilla") return Ablation::kVanilla;
  throw ParameterError("unknown ablation '" + s + "' (full, no_sampler, no_cost, vanilla)");
}

}  // namespace csgnn
