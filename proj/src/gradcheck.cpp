#include "csgnn/gradcheck.hpp"

#include <algorithm>

#include "csgnn/cost.hpp"
#include "csgnn/error.hpp"
#include "csgnn/feature_transform.hpp"
#include "csgnn/gnn.hpp"
#include "csgnn/graph.hpp"
#include "csgnn/random.hpp"
#include "csgnn/sampler.hpp"
#include "csgnn/trainer.hpp"

namespace csgnn {

namespace {

Matrix random_normal(std::size_t rows, std::size_t cols, double scale, SplitMix64& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

Matrix random_cost(std::size_t k, SplitMix64& rng) {
  Matrix c(k, k);
  for (double& v : c.values()) v = rng.uniform(0.1, 3.0);
  return c;
}

}  // namespace

CostGradCheck check_cost_gradient(std::uint64_t seed, std::size_t instances) {
  static constexpr std::size_t kClassChoices[] = {2, 3, 5};
  SplitMix64 rng(seed, 500);
  CostGradCheck out;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t k = kClassChoices[i % 3];
    const std::size_t n = 1 + rng.below(10);
    CostMatrix c = CostMatrix::uniform(k);
    c.cost = random_cost(k, rng);
    std::vector<Label> labels(n);
    for (auto& y : labels) y = static_cast<Label>(rng.below(k));
    NodeMask mask(n, true);
    const Matrix z = random_normal(n, k, 2.0, rng);

    const Matrix analytic = cost_loss_and_grad(z, c, labels, mask).grad_z;
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& zz) { return cost_loss_and_grad(zz, c, labels, mask).loss; }, z);
    out.max_rel_error = std::max(out.max_rel_error, relative_error(analytic, numeric));
    ++out.instances;
  }
  return out;
}

EndToEndGradCheck check_end_to_end_gradient(std::uint64_t seed) {
  constexpr std::size_t kNodes = 10;
  constexpr std::size_t kClasses = 3;
  constexpr std::size_t kFeatures = 4;
  constexpr std::size_t kHidden = 5;
  SplitMix64 rng(seed, 501);

  // Ring plus random chords keeps every node connected.
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t v = 0; v < kNodes; ++v) {
    edges.emplace_back(static_cast<NodeId>(v), static_cast<NodeId>((v + 1) % kNodes));
  }
  for (int e = 0; e < 8; ++e) {
    edges.emplace_back(static_cast<NodeId>(rng.below(kNodes)), static_cast<NodeId>(rng.below(kNodes)));
  }
  std::vector<Label> labels(kNodes);
  for (std::size_t v = 0; v < kNodes; ++v) labels[v] = static_cast<Label>(v % kClasses);
  Graph g = Graph::from_edges(kNodes, edges, random_normal(kNodes, kFeatures, 1.0, rng), labels,
                              kClasses);
  g.train_mask.assign(kNodes, false);
  for (std::size_t v = 0; v < 7; ++v) g.train_mask[v] = true;

  TransformParams tp = TransformParams::init(kFeatures, kClasses, true, seed);
  GnnParams gp = GnnParams::init(kFeatures, kHidden, kClasses, 2, true, seed);
  // Nonzero biases so their gradients are exercised away from zero.
  for (double& b : tp.bias.values()) b = 0.1 * rng.normal();
  for (auto& bias : gp.biases)
    for (double& b : bias.values()) b = 0.1 * rng.normal();
  CostMatrix cost = CostMatrix::uniform(kClasses);
  cost.cost = random_cost(kClasses, rng);
  const double lambda = 0.7;
  const SampledGraph sg = sample_neighbors(g, transform(tp, g.features), 0.5);

  const CsgnnGradients grads = csgnn_loss_and_grads(tp, gp, cost, g, sg, lambda);
  EndToEndGradCheck out;
  auto record = [&](const std::string& name, const Matrix& analytic, const Matrix& at,
                    const ScalarFn& f) {
    const double err = relative_error(analytic, finite_diff_grad(f, at));
    out.tensors.push_back({name, err});
    out.max_rel_error = std::max(out.max_rel_error, err);
  };
  auto loss_with = [&](const TransformParams& t, const GnnParams& p) {
    return csgnn_loss_and_grads(t, p, cost, g, sg, lambda).total_loss;
  };

  record("transform.weight", grads.transform.weight, tp.weight, [&](const Matrix& m) {
    TransformParams t = tp;
    t.weight = m;
    return loss_with(t, gp);
  });
  record("transform.bias", grads.transform.bias, tp.bias, [&](const Matrix& m) {
    TransformParams t = tp;
    t.bias = m;
    return loss_with(t, gp);
  });
  for (std::size_t l = 0; l < gp.num_layers(); ++l) {
    const std::string prefix = "gnn.layer" + std::to_string(l);
    record(prefix + ".weight", grads.gnn.weights[l], gp.weights[l], [&](const Matrix& m) {
      GnnParams p = gp;
      p.weights[l] = m;
      return loss_with(tp, p);
    });
    record(prefix + ".bias", grads.gnn.biases[l], gp.biases[l], [&](const Matrix& m) {
      GnnParams p = gp;
      p.biases[l] = m;
      return loss_with(tp, p);
    });
  }
  return out;
}

}  // namespace csgnn
