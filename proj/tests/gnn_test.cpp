#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "csgnn/error.hpp"
#include "csgnn/gnn.hpp"
#include "csgnn/random.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace csgnn {
namespace {

GnnParams single_layer(Matrix w) {
  GnnParams p;
  p.weights.push_back(std::move(w));
  return p;
}

TEST(GnnForward, PathGraphHandExample) {
  const Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}}, Matrix(3, 1), {0, 1, 0}, 2);
  const Matrix x = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
  const Matrix z = gnn_forward(single_layer(Matrix::identity(2)), SampledGraph::full(g), x).z;
  EXPECT_NEAR(z(1, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(z(1, 1), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(z(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(z(0, 1), 0.5, 1e-15);
}

TEST(GnnForward, IsolatedNodeSeesOnlyItself) {
  const Graph g = Graph::from_edges(3, {{0, 1}}, Matrix(3, 1), {0, 1, 0}, 2);
  const Matrix x = Matrix::from_rows({{1, 0}, {0, 1}, {3, -2}});
  const Matrix z = gnn_forward(single_layer(Matrix::identity(2)), SampledGraph::full(g), x).z;
  EXPECT_EQ(z(2, 0), 3.0);
  EXPECT_EQ(z(2, 1), -2.0);
}

TEST(GnnForward, ZeroWeightsGiveZeroLogits) {
  SplitMix64 rng(1);
  const Graph g = testing::random_graph(8, 0.4, 3, 2, rng);
  GnnParams p = GnnParams::init(3, 4, 2, 2, false, 1);
  for (auto& w : p.weights) w.fill(0.0);
  EXPECT_EQ(max_abs(gnn_forward(p, SampledGraph::full(g), g.features).z), 0.0);
}

TEST(GnnForward, MatchesNaiveLoopOnRandomGraphs) {
  SplitMix64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + rng.below(20), d = 1 + rng.below(6), k = 2 + rng.below(3);
    const std::size_t layers = 1 + rng.below(3);
    const Graph g = testing::random_graph(n, 0.3, d, k, rng);
    GnnParams p = GnnParams::init(d, 1 + rng.below(6), k, layers, t % 2 == 1, rng.next());
    for (auto& b : p.biases) b = testing::random_matrix(1, b.cols(), rng, -0.3, 0.3);
    const SampledGraph sg = SampledGraph::full(g);
    EXPECT_LT(max_abs(gnn_forward(p, sg, g.features).z - oracle::gnn_forward(p, sg, g.features)), 1e-12);
  }
}

TEST(GnnForward, FeatureShapeMismatchThrows) {
  SplitMix64 rng(3);
  const Graph g = testing::random_graph(4, 0.5, 3, 2, rng);
  EXPECT_THROW(gnn_forward(GnnParams::init(3, 4, 2, 2, false, 1), SampledGraph::full(g), Matrix(5, 3)),
               ShapeError);
}

TEST(GnnParamsInit, RejectsZeroLayers) {
  EXPECT_THROW(GnnParams::init(3, 4, 2, 0, false, 1), ParameterError);
}

TEST(GnnParamsInit, DimensionChain) {
  const GnnParams p = GnnParams::init(5, 7, 3, 3, true, 1);
  ASSERT_EQ(p.num_layers(), 3u);
  EXPECT_EQ(p.weights[0].rows(), 5u);
  EXPECT_EQ(p.weights[0].cols(), 7u);
  EXPECT_EQ(p.weights[2].cols(), 3u);
  EXPECT_EQ(p.biases[2].cols(), 3u);
  EXPECT_NO_THROW(p.validate());
}

TEST(GnnForward, PermutationEquivariant) {
  SplitMix64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 3 + rng.below(15);
    const Graph g = testing::random_graph(n, 0.3, 3, 2, rng);
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, rng);
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t v = 0; v < n; ++v)
      for (NodeId u : g.neighbors(static_cast<NodeId>(v)))
        edges.emplace_back(perm[v], perm[static_cast<std::size_t>(u)]);
    Matrix xp(n, 3);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t c = 0; c < 3; ++c) xp(static_cast<std::size_t>(perm[v]), c) = g.features(v, c);
    const Graph gp = Graph::from_edges(n, edges, xp, g.labels, 2);
    const GnnParams p = GnnParams::init(3, 5, 2, 2, false, rng.next());
    const Matrix z = gnn_forward(p, SampledGraph::full(g), g.features).z;
    const Matrix zp = gnn_forward(p, SampledGraph::full(gp), xp).z;
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(zp(static_cast<std::size_t>(perm[v]), c), z(v, c), 1e-12);
  }
}

TEST(GnnForward, NeighborOrderDoesNotMatter) {
  SplitMix64 rng(5);
  const Graph g = testing::random_graph(15, 0.4, 3, 2, rng);
  SampledGraph sg = SampledGraph::full(g);
  SampledGraph reversed = sg;
  for (std::size_t v = 0; v < sg.num_nodes; ++v)
    std::reverse(reversed.col_indices.begin() + static_cast<std::ptrdiff_t>(sg.row_offsets[v]),
                 reversed.col_indices.begin() + static_cast<std::ptrdiff_t>(sg.row_offsets[v + 1]));
  const GnnParams p = GnnParams::init(3, 4, 2, 2, false, 9);
  EXPECT_LT(max_abs(gnn_forward(p, sg, g.features).z - gnn_forward(p, reversed, g.features).z), 1e-12);
}

TEST(MeanAggregate, TransposeIsAdjoint) {
  // <A x, y> == <x, A^T y>
  SplitMix64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.below(15);
    const Graph g = testing::random_graph(n, 0.3, 1, 2, rng);
    const SampledGraph sg = SampledGraph::full(g);
    const Matrix x = testing::random_matrix(n, 3, rng);
    const Matrix y = testing::random_matrix(n, 3, rng);
    const Matrix ax = mean_aggregate(sg, x);
    const Matrix aty = mean_aggregate_transpose(sg, y);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      lhs += ax.values()[i] * y.values()[i];
      rhs += x.values()[i] * aty.values()[i];
    }
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
}

TEST(GnnBackward, ZeroUpstreamGivesZeroGradients) {
  SplitMix64 rng(7);
  const Graph g = testing::random_graph(6, 0.5, 3, 2, rng);
  const GnnForward f = gnn_forward(GnnParams::init(3, 4, 2, 2, true, 2), SampledGraph::full(g), g.features);
  const GnnGrads gr = gnn_backward(f.cache, Matrix(6, 2));
  for (const auto& w : gr.weights) EXPECT_EQ(max_abs(w), 0.0);
  for (const auto& b : gr.biases) EXPECT_EQ(max_abs(b), 0.0);
}

TEST(GnnBackward, MatchesFiniteDifferences) {
  // Loss sum(z . R) for a random R, so grad_z = R.
  SplitMix64 rng(8);
  for (int t = 0; t < 25; ++t) {
    const std::size_t n = 2 + rng.below(19), d = 1 + rng.below(8), k = 2 + rng.below(3);
    const std::size_t layers = 1 + rng.below(3);
    const Graph g = testing::random_graph(n, 0.3, d, k, rng);
    const SampledGraph sg = sample_neighbors(g, testing::random_matrix(n, 2, rng, 0.0, 1.0), 0.6);
    GnnParams p = GnnParams::init(d, 1 + rng.below(8), k, layers, t % 2 == 0, rng.next());
    for (auto& b : p.biases) b = testing::random_matrix(1, b.cols(), rng, -0.3, 0.3);
    const Matrix r = testing::random_matrix(n, k, rng);
    auto loss = [&](const GnnParams& q) {
      const Matrix z = gnn_forward(q, sg, g.features).z;
      double s = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) s += z.values()[i] * r.values()[i];
      return s;
    };
    const GnnGrads gr = gnn_backward(gnn_forward(p, sg, g.features).cache, r);
    for (std::size_t l = 0; l < layers; ++l) {
      const Matrix num = finite_diff_grad(
          [&](const Matrix& w) {
            GnnParams q = p;
            q.weights[l] = w;
            return loss(q);
          },
          p.weights[l]);
      EXPECT_LT(relative_error(gr.weights[l], num), 1e-5) << "layer " << l;
      if (p.has_bias()) {
        const Matrix numb = finite_diff_grad(
            [&](const Matrix& b) {
              GnnParams q = p;
              q.biases[l] = b;
              return loss(q);
            },
            p.biases[l]);
        EXPECT_LT(relative_error(gr.biases[l], numb), 1e-5) << "bias " << l;
      }
    }
  }
}

}  // namespace
}  // namespace csgnn
