#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "csgnn/cost.hpp"
#include "csgnn/error.hpp"
#include "csgnn/random.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace csgnn {
namespace {

ClassStats stats_from_counts(std::vector<std::size_t> counts) {
  ClassStats s;
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  for (std::size_t c : counts) s.priors.push_back(static_cast<double>(c) / total);
  s.counts = std::move(counts);
  return s;
}

CostMatrix with_cost(Matrix c) {
  CostMatrix m = CostMatrix::uniform(c.rows());
  m.cost = std::move(c);
  return m;
}

TEST(InitCost, TwoClassFraudToBenign) {
  // Class 0 benign (4144), class 1 fraud (1962).
  const CostMatrix c = init_cost(stats_from_counts({4144, 1962}));
  EXPECT_NEAR(c.cost(1, 0), std::log(4144.0 / 1962.0 + 1.0), 1e-12);
  EXPECT_NEAR(c.cost(1, 0), 1.1353075331695148, 1e-12);
  EXPECT_NEAR(c.cost(0, 0), std::log(2.0), 1e-12);
}

TEST(InitCost, ThreeClassFraudsterToNormal) {
  const CostMatrix c = init_cost(stats_from_counts({99861, 8448, 8074}));
  EXPECT_NEAR(c.cost(1, 0), std::log(99861.0 / 8448.0 + 1.0), 1e-12);
  // Exact value is 2.55106..., so a 4-digit rounding lands within 5e-4.
  EXPECT_NEAR(c.cost(1, 0), 2.5513, 5e-4);
}

TEST(InitCost, BalancedGivesLogTwoEverywhere) {
  const CostMatrix c = init_cost(stats_from_counts({50, 50, 50}));
  for (double v : c.cost.values()) EXPECT_NEAR(v, std::log(2.0), 1e-12);
}

TEST(InitCost, ZeroCountNamesClass) {
  try {
    init_cost(stats_from_counts({10, 0}));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("class 1"), std::string::npos);
  }
}

TEST(CostSoftmax, HandExample) {
  const Matrix p = cost_softmax(Matrix(1, 2), with_cost(Matrix::from_rows({{1, 3}, {1, 1}})), {0},
                                CostMode::kTrain);
  EXPECT_NEAR(p(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.75, 1e-15);
}

TEST(CostSoftmax, UniformCostEqualsSoftmax) {
  SplitMix64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 2 + rng.below(5), n = 1 + rng.below(20);
    const Matrix z = testing::random_matrix(n, k, rng, -30.0, 30.0);
    std::vector<Label> y(n);
    for (auto& l : y) l = static_cast<Label>(rng.below(k));
    CostMatrix c = with_cost(Matrix(k, k, rng.uniform(0.1, 5.0)));
    EXPECT_LT(max_abs(cost_softmax(z, c, y, CostMode::kTrain) - softmax_rows(z)), 1e-12);
  }
}

TEST(CostSoftmax, RowScalingInvariant) {
  SplitMix64 rng(2);
  const Matrix z = testing::random_matrix(5, 3, rng);
  const std::vector<Label> y{0, 1, 2, 0, 1};
  const Matrix cost = testing::random_matrix(3, 3, rng, 0.1, 3.0);
  Matrix scaled = cost;
  for (std::size_t c = 0; c < 3; ++c) scaled(1, c) *= 7.5;
  EXPECT_LT(max_abs(cost_softmax(z, with_cost(cost), y, CostMode::kTrain) -
                    cost_softmax(z, with_cost(scaled), y, CostMode::kTrain)),
            1e-14);
}

TEST(CostSoftmax, InferModeIgnoresCost) {
  SplitMix64 rng(3);
  const Matrix z = testing::random_matrix(4, 2, rng);
  EXPECT_EQ(cost_softmax(z, with_cost(Matrix::from_rows({{1, 9}, {9, 1}})), {}, CostMode::kInfer),
            softmax_rows(z));
}

TEST(CostLoss, UniformLogitsBalancedCostGiveLogTwo) {
  const CostLoss r = cost_loss_and_grad(Matrix(3, 2), CostMatrix::uniform(2), {0, 1, 1}, NodeMask(3, true));
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
}

TEST(CostLoss, MatchesDirectFormulaAndFiniteDifferences) {
  SplitMix64 rng(4);
  const std::size_t ks[] = {2, 3, 5};
  for (int t = 0; t < 120; ++t) {
    const std::size_t k = ks[t % 3], n = 1 + rng.below(10);
    const Matrix z = testing::random_matrix(n, k, rng, -3.0, 3.0);
    std::vector<Label> y(n);
    for (auto& l : y) l = static_cast<Label>(rng.below(k));
    const Matrix cost = testing::random_matrix(k, k, rng, 0.1, 3.0);
    const NodeMask mask(n, true);
    const CostLoss r = cost_loss_and_grad(z, with_cost(cost), y, mask);
    EXPECT_NEAR(r.loss, oracle::cost_loss(z, cost, y, mask), 1e-12);
    const Matrix num = finite_diff_grad([&](const Matrix& m) { return oracle::cost_loss(m, cost, y, mask); }, z);
    EXPECT_LT(relative_error(r.grad_z, num), 1e-5);
  }
}

TEST(CostLoss, UnmaskedRowsHaveZeroGradient) {
  SplitMix64 rng(5);
  const Matrix z = testing::random_matrix(4, 2, rng);
  const CostLoss r = cost_loss_and_grad(z, CostMatrix::uniform(2), {0, 1, 0, 1}, {true, false, true, false});
  EXPECT_EQ(r.grad_z(1, 0), 0.0);
  EXPECT_EQ(r.grad_z(3, 1), 0.0);
}

TEST(CostLoss, EmptyMaskThrows) {
  EXPECT_THROW(cost_loss_and_grad(Matrix(2, 2), CostMatrix::uniform(2), {0, 1}, NodeMask(2, false)),
               ValidationError);
}

TEST(BuildTarget, HistogramFromPriors) {
  const ClassStats s = stats_from_counts({4144, 1962});
  const Matrix z = Matrix::from_rows({{1, 0}, {0.5, 0.2}, {0, 1}, {0.1, 0.7}});
  const CostTarget t = build_target(z, {0, 0, 1, 1}, NodeMask(4, true), s, 1.0);
  EXPECT_NEAR(t.histogram(0, 0), 4144.0 / 6106.0, 1e-12);
  EXPECT_NEAR(t.histogram(0, 1), 4144.0 / 6106.0, 1e-12);
  EXPECT_NEAR(t.histogram(1, 0), 4144.0 / 6106.0, 1e-12);
  EXPECT_NEAR(t.histogram(1, 1), 1962.0 / 6106.0, 1e-12);
  EXPECT_NEAR(t.histogram(0, 0), 0.6787, 1e-4);
}

TEST(BuildTarget, PerfectPredictionsBalancedConfusion) {
  const Matrix z = Matrix::from_rows({{1, 0}, {2, 0}, {0, 1}, {0, 3}});
  const CostTarget t = build_target(z, {0, 0, 1, 1}, NodeMask(4, true), stats_from_counts({2, 2}), 1.0);
  EXPECT_EQ(t.confusion, Matrix::from_rows({{0.5, 0}, {0, 0.5}}));
}

TEST(BuildTarget, ZeroWithinClassVarianceZerosOffDiagonal) {
  // Class 1 sits at one point that argmax assigns to class 0, so R has an
  // off-diagonal entry while both within-class spreads are zero.
  const Matrix z = Matrix::from_rows({{1, 0}, {1, 0}, {0.6, 0.4}, {0.6, 0.4}});
  const CostTarget t = build_target(z, {0, 0, 1, 1}, NodeMask(4, true), stats_from_counts({2, 2}), 1.0);
  EXPECT_GT(t.confusion(1, 0), 0.0);
  EXPECT_EQ(t.scatter(0, 1), 0.0);
  EXPECT_EQ(t.target(0, 1), 0.0);
  EXPECT_EQ(t.target(1, 0), 0.0);
}

TEST(BuildTarget, ConfusionSumsToOneAndTargetIsHadamardProduct) {
  SplitMix64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 2 + rng.below(3), n = 3 * k + rng.below(20);
    const Matrix z = testing::random_matrix(n, k, rng);
    std::vector<Label> y(n);
    for (std::size_t v = 0; v < n; ++v) y[v] = static_cast<Label>(v % k);
    NodeMask mask(n, true);
    std::vector<std::size_t> counts(k);
    for (auto l : y) ++counts[static_cast<std::size_t>(l)];
    const double beta = rng.uniform(0.5, 2.0);
    const CostTarget ct = build_target(z, y, mask, stats_from_counts(counts), beta);
    double sum = 0.0;
    for (double v : ct.confusion.values()) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        EXPECT_NEAR(ct.target(i, j), beta * ct.histogram(i, j) * ct.scatter(i, j) * ct.confusion(i, j), 1e-12);
  }
}

TEST(BuildTarget, AbsentClassThrows) {
  EXPECT_THROW(build_target(Matrix(3, 2), {0, 0, 1}, {true, true, false}, stats_from_counts({2, 1}), 1.0),
               ValidationError);
}

TEST(ScatterRatio, HandTwoClassExample) {
  // Class 0 at (0,0),(2,0): mean (1,0), w0 = 1. Class 1 at (1,3): w1 = 0. b01 = 9.
  const Matrix z = Matrix::from_rows({{0, 0}, {2, 0}, {1, 3}});
  const Matrix s = scatter_ratio(z, {0, 0, 1}, NodeMask(3, true), 2);
  EXPECT_NEAR(s(0, 1), 1.0 / 9.0, 1e-12);
  EXPECT_NEAR(s(0, 0), 1.0 / 9.0, 1e-12);
  EXPECT_NEAR(s(1, 1), 0.0, 1e-12);
}

TEST(UpdateCost, FixedPointIsNoOp) {
  CostMatrix c = with_cost(Matrix::from_rows({{1, 2}, {3, 4}}));
  c.lr = 0.3;
  EXPECT_EQ(update_cost(c, c.cost).cost, c.cost);
}

TEST(UpdateCost, QuarterStepHalvesOffset) {
  const Matrix t = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix delta = Matrix::from_rows({{0.4, -0.2}, {0.8, 1.0}});
  CostMatrix c = with_cost(t + delta);
  c.lr = 0.25;
  EXPECT_LT(max_abs(update_cost(c, t).cost - (t + delta * 0.5)), 1e-15);
}

TEST(UpdateCost, ContractsByOneMinusTwoLr) {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix t = testing::random_matrix(3, 3, rng, 5.0, 6.0);
    CostMatrix c = with_cost(testing::random_matrix(3, 3, rng, 1.0, 10.0));
    c.lr = rng.uniform(0.01, 0.4);
    for (int step = 0; step < 10; ++step) {
      const double before = std::sqrt(frobenius_sq(c.cost - t));
      c = update_cost(c, t);
      const double after = std::sqrt(frobenius_sq(c.cost - t));
      EXPECT_NEAR(after, std::abs(1.0 - 2.0 * c.lr) * before, 1e-12);
    }
  }
}

TEST(UpdateCost, ClampsAtZero) {
  CostMatrix c = with_cost(Matrix(2, 2, 0.1));
  c.lr = 0.4;
  const CostMatrix out = update_cost(c, Matrix(2, 2, -5.0));
  for (double v : out.cost.values()) EXPECT_EQ(v, 0.0);
}

TEST(UpdateCost, NonFiniteTargetThrows) {
  EXPECT_THROW(update_cost(CostMatrix::uniform(2), Matrix(2, 2, NAN)), NumericError);
}

TEST(CostObjective, FrobeniusPlusValidationError) {
  CostMatrix c = with_cost(Matrix::from_rows({{1, 0}, {0, 1}}));
  c.target = Matrix::from_rows({{0, 0}, {0, 3}});
  EXPECT_DOUBLE_EQ(cost_objective(c, 0.25), 1.0 + 4.0 + 0.25);
}

std::vector<double> random_posteriors(std::size_t k, SplitMix64& rng) {
  std::vector<double> p(k);
  for (double& v : p) v = rng.uniform(0.05, 1.0);
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= s;
  return p;
}

TEST(Calibration, UniformCostSymmetricPosteriorsGiveEqualLogits) {
  const CalibrationResult r = calibration_check(Matrix(2, 2, 1.0), {0.5, 0.5});
  EXPECT_NEAR(r.logits[0], r.logits[1], 1e-12);
}

TEST(Calibration, RiskGradientMatchesFiniteDifferences) {
  SplitMix64 rng(8);
  for (int t = 0; t < 30; ++t) {
    const std::size_t k = 2 + rng.below(4);
    const Matrix cost = testing::random_matrix(k, k, rng, 0.1, 3.0);
    const auto pi = random_posteriors(k, rng);
    const Matrix z = testing::random_matrix(1, k, rng);
    const auto g = risk_gradient(cost, pi, z.values());
    const Matrix num = finite_diff_grad([&](const Matrix& m) { return oracle::expected_risk(cost, pi, m); }, z);
    EXPECT_LT(relative_error(Matrix(1, k, g), num), 1e-6);
  }
}

TEST(Calibration, StationaryOnRandomInstances) {
  SplitMix64 rng(9);
  for (int t = 0; t < 60; ++t) {
    const std::size_t k = 2 + rng.below(4);
    const Matrix cost = testing::random_matrix(k, k, rng, 0.1, 3.0);
    const auto pi = random_posteriors(k, rng);
    const CalibrationResult r = calibration_check(cost, pi);
    EXPECT_LT(r.stationarity_residual, 1e-8);
    // Independent check of the gradient at the returned point.
    const Matrix z(1, k, r.logits);
    const Matrix num = finite_diff_grad([&](const Matrix& m) { return oracle::expected_risk(cost, pi, m); }, z);
    EXPECT_LT(max_abs(num), 1e-7);
  }
}

TEST(Calibration, RaisingOwnClassCostLowersItsLogit) {
  SplitMix64 rng(10);
  for (int t = 0; t < 20; ++t) {
    const std::size_t k = 2 + rng.below(3);
    Matrix cost = testing::random_matrix(k, k, rng, 0.5, 2.0);
    const auto pi = random_posteriors(k, rng);
    const std::size_t m = rng.below(k);
    const auto before = calibration_check(cost, pi).logits;
    cost(m, m) *= 1.5;
    const auto after = calibration_check(cost, pi).logits;
    // Compare against the other logits so the gauge does not matter.
    for (std::size_t j = 0; j < k; ++j) {
      if (j == m) continue;
      EXPECT_LT(after[m] - after[j], before[m] - before[j]);
    }
  }
}

TEST(Calibration, RejectsInvalidPosteriors) {
  EXPECT_THROW(calibration_check(Matrix(2, 2, 1.0), {0.7, 0.7}), ParameterError);
  EXPECT_THROW(calibration_check(Matrix(2, 2, 1.0), {1.0, 0.0}), ParameterError);
}

}  // namespace
}  // namespace csgnn
