#pragma once

#include <vector>

#include "csgnn/graph.hpp"
#include "csgnn/matrix.hpp"

namespace csgnn {

/// K x K misclassification cost matrix and the pieces of its learning target.
/// cost(i, j) weighs class j in the output distribution of a class-i node.
struct CostMatrix {
  Matrix cost;
  Matrix target;     // T = beta * H . S . R
  Matrix histogram;  // H
  Matrix scatter;    // S
  Matrix confusion;  // R
  double beta = 1.0;
  double lr = 0.01;

  std::size_t num_classes() const { return cost.rows(); }
  /// All-ones cost; the cost-sensitive softmax reduces to a plain softmax.
  static CostMatrix uniform(std::size_t k);
};

/// C_ij = ln(count_j / count_i + 1), diagonal included.
CostMatrix init_cost(const ClassStats& stats, double beta = 1.0, double lr = 0.01);

enum class CostMode { kTrain, kInfer };

/// p_k(v) = C[y_v, k] exp(z_v[k]) / sum_k' C[y_v, k'] exp(z_v[k']) in train
/// mode; infer mode uses no cost row and is a plain softmax.
Matrix cost_softmax(const Matrix& z, const CostMatrix& c, const std::vector<Label>& labels,
                    CostMode mode);

struct CostLoss {
  double loss = 0.0;
  Matrix grad_z;  // (p_v - onehot(y_v)) / |mask| on masked rows, 0 elsewhere
};

/// Mean cost-sensitive cross-entropy over the masked nodes.
CostLoss cost_loss_and_grad(const Matrix& z, const CostMatrix& c, const std::vector<Label>& labels,
                            const NodeMask& mask);

struct CostTarget {
  Matrix target;
  Matrix histogram;
  Matrix scatter;
  Matrix confusion;
};

/// Class-pair scatter ratio on the masked embeddings:
///   w_i = mean squared distance of class i to its mean,
///   b_ij = ||m_i - m_j||^2,
///   S(i,j) = (w_i + w_j) / (b_ij + eps), S(i,i) = w_i / (mean_{j!=i} b_ij + eps).
Matrix scatter_ratio(const Matrix& z, const std::vector<Label>& labels, const NodeMask& mask,
                     std::size_t num_classes);

/// H from class priors, S from the embedding scatter, R as the confusion of
/// argmax z against the labels normalized by |mask|; T = beta * H . S . R.
CostTarget build_target(const Matrix& z, const std::vector<Label>& labels, const NodeMask& mask,
                        const ClassStats& stats, double beta);

/// ||T - C||_F^2 + validation error (the latter is only monitored).
double cost_objective(const CostMatrix& c, double val_error);

/// One gradient step C <- max(0, C - lr * 2 (C - T)).
CostMatrix update_cost(const CostMatrix& c, const Matrix& target);

struct CalibrationResult {
  std::vector<double> logits;     // optimal logits, mean-zero gauge
  double stationarity_residual;   // max |dR/dz_m| at the logits
  double fixed_point_residual;    // max |z_m - rhs_m| of the closed form
  std::size_t iterations;
};

/// Optimal logits for a node with the given class posteriors under cost
/// matrix C. Iterates the stationary-point relation
///   z_m = log pi_m - log sum_y pi_y C_ym / N_y(z),  N_y = sum_k C_yk exp(z_k)
/// and reports the gradient of the expected risk there. Throws NumericError
/// if the residual is not below tol.
CalibrationResult calibration_check(const Matrix& cost, const std::vector<double>& posteriors,
                                    double tol = 1e-8);

/// Gradient of the expected cost-sensitive risk wrt the logits.
std::vector<double> risk_gradient(const Matrix& cost, const std::vector<double>& posteriors,
                                  const std::vector<double>& logits);

}  // namespace csgnn
