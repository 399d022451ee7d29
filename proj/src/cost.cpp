#include "csgnn/cost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "csgnn/error.hpp"

namespace csgnn {

namespace {

void check_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw ShapeError(std::string(what) + " must be square");
}

// log(C_k) + z_k for one row; -inf where the cost is zero.
void weighted_logits(std::span<const double> z, std::span<const double> cost_row,
                     std::span<double> out) {
  double row_sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    row_sum += cost_row[k];
    out[k] = cost_row[k] > 0.0 ? z[k] + std::log(cost_row[k]) : -INFINITY;
  }
  if (!(row_sum > 0.0)) throw NumericError("cost row sums to zero");
}

}  // namespace

CostMatrix CostMatrix::uniform(std::size_t k) {
  CostMatrix c;
  c.cost = Matrix(k, k, 1.0);
  c.target = Matrix(k, k);
  c.histogram = Matrix(k, k);
  c.scatter = Matrix(k, k);
  c.confusion = Matrix(k, k);
  return c;
}

CostMatrix init_cost(const ClassStats& stats, double beta, double lr) {
  const std::size_t k = stats.counts.size();
  for (std::size_t i = 0; i < k; ++i) {
    if (stats.counts[i] == 0) {
      throw ValidationError("init_cost: class " + std::to_string(i) + " has zero count");
    }
  }
  CostMatrix c = CostMatrix::uniform(k);
  c.beta = beta;
  c.lr = lr;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      c.cost(i, j) = std::log(static_cast<double>(stats.counts[j]) /
                                  static_cast<double>(stats.counts[i]) + 1.0);
    }
  }
  return c;
}

Matrix cost_softmax(const Matrix& z, const CostMatrix& c, const std::vector<Label>& labels,
                    CostMode mode) {
  if (mode == CostMode::kInfer) return softmax_rows(z);
  check_square(c.cost, "cost");
  if (z.cols() != c.num_classes()) throw ShapeError("cost_softmax: logits width != K");
  if (labels.size() != z.rows()) throw ShapeError("cost_softmax: train mode needs one label per row");
  Matrix out(z.rows(), z.cols());
  std::vector<double> a(z.cols());
  for (std::size_t v = 0; v < z.rows(); ++v) {
    weighted_logits(z.row(v), c.cost.row(static_cast<std::size_t>(labels[v])), a);
    softmax_row(a, out.row(v));
  }
  return out;
}

CostLoss cost_loss_and_grad(const Matrix& z, const CostMatrix& c, const std::vector<Label>& labels,
                            const NodeMask& mask) {
  check_square(c.cost, "cost");
  if (z.cols() != c.num_classes()) throw ShapeError("cost loss: logits width != K");
  if (labels.size() != z.rows() || mask.size() != z.rows()) {
    throw ShapeError("cost loss: labels/mask length != rows");
  }
  std::size_t count = 0;
  for (std::size_t v = 0; v < z.rows(); ++v) count += mask[v] ? 1 : 0;
  if (count == 0) throw ValidationError("cost loss: empty mask");
  const double inv = 1.0 / static_cast<double>(count);

  CostLoss out;
  out.grad_z = Matrix(z.rows(), z.cols());
  std::vector<double> a(z.cols());
  std::vector<double> p(z.cols());
  for (std::size_t v = 0; v < z.rows(); ++v) {
    if (!mask[v]) continue;
    const auto y = static_cast<std::size_t>(labels[v]);
    weighted_logits(z.row(v), c.cost.row(y), a);
    out.loss += (log_sum_exp(a) - a[y]) * inv;
    softmax_row(a, p);
    auto g = out.grad_z.row(v);
    for (std::size_t k = 0; k < z.cols(); ++k) g[k] = (p[k] - (k == y ? 1.0 : 0.0)) * inv;
  }
  return out;
}

Matrix scatter_ratio(const Matrix& z, const std::vector<Label>& labels, const NodeMask& mask,
                     std::size_t num_classes) {
  const std::size_t dim = z.cols();
  Matrix means(num_classes, dim);
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t v = 0; v < z.rows(); ++v) {
    if (!mask[v]) continue;
    const auto c = static_cast<std::size_t>(labels[v]);
    ++counts[c];
    auto row = z.row(v);
    for (std::size_t d = 0; d < dim; ++d) means(c, d) += row[d];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw ValidationError("class " + std::to_string(c) + " has no node in the selected set");
    }
    for (std::size_t d = 0; d < dim; ++d) means(c, d) /= static_cast<double>(counts[c]);
  }
  std::vector<double> within(num_classes, 0.0);
  for (std::size_t v = 0; v < z.rows(); ++v) {
    if (!mask[v]) continue;
    const auto c = static_cast<std::size_t>(labels[v]);
    auto row = z.row(v);
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = row[d] - means(c, d);
      within[c] += diff * diff;
    }
  }
  for (std::size_t c = 0; c < num_classes; ++c) within[c] /= static_cast<double>(counts[c]);

  Matrix between(num_classes, num_classes);
  for (std::size_t i = 0; i < num_classes; ++i) {
    for (std::size_t j = 0; j < num_classes; ++j) {
      double b = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = means(i, d) - means(j, d);
        b += diff * diff;
      }
      between(i, j) = b;
    }
  }
  Matrix s(num_classes, num_classes);
  for (std::size_t i = 0; i < num_classes; ++i) {
    double mean_b = 0.0;
    for (std::size_t j = 0; j < num_classes; ++j)
      if (j != i) mean_b += between(i, j);
    mean_b /= static_cast<double>(num_classes - 1);
    for (std::size_t j = 0; j < num_classes; ++j) {
      s(i, j) = i == j ? within[i] / (mean_b + kEps)
                       : (within[i] + within[j]) / (between(i, j) + kEps);
    }
  }
  return s;
}

CostTarget build_target(const Matrix& z, const std::vector<Label>& labels, const NodeMask& mask,
                        const ClassStats& stats, double beta) {
  const std::size_t k = stats.priors.size();
  if (z.cols() != k) throw ShapeError("build_target: logits width != K");
  CostTarget t;
  t.histogram = Matrix(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      t.histogram(i, j) = i == j ? stats.priors[i] : std::max(stats.priors[i], stats.priors[j]);

  t.scatter = scatter_ratio(z, labels, mask, k);

  t.confusion = Matrix(k, k);
  std::size_t count = 0;
  for (std::size_t v = 0; v < z.rows(); ++v) {
    if (!mask[v]) continue;
    auto row = z.row(v);
    // Lowest index wins ties, matching prediction.
    const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    t.confusion(static_cast<std::size_t>(labels[v]), pred) += 1.0;
    ++count;
  }
  t.confusion *= 1.0 / static_cast<double>(count);

  t.target = hadamard(hadamard(t.histogram, t.scatter), t.confusion) * beta;
  return t;
}

double cost_objective(const CostMatrix& c, double val_error) {
  return frobenius_sq(c.target - c.cost) + val_error;
}

CostMatrix update_cost(const CostMatrix& c, const Matrix& target) {
  if (!target.same_shape(c.cost)) throw ShapeError("update_cost: target shape != cost shape");
  if (!target.all_finite()) throw NumericError("update_cost: non-finite target");
  CostMatrix out = c;
  out.target = target;
  for (std::size_t i = 0; i < out.cost.size(); ++i) {
    const double cv = c.cost.values()[i];
    const double next = cv - c.lr * 2.0 * (cv - target.values()[i]);
    out.cost.values()[i] = std::max(0.0, next);
  }
  return out;
}

std::vector<double> risk_gradient(const Matrix& cost, const std::vector<double>& posteriors,
                                  const std::vector<double>& logits) {
  const std::size_t k = posteriors.size();
  std::vector<double> grad(k, 0.0);
  std::vector<double> a(k), q(k);
  for (std::size_t y = 0; y < k; ++y) {
    weighted_logits(logits, cost.row(y), a);
    softmax_row(a, q);
    for (std::size_t m = 0; m < k; ++m) grad[m] += posteriors[y] * q[m];
  }
  for (std::size_t m = 0; m < k; ++m) grad[m] -= posteriors[m];
  return grad;
}

CalibrationResult calibration_check(const Matrix& cost, const std::vector<double>& posteriors,
                                    double tol) {
  check_square(cost, "cost");
  const std::size_t k = posteriors.size();
  if (cost.rows() != k) throw ShapeError("calibration_check: posteriors length != K");
  double total = 0.0;
  for (double p : posteriors) {
    if (!(p > 0.0)) throw ParameterError("calibration_check: posteriors must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ParameterError("calibration_check: posteriors must sum to 1");
  for (double c : cost.values()) {
    if (!(c > 0.0)) throw ParameterError("calibration_check: costs must be positive");
  }

  auto rhs = [&](const std::vector<double>& z) {
    // log N_y(z) for every row y.
    std::vector<double> log_norm(k), a(k);
    for (std::size_t y = 0; y < k; ++y) {
      weighted_logits(z, cost.row(y), a);
      log_norm[y] = log_sum_exp(a);
    }
    std::vector<double> out(k);
    for (std::size_t m = 0; m < k; ++m) {
      double s = 0.0;
      for (std::size_t y = 0; y < k; ++y)
        s += posteriors[y] * cost(y, m) * std::exp(-log_norm[y]);
      out[m] = std::log(posteriors[m]) - std::log(s);
    }
    const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(k);
    for (double& x : out) x -= mean;
    return out;
  };

  CalibrationResult res;
  std::vector<double> z(k, 0.0);
  constexpr std::size_t kMaxIter = 100000;
  for (res.iterations = 1; res.iterations <= kMaxIter; ++res.iterations) {
    std::vector<double> next = rhs(z);
    double change = 0.0;
    for (std::size_t m = 0; m < k; ++m) change = std::max(change, std::abs(next[m] - z[m]));
    z = std::move(next);
    if (change < 1e-15) break;
  }
  const auto fixed = rhs(z);
  res.fixed_point_residual = 0.0;
  for (std::size_t m = 0; m < k; ++m)
    res.fixed_point_residual = std::max(res.fixed_point_residual, std::abs(fixed[m] - z[m]));
  const auto grad = risk_gradient(cost, posteriors, z);
  res.stationarity_residual = 0.0;
  for (double g : grad) res.stationarity_residual = std::max(res.stationarity_residual, std::abs(g));
  res.logits = std::move(z);
  if (!(res.stationarity_residual < tol)) {
    throw NumericError("calibration_check: residual " + std::to_string(res.stationarity_residual) +
                       " after " + std::to_string(res.iterations) + " iterations");
  }
  return res;
}

}  // namespace csgnn
