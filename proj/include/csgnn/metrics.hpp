#pragma once

#include <cstddef>
#include <vector>

#include "csgnn/graph.hpp"
#include "csgnn/matrix.hpp"

namespace csgnn {

struct MetricsReport {
  std::vector<double> per_class_recall;
  double macro_recall = 0.0;
  double macro_auc = 0.0;
  double g_mean = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][pred]
  std::vector<std::size_t> support;
};

/// Per-class recall, macro recall, K-th-root G-mean, and one-vs-rest macro
/// AUC from the rank statistic (tied scores count one half). Throws
/// ValidationError naming any class with zero support.
MetricsReport compute_metrics(const std::vector<Label>& y_true, const std::vector<Label>& y_pred,
                              const Matrix& y_score);

/// Binary ROC AUC of scores for the positive flags via average ranks.
double binary_auc(const std::vector<double>& scores, const std::vector<bool>& positive);

}  // namespace csgnn
