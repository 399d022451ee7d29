#include "csgnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "csgnn/error.hpp"

namespace csgnn {

double binary_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  const std::size_t n = scores.size();
  if (positive.size() != n) throw ShapeError("binary_auc: length mismatch");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (positive[order[t]]) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("binary_auc: need both positives and negatives");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

MetricsReport compute_metrics(const std::vector<Label>& y_true, const std::vector<Label>& y_pred,
                              const Matrix& y_score) {
  const std::size_t n = y_true.size();
  if (y_pred.size() != n || y_score.rows() != n) throw ShapeError("compute_metrics: length mismatch");
  const std::size_t k = y_score.cols();
  if (k < 2) throw ShapeError("compute_metrics: need at least 2 score columns");

  MetricsReport r;
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  r.support.assign(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<std::size_t>(y_true[i]);
    const auto p = static_cast<std::size_t>(y_pred[i]);
    if (y_true[i] < 0 || t >= k || y_pred[i] < 0 || p >= k) {
      throw ValidationError("compute_metrics: label outside [0, " + std::to_string(k) + ")");
    }
    ++r.confusion[t][p];
    ++r.support[t];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (r.support[c] == 0) {
      throw ValidationError("compute_metrics: class " + std::to_string(c) + " has zero support");
    }
  }

  r.per_class_recall.resize(k);
  double log_sum = 0.0;
  bool any_zero = false;
  for (std::size_t c = 0; c < k; ++c) {
    r.per_class_recall[c] =
        static_cast<double>(r.confusion[c][c]) / static_cast<double>(r.support[c]);
    r.macro_recall += r.per_class_recall[c];
    if (r.per_class_recall[c] == 0.0) any_zero = true;
    else log_sum += std::log(r.per_class_recall[c]);
  }
  r.macro_recall /= static_cast<double>(k);
  r.g_mean = any_zero ? 0.0 : std::exp(log_sum / static_cast<double>(k));

  std::vector<double> scores(n);
  std::vector<bool> positive(n);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = y_score(i, c);
      positive[i] = static_cast<std::size_t>(y_true[i]) == c;
    }
    r.macro_auc += binary_auc(scores, positive);
  }
  r.macro_auc /= static_cast<double>(k);
  return r;
}

}  // namespace csgnn
