#include "csgnn/feature_transform.hpp"

#include <cmath>

#include "csgnn/error.hpp"
#include "csgnn/random.hpp"

namespace csgnn {

namespace {
constexpr std::uint64_t kTransformStream = 100;
}

TransformParams TransformParams::init(std::size_t in_dim, std::size_t num_classes, bool use_bias,
                                      std::uint64_t seed) {
  TransformParams p;
  p.weight = init_uniform(in_dim, num_classes, seed, kTransformStream);
  if (use_bias) p.bias = Matrix(1, num_classes);
  return p;
}

Matrix transform(const TransformParams& params, const Matrix& features) {
  if (features.cols() != params.weight.rows()) {
    throw ShapeError("transform: features have " + std::to_string(features.cols()) +
                     " columns, weight expects " + std::to_string(params.weight.rows()));
  }
  Matrix pre = matmul(features, params.weight);
  if (params.has_bias()) {
    for (std::size_t r = 0; r < pre.rows(); ++r)
      for (std::size_t c = 0; c < pre.cols(); ++c) pre(r, c) += params.bias(0, c);
  }
  return relu(pre);
}

Matrix similarity_basis(const Matrix& h, SimilarityBasis basis) {
  return basis == SimilarityBasis::kSoftmax ? softmax_rows(h) : h;
}

double basis_similarity(const Matrix& basis, NodeId u, NodeId v) {
  auto a = basis.row(static_cast<std::size_t>(u));
  auto b = basis.row(static_cast<std::size_t>(v));
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    d2 += d * d;
  }
  return 1.0 - std::sqrt(d2);
}

double pair_similarity(const Matrix& h, NodeId u, NodeId v, SimilarityBasis basis) {
  if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= h.rows() ||
      static_cast<std::size_t>(v) >= h.rows()) {
    throw ValidationError("pair_similarity: node id out of range");
  }
  Matrix rows(2, h.cols());
  auto ru = h.row(static_cast<std::size_t>(u));
  auto rv = h.row(static_cast<std::size_t>(v));
  std::copy(ru.begin(), ru.end(), rows.row(0).begin());
  std::copy(rv.begin(), rv.end(), rows.row(1).begin());
  return basis_similarity(similarity_basis(rows, basis), 0, 1);
}

TransformLoss transform_loss(const TransformParams& params, const Matrix& features,
                             const std::vector<Label>& labels, const NodeMask& mask) {
  const Matrix h = transform(params, features);
  const std::size_t n = h.rows();
  const std::size_t k = h.cols();
  std::size_t count = 0;
  for (std::size_t v = 0; v < n; ++v) count += mask[v] ? 1 : 0;
  if (count == 0) throw ValidationError("transform_loss: empty mask");
  const double inv = 1.0 / static_cast<double>(count);

  TransformLoss out;
  Matrix grad_h(n, k);
  std::vector<double> prob(k);
  for (std::size_t v = 0; v < n; ++v) {
    if (!mask[v]) continue;
    auto row = h.row(v);
    const auto y = static_cast<std::size_t>(labels[v]);
    out.loss += (log_sum_exp(row) - row[y]) * inv;
    softmax_row(row, prob);
    for (std::size_t c = 0; c < k; ++c) {
      // ReLU gate: no gradient where the unit is inactive.
      if (row[c] > 0.0) grad_h(v, c) = (prob[c] - (c == y ? 1.0 : 0.0)) * inv;
    }
  }
  out.grads.weight = matmul_tn(features, grad_h);
  if (params.has_bias()) {
    out.grads.bias = Matrix(1, k);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t c = 0; c < k; ++c) out.grads.bias(0, c) += grad_h(v, c);
  }
  return out;
}

}  // namespace csgnn
