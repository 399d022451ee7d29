#pragma once

#include <cstdint>
#include <vector>

#include "csgnn/graph.hpp"
#include "csgnn/matrix.hpp"

namespace csgnn {

/// Single fully connected layer d -> K used to score node similarity.
struct TransformParams {
  Matrix weight;  // d x K
  Matrix bias;    // 1 x K, empty when bias is disabled

  static TransformParams init(std::size_t in_dim, std::size_t num_classes, bool use_bias,
                              std::uint64_t seed);
  bool has_bias() const { return !bias.empty(); }
};

struct TransformGrads {
  Matrix weight;
  Matrix bias;
};

enum class SimilarityBasis {
  kSoftmax,  // distance between row-softmax of the embeddings
  kRaw,      // distance between the ReLU outputs themselves
};

/// h = ReLU(X W [+ b]).
Matrix transform(const TransformParams& params, const Matrix& features);

/// Rows the similarity distance is measured on.
Matrix similarity_basis(const Matrix& h, SimilarityBasis basis = SimilarityBasis::kSoftmax);

/// 1 - ||b_u - b_v||_2 over rows of a precomputed similarity basis.
double basis_similarity(const Matrix& basis, NodeId u, NodeId v);

/// S(u, v) = 1 - ||p_u - p_v||_2 with p the row-softmax of h (or raw h).
double pair_similarity(const Matrix& h, NodeId u, NodeId v,
                       SimilarityBasis basis = SimilarityBasis::kSoftmax);

struct TransformLoss {
  double loss = 0.0;
  TransformGrads grads;
};

/// Mean softmax cross-entropy of h against the labels over the masked nodes,
/// with gradients taken back through the ReLU and the linear map.
TransformLoss transform_loss(const TransformParams& params, const Matrix& features,
                             const std::vector<Label>& labels, const NodeMask& mask);

}  // namespace csgnn
