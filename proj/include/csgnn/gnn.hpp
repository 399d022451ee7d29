#pragma once

#include <cstdint>
#include <vector>

#include "csgnn/matrix.hpp"
#include "csgnn/sampler.hpp"

namespace csgnn {

/// Weights of an L-layer mean-aggregation GNN. Layer l maps dims[l] ->
/// dims[l+1]; the last layer outputs K logits.
struct GnnParams {
  std::vector<Matrix> weights;  // dims[l] x dims[l+1]
  std::vector<Matrix> biases;   // 1 x dims[l+1] each, or empty when disabled

  /// Layers share one hidden width; a single layer maps in_dim -> num_classes.
  static GnnParams init(std::size_t in_dim, std::size_t hidden_dim, std::size_t num_classes,
                        std::size_t layers, bool use_bias, std::uint64_t seed);

  std::size_t num_layers() const { return weights.size(); }
  bool has_bias() const { return !biases.empty(); }
  /// Throws ShapeError if the dimension chain is broken.
  void validate() const;
};

struct GnnGrads {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;
};

/// Everything backward needs from a forward pass.
struct GnnCache {
  GnnParams params;
  SampledGraph graph;
  std::vector<Matrix> aggregated;  // per layer: mean over self and sampled neighbors
  std::vector<Matrix> pre;         // per layer: aggregated * W (+ b)
};

struct GnnForward {
  Matrix z;
  GnnCache cache;
};

/// Row v of the result is the mean of x[v] and x[u] for u in sg.neighbors(v).
Matrix mean_aggregate(const SampledGraph& sg, const Matrix& x);
/// Transpose of mean_aggregate: scatters each row back to itself and its
/// sampled neighbors with weight 1/(deg+1).
Matrix mean_aggregate_transpose(const SampledGraph& sg, const Matrix& grad);

/// h^(l) = ReLU(mean(...) W^(l)) for hidden layers; the last layer is linear.
GnnForward gnn_forward(const GnnParams& params, const SampledGraph& sg, const Matrix& x);

GnnGrads gnn_backward(const GnnCache& cache, const Matrix& grad_z);

}  // namespace csgnn
