#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace csgnn {

struct CostGradCheck {
  std::size_t instances = 0;
  double max_rel_error = 0.0;
};

/// Random logits, positive cost matrices and labels with K in {2, 3, 5} and
/// N <= 10: compares the analytic gradient of the cost-sensitive
/// cross-entropy wrt the logits (p - onehot) with central differences.
CostGradCheck check_cost_gradient(std::uint64_t seed, std::size_t instances = 120);

struct TensorGradError {
  std::string name;
  double rel_error = 0.0;
};

struct EndToEndGradCheck {
  std::vector<TensorGradError> tensors;
  double max_rel_error = 0.0;
};

/// Full combined loss on a random 10-node graph with a 2-layer GNN, biases
/// on, a non-uniform cost matrix and a sampled neighbor set; every
/// parameter tensor's gradient against central differences.
EndToEndGradCheck check_end_to_end_gradient(std::uint64_t seed);

}  // namespace csgnn
