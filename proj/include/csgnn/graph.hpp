#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "csgnn/matrix.hpp"

namespace csgnn {

using NodeId = std::int32_t;
using Label = std::int32_t;
/// Boolean node subset, one entry per node.
using NodeMask = std::vector<bool>;

/// Immutable node-attributed graph. Undirected edges are stored in both
/// directions in CSR form; neighbor lists are strictly increasing and carry
/// no self loops.
struct Graph {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<NodeId> col_indices;
  Matrix features;
  std::vector<Label> labels;
  std::size_t num_classes = 0;
  NodeMask train_mask;
  NodeMask val_mask;
  NodeMask test_mask;
  /// Ids from the input files, indexed by internal node id; empty when the
  /// graph was built in memory (ids are then the internal ones).
  std::vector<long long> external_ids;

  /// Builds from an arbitrary edge list: drops self loops and duplicates and
  /// symmetrizes. Masks start empty (all false). Throws ValidationError.
  static Graph from_edges(std::size_t num_nodes,
                          const std::vector<std::pair<NodeId, NodeId>>& edges,
                          Matrix features, std::vector<Label> labels,
                          std::size_t num_classes);

  std::size_t degree(NodeId v) const { return row_offsets[v + 1] - row_offsets[v]; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {col_indices.data() + row_offsets[v], degree(v)};
  }
  /// Number of undirected edges.
  std::size_t num_edges() const { return col_indices.size() / 2; }
  std::size_t feature_dim() const { return features.cols(); }
  long long external_id(NodeId v) const {
    return external_ids.empty() ? v : external_ids[static_cast<std::size_t>(v)];
  }

  /// Throws ValidationError describing the first violated invariant.
  void validate() const;
  bool is_symmetric() const;
};

struct ClassStats {
  std::vector<std::size_t> counts;
  std::vector<double> priors;
  double imbalance_ratio = 0.0;
};

/// Reads edges.csv / features.csv / labels.csv. Node ids are taken from the
/// feature file; non-contiguous ids are remapped in sorted order. When
/// num_classes is 0 it is inferred as max label + 1.
Graph load_graph(const std::filesystem::path& edge_path,
                 const std::filesystem::path& feature_path,
                 const std::filesystem::path& label_path, std::size_t num_classes = 0);

/// Writes the three files in the format load_graph reads.
void save_graph(const Graph& g, const std::filesystem::path& edge_path,
                const std::filesystem::path& feature_path,
                const std::filesystem::path& label_path);

/// Class counts over the masked nodes. Throws ValidationError naming the
/// first class with no masked node.
ClassStats class_stats(const Graph& g, const NodeMask& mask);
ClassStats class_stats(const Graph& g);

struct SyntheticSpec {
  std::size_t n = 2000;
  std::size_t k = 2;
  double ir = 0.1;
  double homophily = 0.8;
  std::size_t feature_dim = 16;
  double class_separation = 1.0;
  double mean_degree = 20.0;
  std::uint64_t seed = 0;
};

/// Class sizes for a k-class geometric ladder from 1 down to ir; class 0 is
/// the majority and class k-1 the smallest.
std::vector<std::size_t> synthetic_class_sizes(std::size_t n, std::size_t k, double ir);

/// Planted-partition graph with Gaussian class-conditional features.
/// Intra-class edge rate homophily*base, inter-class (1-homophily)*base,
/// base chosen for the requested mean degree. Class means sit on scaled
/// basis vectors so every pair is class_separation apart.
Graph generate_synthetic(const SyntheticSpec& spec);

/// Stratified split: per class floor(frac*count) nodes to train and val,
/// remainder to test. Throws ValidationError when a class would be missing
/// from a split (an empty test split is allowed only with allow_empty_test).
Graph split_masks(const Graph& g, double train_frac, double val_frac, std::uint64_t seed,
                  bool allow_empty_test = false);

NodeMask full_mask(std::size_t n);
std::vector<NodeId> mask_indices(const NodeMask& mask);
std::size_t mask_count(const NodeMask& mask);

}  // namespace csgnn
