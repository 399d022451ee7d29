#include "csgnn/gnn.hpp"

#include <string>

#include "csgnn/error.hpp"
#include "csgnn/random.hpp"

namespace csgnn {

namespace {
constexpr std::uint64_t kGnnStreamBase = 200;

void add_bias(Matrix& m, const Matrix& bias) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += bias(0, c);
  }
}
}  // namespace

GnnParams GnnParams::init(std::size_t in_dim, std::size_t hidden_dim, std::size_t num_classes,
                          std::size_t layers, bool use_bias, std::uint64_t seed) {
  if (layers == 0) throw ParameterError("GNN needs at least one layer");
  if (hidden_dim == 0 && layers > 1) throw ParameterError("hidden_dim must be positive");
  GnnParams p;
  std::size_t from = in_dim;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t to = l + 1 == layers ? num_classes : hidden_dim;
    p.weights.push_back(init_uniform(from, to, seed, kGnnStreamBase + l));
    if (use_bias) p.biases.emplace_back(1, to);
    from = to;
  }
  return p;
}

void GnnParams::validate() const {
  if (weights.empty()) throw ShapeError("GNN has no layers");
  for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
    if (weights[l].cols() != weights[l + 1].rows()) {
      throw ShapeError("GNN layer " + std::to_string(l) + " output " +
                       std::to_string(weights[l].cols()) + " != layer " + std::to_string(l + 1) +
                       " input " + std::to_string(weights[l + 1].rows()));
    }
  }
  if (!biases.empty()) {
    if (biases.size() != weights.size()) throw ShapeError("GNN bias count mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (biases[l].rows() != 1 || biases[l].cols() != weights[l].cols()) {
        throw ShapeError("GNN bias " + std::to_string(l) + " has wrong shape");
      }
    }
  }
}

Matrix mean_aggregate(const SampledGraph& sg, const Matrix& x) {
  if (x.rows() != sg.num_nodes) throw ShapeError("mean_aggregate: rows != num_nodes");
  Matrix out(x.rows(), x.cols());
  for (std::size_t v = 0; v < sg.num_nodes; ++v) {
    auto orow = out.row(v);
    auto self = x.row(v);
    std::copy(self.begin(), self.end(), orow.begin());
    const auto nb = sg.neighbors(static_cast<NodeId>(v));
    for (NodeId u : nb) {
      auto urow = x.row(static_cast<std::size_t>(u));
      for (std::size_t c = 0; c < x.cols(); ++c) orow[c] += urow[c];
    }
    const double inv = 1.0 / static_cast<double>(nb.size() + 1);
    for (double& val : orow) val *= inv;
  }
  return out;
}

Matrix mean_aggregate_transpose(const SampledGraph& sg, const Matrix& grad) {
  if (grad.rows() != sg.num_nodes) throw ShapeError("mean_aggregate_transpose: rows != num_nodes");
  Matrix out(grad.rows(), grad.cols());
  for (std::size_t v = 0; v < sg.num_nodes; ++v) {
    const auto nb = sg.neighbors(static_cast<NodeId>(v));
    const double inv = 1.0 / static_cast<double>(nb.size() + 1);
    auto g = grad.row(v);
    auto self = out.row(v);
    for (std::size_t c = 0; c < grad.cols(); ++c) self[c] += g[c] * inv;
    for (NodeId u : nb) {
      auto urow = out.row(static_cast<std::size_t>(u));
      for (std::size_t c = 0; c < grad.cols(); ++c) urow[c] += g[c] * inv;
    }
  }
  return out;
}

GnnForward gnn_forward(const GnnParams& params, const SampledGraph& sg, const Matrix& x) {
  params.validate();
  if (x.cols() != params.weights.front().rows()) {
    throw ShapeError("gnn_forward: input dim " + std::to_string(x.cols()) + " != layer 0 input " +
                     std::to_string(params.weights.front().rows()));
  }
  if (x.rows() != sg.num_nodes) throw ShapeError("gnn_forward: feature rows != num_nodes");
  GnnForward out;
  out.cache.params = params;
  out.cache.graph = sg;
  Matrix h = x;
  const std::size_t layers = params.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix agg = mean_aggregate(sg, h);
    Matrix pre = matmul(agg, params.weights[l]);
    if (params.has_bias()) add_bias(pre, params.biases[l]);
    h = l + 1 < layers ? relu(pre) : pre;
    out.cache.aggregated.push_back(std::move(agg));
    out.cache.pre.push_back(std::move(pre));
  }
  out.z = std::move(h);
  return out;
}

GnnGrads gnn_backward(const GnnCache& cache, const Matrix& grad_z) {
  const auto& params = cache.params;
  const std::size_t layers = params.num_layers();
  if (cache.aggregated.size() != layers || cache.pre.size() != layers) {
    throw ShapeError("gnn_backward: cache does not match parameters");
  }
  if (!grad_z.same_shape(cache.pre.back())) throw ShapeError("gnn_backward: grad_z shape mismatch");
  GnnGrads grads;
  grads.weights.resize(layers);
  if (params.has_bias()) grads.biases.resize(layers);
  Matrix g = grad_z;  // gradient wrt this layer's output
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) {
      const Matrix& pre = cache.pre[l];
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!(pre.values()[i] > 0.0)) g.values()[i] = 0.0;
    }
    grads.weights[l] = matmul_tn(cache.aggregated[l], g);
    if (params.has_bias()) {
      Matrix db(1, g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) db(0, c) += g(r, c);
      grads.biases[l] = std::move(db);
    }
    if (l > 0) g = mean_aggregate_transpose(cache.graph, matmul_nt(g, params.weights[l]));
  }
  return grads;
}

}  // namespace csgnn
