#include "csgnn/graph.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "csgnn/error.hpp"
#include "csgnn/random.hpp"

namespace csgnn {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_sep(line[j])) ++j;
    out.push_back(line.substr(i, j - i));
    // Consume trailing blanks and at most one comma.
    while (j < line.size() && (line[j] == ' ' || line[j] == '\t' || line[j] == '\r')) ++j;
    if (j < line.size() && line[j] == ',') ++j;
    i = j;
  }
  return out;
}

std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_real(std::string_view s) {
  // std::from_chars for double is not available everywhere; strtod on a copy.
  std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || errno == ERANGE || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

struct CsvRow {
  std::size_t line_no;
  std::vector<std::string_view> fields;
};

// Reads all non-empty rows. A first row whose first field is not an integer
// is treated as a header and skipped.
class CsvFile {
 public:
  explicit CsvFile(const std::filesystem::path& path) : name_(path.string()) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + name_);
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
      ++line_no;
      lines_.push_back(std::move(line));
      std::string_view view = lines_.back();
      auto fields = split_fields(view);
      if (fields.empty()) continue;
      if (first) {
        first = false;
        if (!parse_int(fields[0])) continue;
      }
      numbers_.push_back(line_no);
    }
    // Split again now that lines_ storage is stable.
    for (std::size_t ln : numbers_) rows_.push_back({ln, split_fields(lines_[ln - 1])});
  }

  const std::vector<CsvRow>& rows() const { return rows_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::vector<std::string> lines_;
  std::vector<std::size_t> numbers_;
  std::vector<CsvRow> rows_;
};

void check_graph_sizes(const Graph& g) {
  if (g.features.rows() != g.num_nodes) {
    throw ValidationError("feature rows " + std::to_string(g.features.rows()) +
                          " != num_nodes " + std::to_string(g.num_nodes));
  }
  if (g.labels.size() != g.num_nodes) throw ValidationError("label count != num_nodes");
  if (g.row_offsets.size() != g.num_nodes + 1) throw ValidationError("row_offsets size mismatch");
}

}  // namespace

NodeMask full_mask(std::size_t n) { return NodeMask(n, true); }

std::vector<NodeId> mask_indices(const NodeMask& mask) {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(static_cast<NodeId>(i));
  return out;
}

std::size_t mask_count(const NodeMask& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

Graph Graph::from_edges(std::size_t num_nodes, const std::vector<std::pair<NodeId, NodeId>>& edges,
                        Matrix features, std::vector<Label> labels, std::size_t num_classes) {
  Graph g;
  g.num_nodes = num_nodes;
  g.features = std::move(features);
  g.labels = std::move(labels);
  g.num_classes = num_classes;
  g.train_mask.assign(num_nodes, false);
  g.val_mask.assign(num_nodes, false);
  g.test_mask.assign(num_nodes, false);

  std::vector<std::vector<NodeId>> adj(num_nodes);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= num_nodes ||
        static_cast<std::size_t>(v) >= num_nodes) {
      throw ValidationError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") references a node outside [0, " + std::to_string(num_nodes) + ")");
    }
    if (u == v) continue;
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  g.row_offsets.assign(num_nodes + 1, 0);
  g.col_indices.clear();
  for (std::size_t v = 0; v < num_nodes; ++v) {
    auto& nb = adj[v];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    g.col_indices.insert(g.col_indices.end(), nb.begin(), nb.end());
    g.row_offsets[v + 1] = g.col_indices.size();
  }
  g.validate();
  return g;
}

bool Graph::is_symmetric() const {
  for (std::size_t v = 0; v < num_nodes; ++v) {
    for (NodeId u : neighbors(static_cast<NodeId>(v))) {
      auto nb = neighbors(u);
      if (!std::binary_search(nb.begin(), nb.end(), static_cast<NodeId>(v))) return false;
    }
  }
  return true;
}

void Graph::validate() const {
  check_graph_sizes(*this);
  if (num_classes < 2) throw ValidationError("need at least 2 classes");
  for (std::size_t v = 0; v < num_nodes; ++v) {
    if (labels[v] < 0 || static_cast<std::size_t>(labels[v]) >= num_classes) {
      throw ValidationError("node " + std::to_string(v) + " has label " +
                            std::to_string(labels[v]) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
    auto nb = neighbors(static_cast<NodeId>(v));
    for (std::size_t i = 0; i < nb.size(); ++i) {
      if (nb[i] < 0 || static_cast<std::size_t>(nb[i]) >= num_nodes) {
        throw ValidationError("neighbor id out of range at node " + std::to_string(v));
      }
      if (static_cast<std::size_t>(nb[i]) == v) {
        throw ValidationError("self loop at node " + std::to_string(v));
      }
      if (i > 0 && nb[i] <= nb[i - 1]) {
        throw ValidationError("neighbor list of node " + std::to_string(v) +
                              " not strictly increasing");
      }
    }
  }
  if (!is_symmetric()) throw ValidationError("adjacency is not symmetric");
  if (!features.all_finite()) throw ValidationError("non-finite feature value");
  for (const NodeMask* m : {&train_mask, &val_mask, &test_mask}) {
    if (m->size() != num_nodes) throw ValidationError("mask length != num_nodes");
  }
  for (std::size_t v = 0; v < num_nodes; ++v) {
    if (int(train_mask[v]) + int(val_mask[v]) + int(test_mask[v]) > 1) {
      throw ValidationError("masks overlap at node " + std::to_string(v));
    }
  }
}

Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                 const std::filesystem::path& label_path, std::size_t num_classes) {
  CsvFile feat(feature_path);
  std::vector<long long> ids;
  std::vector<std::vector<double>> rows;
  std::size_t dim = 0;
  for (const auto& row : feat.rows()) {
    auto id = parse_int(row.fields[0]);
    if (!id) throw ParseError(feat.name(), row.line_no, "bad node id '" + std::string(row.fields[0]) + "'");
    if (row.fields.size() < 2) throw ParseError(feat.name(), row.line_no, "no feature values");
    if (dim == 0) dim = row.fields.size() - 1;
    if (row.fields.size() - 1 != dim) {
      throw ParseError(feat.name(), row.line_no,
                       "expected " + std::to_string(dim) + " features, got " +
                           std::to_string(row.fields.size() - 1));
    }
    std::vector<double> values(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      auto x = parse_real(row.fields[j + 1]);
      if (!x) throw ParseError(feat.name(), row.line_no, "bad feature value '" + std::string(row.fields[j + 1]) + "'");
      values[j] = *x;
    }
    ids.push_back(*id);
    rows.push_back(std::move(values));
  }

  // Map external ids to contiguous indices in sorted id order.
  std::vector<long long> sorted_ids = ids;
  std::sort(sorted_ids.begin(), sorted_ids.end());
  if (std::adjacent_find(sorted_ids.begin(), sorted_ids.end()) != sorted_ids.end()) {
    throw ValidationError(feat.name() + ": duplicate node id");
  }
  std::unordered_map<long long, NodeId> index;
  index.reserve(sorted_ids.size());
  for (std::size_t i = 0; i < sorted_ids.size(); ++i) index[sorted_ids[i]] = static_cast<NodeId>(i);
  const std::size_t n = sorted_ids.size();

  Matrix features(n, dim);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    auto dst = features.row(static_cast<std::size_t>(index[ids[r]]));
    std::copy(rows[r].begin(), rows[r].end(), dst.begin());
  }

  CsvFile lab(label_path);
  std::vector<Label> labels(n, -1);
  Label max_label = -1;
  for (const auto& row : lab.rows()) {
    if (row.fields.size() < 2) throw ParseError(lab.name(), row.line_no, "expected node_id,label");
    auto id = parse_int(row.fields[0]);
    auto y = parse_int(row.fields[1]);
    if (!id || !y) throw ParseError(lab.name(), row.line_no, "non-integer field");
    auto it = index.find(*id);
    if (it == index.end()) {
      throw ValidationError(lab.name() + ":" + std::to_string(row.line_no) + ": node " +
                            std::to_string(*id) + " has no feature row");
    }
    if (*y < 0) {
      throw ValidationError(lab.name() + ":" + std::to_string(row.line_no) + ": negative label");
    }
    if (num_classes > 0 && static_cast<std::size_t>(*y) >= num_classes) {
      throw ValidationError(lab.name() + ":" + std::to_string(row.line_no) + ": label " +
                            std::to_string(*y) + " >= K=" + std::to_string(num_classes));
    }
    labels[it->second] = static_cast<Label>(*y);
    max_label = std::max(max_label, static_cast<Label>(*y));
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (labels[v] < 0) {
      throw ValidationError("node " + std::to_string(sorted_ids[v]) + " has no label");
    }
  }
  const std::size_t k = num_classes > 0 ? num_classes : static_cast<std::size_t>(max_label + 1);

  CsvFile edge_file(edge_path);
  std::vector<std::pair<NodeId, NodeId>> edges;
  bool warned = false;
  for (const auto& row : edge_file.rows()) {
    if (row.fields.size() < 2) throw ParseError(edge_file.name(), row.line_no, "expected src,dst");
    auto u = parse_int(row.fields[0]);
    auto v = parse_int(row.fields[1]);
    if (!u || !v) throw ParseError(edge_file.name(), row.line_no, "non-integer endpoint");
    if (row.fields.size() > 2 && !warned) {
      std::cerr << "warning: " << edge_file.name()
                << ": extra edge columns (weights) ignored; edges are unweighted\n";
      warned = true;
    }
    auto iu = index.find(*u);
    auto iv = index.find(*v);
    if (iu == index.end() || iv == index.end()) {
      throw ValidationError(edge_file.name() + ":" + std::to_string(row.line_no) +
                            ": dangling endpoint " + std::to_string(iu == index.end() ? *u : *v));
    }
    edges.emplace_back(iu->second, iv->second);
  }
  Graph g = Graph::from_edges(n, edges, std::move(features), std::move(labels), k);
  g.external_ids = std::move(sorted_ids);
  return g;
}

void save_graph(const Graph& g, const std::filesystem::path& edge_path,
                const std::filesystem::path& feature_path, const std::filesystem::path& label_path) {
  std::ofstream e(edge_path), f(feature_path), l(label_path);
  if (!e || !f || !l) throw Error("cannot open output files for graph export");
  e << "src,dst\n";
  for (std::size_t v = 0; v < g.num_nodes; ++v)
    for (NodeId u : g.neighbors(static_cast<NodeId>(v)))
      if (static_cast<std::size_t>(u) > v) e << v << ',' << u << '\n';
  f << "node_id";
  for (std::size_t j = 0; j < g.feature_dim(); ++j) f << ",f" << j + 1;
  f << '\n';
  char buf[40];
  for (std::size_t v = 0; v < g.num_nodes; ++v) {
    f << v;
    for (double x : g.features.row(v)) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      f << ',' << buf;
    }
    f << '\n';
  }
  l << "node_id,label\n";
  for (std::size_t v = 0; v < g.num_nodes; ++v) l << v << ',' << g.labels[v] << '\n';
}

ClassStats class_stats(const Graph& g, const NodeMask& mask) {
  if (mask.size() != g.num_nodes) throw ValidationError("class_stats: mask length mismatch");
  ClassStats s;
  s.counts.assign(g.num_classes, 0);
  std::size_t total = 0;
  for (std::size_t v = 0; v < g.num_nodes; ++v) {
    if (!mask[v]) continue;
    ++s.counts[static_cast<std::size_t>(g.labels[v])];
    ++total;
  }
  for (std::size_t c = 0; c < g.num_classes; ++c) {
    if (s.counts[c] == 0) {
      throw ValidationError("class " + std::to_string(c) + " has no node in the selected set");
    }
  }
  s.priors.resize(g.num_classes);
  for (std::size_t c = 0; c < g.num_classes; ++c)
    s.priors[c] = static_cast<double>(s.counts[c]) / static_cast<double>(total);
  const auto [mn, mx] = std::minmax_element(s.counts.begin(), s.counts.end());
  s.imbalance_ratio = static_cast<double>(*mn) / static_cast<double>(*mx);
  return s;
}

ClassStats class_stats(const Graph& g) { return class_stats(g, full_mask(g.num_nodes)); }

std::vector<std::size_t> synthetic_class_sizes(std::size_t n, std::size_t k, double ir) {
  if (k < 2) throw ParameterError("synthetic graph needs k >= 2");
  if (!(ir > 0.0 && ir <= 1.0)) throw ParameterError("ir must be in (0, 1]");
  if (n < 10 * k) throw ParameterError("n must be at least 10*k");
  std::vector<double> w(k);
  for (std::size_t c = 0; c < k; ++c)
    w[c] = std::pow(ir, static_cast<double>(c) / static_cast<double>(k - 1));
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<std::size_t> sizes(k);
  std::size_t assigned = 0;
  for (std::size_t c = 1; c < k; ++c) {
    sizes[c] = static_cast<std::size_t>(std::llround(static_cast<double>(n) * w[c] / total));
    assigned += sizes[c];
  }
  if (assigned >= n) throw ParameterError("infeasible class sizes");
  sizes[0] = n - assigned;
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) {
      throw ParameterError("ir=" + std::to_string(ir) + " with n=" + std::to_string(n) +
                           " leaves class " + std::to_string(c) + " empty");
    }
  }
  return sizes;
}

Graph generate_synthetic(const SyntheticSpec& spec) {
  if (!(spec.homophily >= 0.0 && spec.homophily <= 1.0)) {
    throw ParameterError("homophily must be in [0, 1]");
  }
  if (spec.feature_dim < spec.k) throw ParameterError("feature_dim must be >= k");
  if (!(spec.mean_degree >= 0.0)) throw ParameterError("mean_degree must be >= 0");
  const auto sizes = synthetic_class_sizes(spec.n, spec.k, spec.ir);
  const std::size_t n = spec.n;

  // Positions 0..n-1 are grouped by class; a seeded permutation maps them to
  // node ids so labels are not contiguous.
  std::vector<std::size_t> block_start(spec.k + 1, 0);
  for (std::size_t c = 0; c < spec.k; ++c) block_start[c + 1] = block_start[c] + sizes[c];
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64 perm_rng(spec.seed, 1);
  shuffle(perm, perm_rng);

  // Mean degree = base * (1/n) sum_c n_c [h (n_c - 1) + (1 - h)(n - n_c)].
  double denom = 0.0;
  for (std::size_t c = 0; c < spec.k; ++c) {
    const double nc = static_cast<double>(sizes[c]);
    denom += nc * (spec.homophily * (nc - 1.0) + (1.0 - spec.homophily) * (static_cast<double>(n) - nc));
  }
  denom /= static_cast<double>(n);
  const double base = denom > 0.0 ? spec.mean_degree / denom : 0.0;
  const double p_in = std::min(1.0, spec.homophily * base);
  const double p_out = std::min(1.0, (1.0 - spec.homophily) * base);

  SplitMix64 edge_rng(spec.seed, 2);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t cu = 0; cu < spec.k; ++cu) {
    for (std::size_t u = block_start[cu]; u < block_start[cu + 1]; ++u) {
      for (std::size_t cv = cu; cv < spec.k; ++cv) {
        const double p = cu == cv ? p_in : p_out;
        const std::size_t lo = std::max(u + 1, block_start[cv]);
        const std::size_t hi = block_start[cv + 1];
        if (p <= 0.0 || lo >= hi) continue;
        if (p >= 1.0) {
          for (std::size_t v = lo; v < hi; ++v) edges.emplace_back(perm[u], perm[v]);
          continue;
        }
        // Geometric skipping over the Bernoulli(p) sequence.
        const double log_q = std::log1p(-p);
        std::size_t v = lo;
        while (true) {
          const double r = 1.0 - edge_rng.uniform01();
          const double skip = std::floor(std::log(r) / log_q);
          if (skip >= static_cast<double>(hi - v)) break;
          v += static_cast<std::size_t>(skip);
          edges.emplace_back(perm[u], perm[v]);
          ++v;
        }
      }
    }
  }

  std::vector<Label> labels(n);
  for (std::size_t c = 0; c < spec.k; ++c)
    for (std::size_t pos = block_start[c]; pos < block_start[c + 1]; ++pos)
      labels[perm[pos]] = static_cast<Label>(c);

  const double scale = spec.class_separation / std::sqrt(2.0);
  SplitMix64 feat_rng(spec.seed, 3);
  Matrix features(n, spec.feature_dim);
  for (std::size_t v = 0; v < n; ++v) {
    auto row = features.row(v);
    for (double& x : row) x = feat_rng.normal();
    row[static_cast<std::size_t>(labels[v])] += scale;
  }
  return Graph::from_edges(n, edges, std::move(features), std::move(labels), spec.k);
}

Graph split_masks(const Graph& g, double train_frac, double val_frac, std::uint64_t seed,
                  bool allow_empty_test) {
  if (!(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac < 1.0)) {
    throw ParameterError("split fractions must satisfy train > 0, val >= 0, train + val < 1");
  }
  Graph out = g;
  out.train_mask.assign(g.num_nodes, false);
  out.val_mask.assign(g.num_nodes, false);
  out.test_mask.assign(g.num_nodes, false);
  std::vector<std::vector<NodeId>> by_class(g.num_classes);
  for (std::size_t v = 0; v < g.num_nodes; ++v)
    by_class[static_cast<std::size_t>(g.labels[v])].push_back(static_cast<NodeId>(v));
  SplitMix64 rng(seed, 4);
  bool empty_test = false;
  for (std::size_t c = 0; c < g.num_classes; ++c) {
    auto& nodes = by_class[c];
    shuffle(nodes, rng);
    const double cnt = static_cast<double>(nodes.size());
    // Slack so that e.g. 0.29 * 100 = 28.999999999999996 floors to 29.
    const auto n_train = static_cast<std::size_t>(std::floor(train_frac * cnt + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(val_frac * cnt + 1e-9));
    const std::size_t n_test = nodes.size() - n_train - n_val;
    if (n_train == 0 || (val_frac > 0.0 && n_val == 0)) {
      throw ValidationError("class " + std::to_string(c) + " (" + std::to_string(nodes.size()) +
                            " nodes) is too small to appear in every split");
    }
    if (n_test == 0) empty_test = true;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto v = static_cast<std::size_t>(nodes[i]);
      if (i < n_train) out.train_mask[v] = true;
      else if (i < n_train + n_val) out.val_mask[v] = true;
      else out.test_mask[v] = true;
    }
  }
  if (empty_test) {
    if (!allow_empty_test) throw ValidationError("split leaves some class with no test node");
    std::cerr << "warning: split leaves some class with no test node\n";
  }
  return out;
}

}  // namespace csgnn
