#include "csgnn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "csgnn/config.hpp"
#include "csgnn/error.hpp"

namespace csgnn {

namespace {

constexpr const char* kHeader = "CSGNN-CKPT v1";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << fmt17(m(r, c));
    }
    out << '\n';
  }
}

void write_scalar(std::ostream& out, const std::string& name, double v) {
  write_tensor(out, name, Matrix(1, 1, v));
}

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }

  double parse_value(const std::string& tok) const {
    // strtod rather than stod: subnormals must parse, not throw.
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size()) fail("bad number '" + tok + "'");
    return v;
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

const Matrix& require(const std::map<std::string, Matrix>& t, const std::string& name) {
  auto it = t.find(name);
  if (it == t.end()) throw ShapeError("checkpoint: missing tensor " + name);
  return it->second;
}

double scalar(const std::map<std::string, Matrix>& t, const std::string& name) {
  const Matrix& m = require(t, name);
  if (m.rows() != 1 || m.cols() != 1) throw ShapeError("checkpoint: " + name + " must be 1x1");
  return m(0, 0);
}

}  // namespace

void write_checkpoint(std::ostream& out, const TrainState& s) {
  out << kHeader << '\n';
  for (const auto& f : config_fields()) out << "config " << f.name << ' ' << f.get(s.config) << '\n';
  write_tensor(out, "transform.weight", s.transform.weight);
  if (s.transform.has_bias()) write_tensor(out, "transform.bias", s.transform.bias);
  for (std::size_t l = 0; l < s.gnn.num_layers(); ++l) {
    write_tensor(out, "gnn.layer" + std::to_string(l) + ".weight", s.gnn.weights[l]);
    if (s.gnn.has_bias()) write_tensor(out, "gnn.layer" + std::to_string(l) + ".bias", s.gnn.biases[l]);
  }
  write_tensor(out, "cost.C", s.cost.cost);
  write_scalar(out, "train.epoch", static_cast<double>(s.epoch));
  if (s.bandit) {
    write_scalar(out, "sampler.p", s.bandit->p);
    write_scalar(out, "sampler.terminated", s.bandit->terminated ? 1.0 : 0.0);
    if (s.bandit->frozen_p) write_scalar(out, "sampler.frozen_p", *s.bandit->frozen_p);
  }
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  write_checkpoint(out, state);
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

TrainState read_checkpoint(std::istream& in, const std::string& source) {
  Reader rd(in, source);
  std::string line;
  if (!rd.next(line) || line.substr(0, line.find_last_not_of(" \t\r") + 1) != kHeader) {
    rd.fail(std::string("expected header '") + kHeader + "'");
  }
  TrainConfig cfg;
  std::map<std::string, Matrix> tensors;
  while (rd.next(line)) {
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    if (name == "config") {
      std::string key, value;
      ls >> key;
      std::getline(ls, value);
      try {
        set_config_value(cfg, key, value);
      } catch (const ParameterError& e) {
        rd.fail(e.what());
      }
      continue;
    }
    std::size_t rows = 0, cols = 0;
    if (!(ls >> rows >> cols)) rd.fail("expected '<name> <rows> <cols>'");
    if (tensors.count(name)) rd.fail("duplicate tensor " + name);
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!rd.next(line)) rd.fail("truncated tensor " + name);
      std::istringstream vs(line);
      std::string tok;
      std::size_t c = 0;
      while (vs >> tok) {
        if (c >= cols) rd.fail("too many values in row of " + name);
        m(r, c++) = rd.parse_value(tok);
      }
      if (c != cols) rd.fail("too few values in row of " + name);
    }
    tensors.emplace(name, std::move(m));
  }

  cfg.validate();
  TrainState s;
  s.config = cfg;
  s.transform.weight = require(tensors, "transform.weight");
  if (cfg.use_bias) s.transform.bias = require(tensors, "transform.bias");
  for (std::size_t l = 0;; ++l) {
    const std::string prefix = "gnn.layer" + std::to_string(l);
    auto it = tensors.find(prefix + ".weight");
    if (it == tensors.end()) break;
    s.gnn.weights.push_back(it->second);
    if (cfg.use_bias) s.gnn.biases.push_back(require(tensors, prefix + ".bias"));
  }
  if (s.gnn.num_layers() != cfg.layers) throw ShapeError("checkpoint: layer count disagrees with config");
  s.gnn.validate();

  const Matrix& c = require(tensors, "cost.C");
  const std::size_t k = s.transform.weight.cols();
  if (c.rows() != k || c.cols() != k) throw ShapeError("checkpoint: cost.C is not K x K");
  s.cost = CostMatrix::uniform(k);
  s.cost.cost = c;
  s.cost.beta = cfg.beta;
  s.cost.lr = cfg.cost_lr;
  if (s.gnn.weights.back().cols() != k) throw ShapeError("checkpoint: GNN output width != K");

  s.epoch = static_cast<std::size_t>(scalar(tensors, "train.epoch"));
  if (cfg.sampler_enabled()) {
    BanditState b = BanditState::initial(cfg.bandit_config());
    b.p = scalar(tensors, "sampler.p");
    b.terminated = scalar(tensors, "sampler.terminated") != 0.0;
    if (tensors.count("sampler.frozen_p")) b.frozen_p = scalar(tensors, "sampler.frozen_p");
    b.epoch = s.epoch;
    s.bandit = std::move(b);
  }
  return s;
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return read_checkpoint(in, path.string());
}

}  // namespace csgnn
