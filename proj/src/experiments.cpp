#include "csgnn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>

#include "csgnn/error.hpp"

namespace csgnn {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

struct SweepJob {
  double ir;
  std::uint64_t seed;
};

std::vector<SweepRow> run_job(const SyntheticSpec& base, const SweepJob& job,
                              const TrainConfig& cfg, const std::vector<Ablation>& configs) {
  SyntheticSpec spec = base;
  spec.ir = job.ir;
  spec.seed = job.seed;
  const Graph g = split_masks(generate_synthetic(spec), cfg.train_frac, cfg.val_frac, job.seed);
  std::vector<SweepRow> rows;
  for (Ablation a : configs) {
    TrainConfig c = cfg;
    c.seed = job.seed;
    c.ablation = a;
    const TrainResult r = train(g, c);
    rows.push_back({job.ir, job.seed, a, evaluate(r.state, g, g.test_mask)});
  }
  return rows;
}

}  // namespace

std::vector<SweepRow> ir_sweep(const SyntheticSpec& base, const std::vector<double>& irs,
                               const TrainConfig& cfg, const std::vector<std::uint64_t>& seeds,
                               const std::vector<Ablation>& configs, std::size_t threads) {
  std::vector<SweepJob> jobs;
  for (double ir : irs)
    for (std::uint64_t s : seeds) jobs.push_back({ir, s});

  std::vector<std::vector<SweepRow>> results(jobs.size());
  threads = std::max<std::size_t>(1, threads);
  // Jobs run in waves of `threads`; each writes only its own slot.
  for (std::size_t start = 0; start < jobs.size(); start += threads) {
    const std::size_t end = std::min(jobs.size(), start + threads);
    if (threads == 1) {
      results[start] = run_job(base, jobs[start], cfg, configs);
      continue;
    }
    std::vector<std::future<std::vector<SweepRow>>> wave;
    for (std::size_t i = start; i < end; ++i) {
      wave.push_back(std::async(std::launch::async, run_job, std::cref(base), std::cref(jobs[i]),
                                std::cref(cfg), std::cref(configs)));
    }
    for (std::size_t i = start; i < end; ++i) results[i] = wave[i - start].get();
  }

  std::vector<SweepRow> out;
  for (auto& r : results) out.insert(out.end(), r.begin(), r.end());
  return out;
}

void write_ir_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "ir,seed,config,auc,recall,gmean\n";
  for (const auto& r : rows) {
    out << fmt17(r.ir) << ',' << r.seed << ',' << ablation_name(r.config) << ','
        << fmt17(r.metrics.macro_auc) << ',' << fmt17(r.metrics.macro_recall) << ','
        << fmt17(r.metrics.g_mean) << '\n';
  }
}

AblationResult ablation_run(const Graph& g, const TrainConfig& cfg,
                            const std::vector<Ablation>& configs) {
  AblationResult res;
  res.test_nodes = mask_indices(g.test_mask);
  for (Ablation a : configs) {
    TrainConfig c = cfg;
    c.ablation = a;
    const TrainResult r = train(g, c);
    res.reports.push_back({a, evaluate(r.state, g, g.test_mask)});
  }
  return res;
}

void write_ablation_csv(const AblationResult& result, const std::filesystem::path& path) {
  auto out = open_csv(path);
  const std::size_t k = result.reports.empty() ? 0 : result.reports.front().metrics.per_class_recall.size();
  out << "config,auc,recall,gmean";
  for (std::size_t c = 0; c < k; ++c) out << ",recall_" << c;
  out << '\n';
  for (const auto& r : result.reports) {
    out << ablation_name(r.config) << ',' << fmt17(r.metrics.macro_auc) << ','
        << fmt17(r.metrics.macro_recall) << ',' << fmt17(r.metrics.g_mean);
    for (double rc : r.metrics.per_class_recall) out << ',' << fmt17(rc);
    out << '\n';
  }
}

std::vector<SensitivityRow> sensitivity_sweep(const std::string& param,
                                              const std::vector<double>& values, const Graph& g,
                                              const TrainConfig& cfg) {
  if (param != "train_frac" && param != "beta" && param != "layers" && param != "hidden_dim") {
    throw ParameterError("sensitivity: unknown parameter '" + param +
                         "' (train_frac, beta, layers, hidden_dim)");
  }
  std::vector<SensitivityRow> rows;
  for (double v : values) {
    TrainConfig c = cfg;
    Graph split = g;
    if (param == "train_frac") {
      c.train_frac = v;
      c.validate();
      split = split_masks(g, c.train_frac, c.val_frac, c.seed);
    } else if (param == "beta") {
      c.beta = v;
    } else {
      if (!(v >= 1.0) || v != std::floor(v)) {
        throw ParameterError("sensitivity: " + param + " values must be positive integers");
      }
      (param == "layers" ? c.layers : c.hidden_dim) = static_cast<std::size_t>(v);
    }
    const TrainResult r = train(split, c);
    rows.push_back({param, v, evaluate(r.state, split, split.test_mask)});
  }
  return rows;
}

void write_sensitivity_csv(const std::vector<SensitivityRow>& rows,
                           const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "param,value,auc,recall,gmean\n";
  for (const auto& r : rows) {
    out << r.param << ',' << fmt17(r.value) << ',' << fmt17(r.metrics.macro_auc) << ','
        << fmt17(r.metrics.macro_recall) << ',' << fmt17(r.metrics.g_mean) << '\n';
  }
}

void write_bandit_trace(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "epoch,avg_similarity,reward,p\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    const auto& r = history[e];
    out << e << ',' << (std::isnan(r.avg_similarity) ? "" : fmt17(r.avg_similarity)) << ','
        << r.reward << ',' << fmt17(r.p) << '\n';
  }
}

void write_cost_trace(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  auto out = open_csv(path);
  const std::size_t k = history.empty() ? 0 : history.front().cost.cols();
  out << "epoch,matrix,row";
  for (std::size_t c = 0; c < k; ++c) out << ",c" << c;
  out << '\n';
  for (std::size_t e = 0; e < history.size(); ++e) {
    const auto& r = history[e];
    const std::pair<const char*, const Matrix*> blocks[] = {
        {"C", &r.cost}, {"T", &r.target}, {"H", &r.histogram}, {"S", &r.scatter}, {"R", &r.confusion}};
    for (const auto& [name, m] : blocks) {
      for (std::size_t i = 0; i < m->rows(); ++i) {
        out << e << ',' << name << ',' << i;
        for (std::size_t j = 0; j < m->cols(); ++j) out << ',' << fmt17((*m)(i, j));
        out << '\n';
      }
    }
  }
}

}  // namespace csgnn
