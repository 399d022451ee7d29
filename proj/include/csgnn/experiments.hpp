#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "csgnn/graph.hpp"
#include "csgnn/metrics.hpp"
#include "csgnn/trainer.hpp"

namespace csgnn {

/// One trained configuration scored on the test mask.
struct SweepRow {
  double ir = 0.0;
  std::uint64_t seed = 0;
  Ablation config = Ablation::kFull;
  MetricsReport metrics;
};

inline const std::vector<Ablation> kAllAblations = {Ablation::kFull, Ablation::kNoSampler,
                                                    Ablation::kNoCost, Ablation::kVanilla};

/// For every (ir, seed) regenerates the synthetic graph with that ratio and
/// seed, splits it with the config fractions, and trains each listed
/// configuration with the same seed. Rows come back ordered by ir, seed,
/// then configuration regardless of `threads`.
std::vector<SweepRow> ir_sweep(const SyntheticSpec& base, const std::vector<double>& irs,
                               const TrainConfig& cfg, const std::vector<std::uint64_t>& seeds,
                               const std::vector<Ablation>& configs = kAllAblations,
                               std::size_t threads = 1);

/// Columns: ir,seed,config,auc,recall,gmean.
void write_ir_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

struct AblationReport {
  Ablation config = Ablation::kFull;
  MetricsReport metrics;
};

struct AblationResult {
  std::vector<NodeId> test_nodes;  // shared by every run
  std::vector<AblationReport> reports;
};

/// Trains full, no_sampler and no_cost on the graph's own masks with the
/// config seed and scores each on the test mask.
AblationResult ablation_run(const Graph& g, const TrainConfig& cfg,
                            const std::vector<Ablation>& configs = {Ablation::kFull,
                                                                    Ablation::kNoSampler,
                                                                    Ablation::kNoCost});

/// Columns: config,auc,recall,gmean,recall_0..recall_{K-1}.
void write_ablation_csv(const AblationResult& result, const std::filesystem::path& path);

struct SensitivityRow {
  std::string param;
  double value = 0.0;
  MetricsReport metrics;
};

/// One training per value of train_frac, beta, layers or hidden_dim with
/// the config seed. train_frac re-splits g (seeded by the config seed).
std::vector<SensitivityRow> sensitivity_sweep(const std::string& param,
                                              const std::vector<double>& values, const Graph& g,
                                              const TrainConfig& cfg);

/// Columns: param,value,auc,recall,gmean.
void write_sensitivity_csv(const std::vector<SensitivityRow>& rows,
                           const std::filesystem::path& path);

/// Columns: epoch,avg_similarity,reward,p. Epochs without a bandit step
/// leave avg_similarity empty.
void write_bandit_trace(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

/// Columns: epoch,matrix,row,c0..c{K-1}; one line per row of C, T, H, S, R.
void write_cost_trace(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

}  // namespace csgnn
