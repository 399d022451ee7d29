// csgnn: train and evaluate cost-sensitive GNNs with bandit neighbor sampling.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csgnn/checkpoint.hpp"
#include "csgnn/config.hpp"
#include "csgnn/error.hpp"
#include "csgnn/experiments.hpp"
#include "csgnn/gradcheck.hpp"
#include "csgnn/graph.hpp"
#include "csgnn/trainer.hpp"

namespace fs = std::filesystem;
using namespace csgnn;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr double kGradTolerance = 1e-4;

// One --flag per TrainConfig field, plus --config FILE.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> values;
  std::vector<CLI::Option*> options;
};

std::string flag_name(const std::string& field) {
  std::string s = field;
  for (char& c : s)
    if (c == '_') c = '-';
  return "--" + s;
}

// Shortest text that reads back to the same double; other values unchanged.
std::string display_default(const std::string& text) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) return text;
  char buf[32];
  return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

void add_config_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--config", f.config_path, "flat key = value config file; flags override it")
      ->check(CLI::ExistingFile);
  const auto& fields = config_fields();
  f.values.resize(fields.size());
  const TrainConfig defaults;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    f.options.push_back(app->add_option(flag_name(fields[i].name), f.values[i], fields[i].help)
                            ->default_str(display_default(fields[i].get(defaults))));
  }
}

// Defaults, then CSGNN_SEED, then the config file, then explicit flags.
TrainConfig resolve_config(const ConfigFlags& f) {
  TrainConfig cfg;
  if (const char* env = std::getenv("CSGNN_SEED"); env && *env) {
    set_config_value(cfg, "seed", env);
  }
  if (!f.config_path.empty()) apply_config_file(cfg, f.config_path);
  const auto& fields = config_fields();
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (f.options[i]->count() > 0) fields[i].set(cfg, f.values[i]);
  }
  cfg.validate();
  return cfg;
}

struct DataFlags {
  std::string edges, features, labels;
  std::size_t num_classes = 0;
};

void add_data_flags(CLI::App* app, DataFlags& d, bool required) {
  auto* e = app->add_option("--edges", d.edges, "edge list CSV (src,dst)")->check(CLI::ExistingFile);
  auto* f = app->add_option("--features", d.features, "node feature CSV (node_id,f1,...)")
                ->check(CLI::ExistingFile);
  auto* l = app->add_option("--labels", d.labels, "node label CSV (node_id,label)")
                ->check(CLI::ExistingFile);
  app->add_option("--num-classes", d.num_classes, "class count; 0 infers max label + 1")
      ->capture_default_str();
  if (required) {
    e->required();
    f->required();
    l->required();
  } else {
    e->needs(f, l);
    f->needs(e, l);
    l->needs(e, f);
  }
}

void add_synthetic_flags(CLI::App* app, SyntheticSpec& s) {
  app->add_option("--n", s.n, "synthetic node count")->capture_default_str();
  app->add_option("--k", s.k, "synthetic class count")->capture_default_str();
  app->add_option("--ir", s.ir, "synthetic imbalance ratio (min/max class size)")->capture_default_str();
  app->add_option("--homophily", s.homophily, "fraction of edge rate within classes")
      ->capture_default_str();
  app->add_option("--feature-dim", s.feature_dim, "synthetic feature width")->capture_default_str();
  app->add_option("--separation", s.class_separation, "distance between class means")
      ->capture_default_str();
  app->add_option("--mean-degree", s.mean_degree, "expected mean degree")->capture_default_str();
}

Graph load_data(const DataFlags& d) { return load_graph(d.edges, d.features, d.labels, d.num_classes); }

// Loads the graph when files were given, otherwise generates one with the
// config seed. Splits with the config fractions.
Graph data_or_synthetic(const DataFlags& d, SyntheticSpec spec, const TrainConfig& cfg) {
  Graph g;
  if (!d.edges.empty()) {
    g = load_data(d);
  } else {
    spec.seed = cfg.seed;
    g = generate_synthetic(spec);
  }
  return split_masks(g, cfg.train_frac, cfg.val_frac, cfg.seed);
}

const NodeMask& pick_mask(const Graph& g, const std::string& split) {
  if (split == "train") return g.train_mask;
  if (split == "val") return g.val_mask;
  return g.test_mask;
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json history_json(const std::vector<EpochRecord>& history) {
  nlohmann::json h = nlohmann::json::array();
  for (const auto& r : history) {
    h.push_back({{"trans_loss", r.trans_loss},
                 {"gnn_loss", r.gnn_loss},
                 {"cost_loss", r.cost_loss},
                 {"total_loss", r.total_loss},
                 {"val_error", r.val_error},
                 {"p", r.p},
                 {"reward", r.reward},
                 {"terminated", r.terminated}});
  }
  return h;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw ParameterError("bad list entry '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ParameterError("empty list '" + text + "'");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"csgnn: cost-sensitive GNN training with bandit neighbor sampling"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  // generate
  SyntheticSpec gen_spec;
  std::string gen_out = ".";
  auto* generate = app.add_subcommand("generate", "write a synthetic imbalanced graph");
  add_synthetic_flags(generate, gen_spec);
  generate->add_option("--seed", gen_spec.seed, "generator seed")->capture_default_str();
  generate->add_option("--out-dir", gen_out, "directory for edges/features/labels CSVs")
      ->capture_default_str();

  // train
  ConfigFlags train_cfg;
  DataFlags train_data;
  std::string train_out = ".";
  std::string train_trace;
  auto* train_cmd = app.add_subcommand("train", "train a model; writes checkpoint.ckpt and metrics.json");
  add_config_flags(train_cmd, train_cfg);
  add_data_flags(train_cmd, train_data, true);
  train_cmd->add_option("--out-dir", train_out, "output directory")->capture_default_str();
  train_cmd->add_option("--trace", train_trace, "directory for bandit_trace.csv and cost_trace.csv");

  // predict / eval
  std::string ckpt_path, pred_split = "test", pred_out;
  DataFlags pred_data;
  auto* predict_cmd = app.add_subcommand("predict", "per-node labels and probabilities from a checkpoint");
  predict_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required()->check(CLI::ExistingFile);
  add_data_flags(predict_cmd, pred_data, true);
  predict_cmd->add_option("--split", pred_split, "train, val, test or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}))
      ->capture_default_str();
  predict_cmd->add_option("--out", pred_out, "CSV output path (stdout when omitted)");

  std::string eval_split = "test", eval_out;
  DataFlags eval_data;
  auto* eval_cmd = app.add_subcommand("eval", "metrics of a checkpoint on one split");
  eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required()->check(CLI::ExistingFile);
  add_data_flags(eval_cmd, eval_data, true);
  eval_cmd->add_option("--split", eval_split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "metrics JSON path (stdout when omitted)");

  // sweep-ir
  ConfigFlags sweep_cfg;
  SyntheticSpec sweep_spec;
  std::string sweep_irs = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0", sweep_seeds = "0,1,2,3,4";
  std::string sweep_out = "ir_sweep.csv";
  std::size_t sweep_threads = 1;
  auto* sweep_cmd = app.add_subcommand("sweep-ir", "train every configuration across imbalance ratios");
  add_config_flags(sweep_cmd, sweep_cfg);
  add_synthetic_flags(sweep_cmd, sweep_spec);
  sweep_cmd->add_option("--irs", sweep_irs, "comma-separated imbalance ratios")->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep_seeds, "comma-separated seeds")->capture_default_str();
  sweep_cmd->add_option("--threads", sweep_threads, "concurrent (ir, seed) jobs")->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "CSV output path")->capture_default_str();

  // ablate
  ConfigFlags ablate_cfg;
  DataFlags ablate_data;
  SyntheticSpec ablate_spec;
  std::string ablate_out = ".";
  auto* ablate_cmd = app.add_subcommand("ablate", "full, no_sampler and no_cost on shared splits");
  add_config_flags(ablate_cmd, ablate_cfg);
  add_data_flags(ablate_cmd, ablate_data, false);
  add_synthetic_flags(ablate_cmd, ablate_spec);
  ablate_cmd->add_option("--out-dir", ablate_out, "directory for ablation.csv and ablation.json")
      ->capture_default_str();

  // sensitivity
  ConfigFlags sens_cfg;
  DataFlags sens_data;
  SyntheticSpec sens_spec;
  std::string sens_param, sens_values, sens_out = ".";
  auto* sens_cmd = app.add_subcommand("sensitivity", "one training per value of a hyperparameter");
  add_config_flags(sens_cmd, sens_cfg);
  add_data_flags(sens_cmd, sens_data, false);
  add_synthetic_flags(sens_cmd, sens_spec);
  sens_cmd->add_option("--param", sens_param, "train_frac, beta, layers or hidden_dim")
      ->required()
      ->check(CLI::IsMember({"train_frac", "beta", "layers", "hidden_dim"}));
  sens_cmd->add_option("--values", sens_values, "comma-separated values")->required();
  sens_cmd->add_option("--out-dir", sens_out, "directory for sensitivity_<param>.csv")
      ->capture_default_str();

  // gradcheck
  std::uint64_t grad_seed = 0;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference checks of the analytic gradients");
  auto* grad_seed_opt = grad_cmd->add_option("--seed", grad_seed, "seed (default CSGNN_SEED or 0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << '\n' << app.help();
    return kExitUsage;
  }

  try {
    if (*generate) {
      const Graph g = generate_synthetic(gen_spec);
      fs::create_directories(gen_out);
      const fs::path dir = gen_out;
      save_graph(g, dir / "edges.csv", dir / "features.csv", dir / "labels.csv");
      const ClassStats stats = class_stats(g);
      nlohmann::json j{{"nodes", g.num_nodes},
                       {"edges", g.num_edges()},
                       {"class_counts", stats.counts},
                       {"imbalance_ratio", stats.imbalance_ratio}};
      std::cout << j.dump(2) << '\n';
    } else if (*train_cmd) {
      const TrainConfig cfg = resolve_config(train_cfg);
      const Graph g = split_masks(load_data(train_data), cfg.train_frac, cfg.val_frac, cfg.seed);
      const TrainResult r = train(g, cfg);
      fs::create_directories(train_out);
      const fs::path dir = train_out;
      save_checkpoint(r.state, dir / "checkpoint.ckpt");
      nlohmann::json j;
      j["config"] = config_to_json(cfg);
      j["validation"] = metrics_to_json(r.validation);
      j["test"] = metrics_to_json(evaluate(r.state, g, g.test_mask));
      j["final_p"] = r.state.sampling_p();
      j["history"] = history_json(r.state.history);
      write_json(j, dir / "metrics.json");
      if (!train_trace.empty()) {
        fs::create_directories(train_trace);
        write_bandit_trace(r.state.history, fs::path(train_trace) / "bandit_trace.csv");
        write_cost_trace(r.state.history, fs::path(train_trace) / "cost_trace.csv");
      }
      nlohmann::json summary{{"checkpoint", (dir / "checkpoint.ckpt").string()},
                             {"metrics", (dir / "metrics.json").string()},
                             {"validation", j["validation"]},
                             {"test", j["test"]}};
      std::cout << summary.dump(2) << '\n';
    } else if (*predict_cmd) {
      const TrainState state = load_checkpoint(ckpt_path);
      const auto& cfg = state.config;
      const Graph g = split_masks(load_data(pred_data), cfg.train_frac, cfg.val_frac, cfg.seed);
      const NodeMask mask = pred_split == "all" ? full_mask(g.num_nodes) : pick_mask(g, pred_split);
      const Prediction p = predict(state, g, mask);
      std::ofstream file;
      if (!pred_out.empty()) {
        file.open(pred_out);
        if (!file) throw Error("cannot write " + pred_out);
      }
      std::ostream& out = pred_out.empty() ? std::cout : file;
      out << "node_id,label";
      for (std::size_t c = 0; c < p.probabilities.cols(); ++c) out << ",p" << c;
      out << '\n';
      out.precision(17);
      for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        out << g.external_id(p.nodes[i]) << ',' << p.labels[i];
        for (double v : p.probabilities.row(i)) out << ',' << v;
        out << '\n';
      }
    } else if (*eval_cmd) {
      const TrainState state = load_checkpoint(ckpt_path);
      const auto& cfg = state.config;
      const Graph g = split_masks(load_data(eval_data), cfg.train_frac, cfg.val_frac, cfg.seed);
      nlohmann::json j;
      j["split"] = eval_split;
      j["config"] = config_to_json(cfg);
      j["metrics"] = metrics_to_json(evaluate(state, g, pick_mask(g, eval_split)));
      if (eval_out.empty()) std::cout << j.dump(2) << '\n';
      else write_json(j, eval_out);
    } else if (*sweep_cmd) {
      const TrainConfig cfg = resolve_config(sweep_cfg);
      std::vector<std::uint64_t> seeds;
      for (double s : parse_list(sweep_seeds)) {
        if (s < 0 || s != static_cast<double>(static_cast<std::uint64_t>(s))) {
          throw ParameterError("seeds must be non-negative integers");
        }
        seeds.push_back(static_cast<std::uint64_t>(s));
      }
      const auto rows = ir_sweep(sweep_spec, parse_list(sweep_irs), cfg, seeds, kAllAblations,
                                 sweep_threads);
      write_ir_sweep_csv(rows, sweep_out);
      std::cout << nlohmann::json{{"rows", rows.size()}, {"csv", sweep_out},
                                  {"config", config_to_json(cfg)}}.dump(2)
                << '\n';
    } else if (*ablate_cmd) {
      const TrainConfig cfg = resolve_config(ablate_cfg);
      const Graph g = data_or_synthetic(ablate_data, ablate_spec, cfg);
      const AblationResult res = ablation_run(g, cfg);
      fs::create_directories(ablate_out);
      write_ablation_csv(res, fs::path(ablate_out) / "ablation.csv");
      nlohmann::json j;
      j["config"] = config_to_json(cfg);
      for (const auto& r : res.reports) j["reports"][ablation_name(r.config)] = metrics_to_json(r.metrics);
      write_json(j, fs::path(ablate_out) / "ablation.json");
      std::cout << j.dump(2) << '\n';
    } else if (*sens_cmd) {
      const TrainConfig cfg = resolve_config(sens_cfg);
      const Graph g = data_or_synthetic(sens_data, sens_spec, cfg);
      const auto rows = sensitivity_sweep(sens_param, parse_list(sens_values), g, cfg);
      fs::create_directories(sens_out);
      const fs::path csv = fs::path(sens_out) / ("sensitivity_" + sens_param + ".csv");
      write_sensitivity_csv(rows, csv);
      std::cout << nlohmann::json{{"rows", rows.size()}, {"csv", csv.string()},
                                  {"config", config_to_json(cfg)}}.dump(2)
                << '\n';
    } else if (*grad_cmd) {
      if (grad_seed_opt->count() == 0) {
        TrainConfig seeded;
        if (const char* env = std::getenv("CSGNN_SEED"); env && *env) set_config_value(seeded, "seed", env);
        grad_seed = seeded.seed;
      }
      const CostGradCheck cost = check_cost_gradient(grad_seed);
      const EndToEndGradCheck e2e = check_end_to_end_gradient(grad_seed);
      std::cout.precision(3);
      std::cout << std::scientific;
      std::cout << "cost-sensitive CE wrt logits: " << cost.instances
                << " instances, max rel error " << cost.max_rel_error << '\n';
      for (const auto& t : e2e.tensors) {
        std::cout << "end-to-end " << t.name << ": rel error " << t.rel_error << '\n';
      }
      std::cout << "end-to-end max rel error " << e2e.max_rel_error << '\n';
      const bool ok = cost.max_rel_error < kGradTolerance && e2e.max_rel_error < kGradTolerance;
      std::cout << (ok ? "ok" : "FAILED") << '\n';
      return ok ? 0 : kExitRuntime;
    }
  } catch (const ParameterError& e) {
    // Invalid values that only surface after parsing are still usage errors.
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
