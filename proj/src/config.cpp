#include "csgnn/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "csgnn/error.hpp"

namespace csgnn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
    throw ParameterError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

template <typename T>
T parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T v{};
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParameterError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ParameterError(key + ": expected true/false, got '" + text + "'");
}

#define CSGNN_DOUBLE_FIELD(member, help)                                               \
  ConfigField {                                                                        \
    #member, help, [](const TrainConfig& c) { return fmt_double(c.member); },          \
        [](TrainConfig& c, const std::string& v) { c.member = parse_double(#member, v); } \
  }

#define CSGNN_SIZE_FIELD(member, help)                                                      \
  ConfigField {                                                                             \
    #member, help, [](const TrainConfig& c) { return std::to_string(c.member); },           \
        [](TrainConfig& c, const std::string& v) { c.member = parse_int<std::size_t>(#member, v); } \
  }

std::vector<ConfigField> build_fields() {
  std::vector<ConfigField> f;
  f.push_back(CSGNN_SIZE_FIELD(epochs, "training epochs"));
  f.push_back(CSGNN_SIZE_FIELD(layers, "GNN layers"));
  f.push_back(CSGNN_SIZE_FIELD(hidden_dim, "GNN hidden width"));
  f.push_back(CSGNN_DOUBLE_FIELD(lr, "network learning rate"));
  f.push_back(CSGNN_DOUBLE_FIELD(cost_lr, "cost matrix learning rate"));
  f.push_back(CSGNN_DOUBLE_FIELD(lambda, "weight of the transform loss"));
  f.push_back(CSGNN_DOUBLE_FIELD(beta, "scale of the cost target"));
  f.push_back(CSGNN_DOUBLE_FIELD(tau, "bandit step size"));
  f.push_back(CSGNN_DOUBLE_FIELD(p_init, "initial neighbor retention fraction"));
  f.push_back(CSGNN_DOUBLE_FIELD(p_min, "lower bound on the retention fraction"));
  f.push_back(CSGNN_SIZE_FIELD(window, "bandit reward window length"));
  f.push_back({"threshold", "bandit stops when |window reward sum| <= threshold",
               [](const TrainConfig& c) { return std::to_string(c.threshold); },
               [](TrainConfig& c, const std::string& v) { c.threshold = parse_int<int>("threshold", v); }});
  f.push_back({"action_rule", "bandit action rule: greedy or counter",
               [](const TrainConfig& c) { return action_rule_name(c.action_rule); },
               [](TrainConfig& c, const std::string& v) {
                 const std::string t = trim(v);
                 if (t == "greedy") c.action_rule = ActionRule::kGreedy;
                 else if (t == "counter") c.action_rule = ActionRule::kCounter;
                 else throw ParameterError("action_rule: expected greedy or counter, got '" + v + "'");
               }});
  f.push_back({"seed", "random seed",
               [](const TrainConfig& c) { return std::to_string(c.seed); },
               [](TrainConfig& c, const std::string& v) { c.seed = parse_int<std::uint64_t>("seed", v); }});
  f.push_back({"ablation", "full, no_sampler, no_cost or vanilla",
               [](const TrainConfig& c) { return ablation_name(c.ablation); },
               [](TrainConfig& c, const std::string& v) { c.ablation = parse_ablation(trim(v)); }});
  f.push_back({"optimizer", "gd or adam",
               [](const TrainConfig& c) { return optimizer_name(c.optimizer); },
               [](TrainConfig& c, const std::string& v) {
                 const std::string t = trim(v);
                 if (t == "gd") c.optimizer = OptimizerKind::kGd;
                 else if (t == "adam") c.optimizer = OptimizerKind::kAdam;
                 else throw ParameterError("optimizer: expected gd or adam, got '" + v + "'");
               }});
  f.push_back({"use_bias", "add bias terms to the transform and GNN layers",
               [](const TrainConfig& c) { return std::string(c.use_bias ? "true" : "false"); },
               [](TrainConfig& c, const std::string& v) { c.use_bias = parse_bool("use_bias", v); }});
  f.push_back({"similarity", "similarity basis: softmax or raw",
               [](const TrainConfig& c) { return similarity_name(c.similarity); },
               [](TrainConfig& c, const std::string& v) {
                 const std::string t = trim(v);
                 if (t == "softmax") c.similarity = SimilarityBasis::kSoftmax;
                 else if (t == "raw") c.similarity = SimilarityBasis::kRaw;
                 else throw ParameterError("similarity: expected softmax or raw, got '" + v + "'");
               }});
  f.push_back(CSGNN_DOUBLE_FIELD(train_frac, "per-class fraction of nodes used for training"));
  f.push_back(CSGNN_DOUBLE_FIELD(val_frac, "per-class fraction of nodes used for validation"));
  return f;
}

#undef CSGNN_DOUBLE_FIELD
#undef CSGNN_SIZE_FIELD

}  // namespace

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = build_fields();
  return fields;
}

void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : config_fields()) {
    if (f.name == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ParameterError("unknown config key '" + key + "'");
}

void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), line_no, "expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    try {
      set_config_value(cfg, key, value);
    } catch (const ParameterError& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  j["epochs"] = cfg.epochs;
  j["layers"] = cfg.layers;
  j["hidden_dim"] = cfg.hidden_dim;
  j["lr"] = cfg.lr;
  j["cost_lr"] = cfg.cost_lr;
  j["lambda"] = cfg.lambda;
  j["beta"] = cfg.beta;
  j["tau"] = cfg.tau;
  j["p_init"] = cfg.p_init;
  j["p_min"] = cfg.p_min;
  j["window"] = cfg.window;
  j["threshold"] = cfg.threshold;
  j["action_rule"] = action_rule_name(cfg.action_rule);
  j["seed"] = cfg.seed;
  j["ablation"] = ablation_name(cfg.ablation);
  j["optimizer"] = optimizer_name(cfg.optimizer);
  j["use_bias"] = cfg.use_bias;
  j["similarity"] = similarity_name(cfg.similarity);
  j["train_frac"] = cfg.train_frac;
  j["val_frac"] = cfg.val_frac;
  return j;
}

nlohmann::json metrics_to_json(const MetricsReport& m) {
  nlohmann::json j;
  j["per_class_recall"] = m.per_class_recall;
  j["macro_recall"] = m.macro_recall;
  j["macro_auc"] = m.macro_auc;
  j["g_mean"] = m.g_mean;
  j["confusion"] = m.confusion;
  j["support"] = m.support;
  return j;
}

std::string action_rule_name(ActionRule r) { return r == ActionRule::kCounter ? "counter" : "greedy"; }

std::string optimizer_name(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "gd"; }

std::string similarity_name(SimilarityBasis b) {
  return b == SimilarityBasis::kRaw ? "raw" : "softmax";
}

}  // namespace csgnn
