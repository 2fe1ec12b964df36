#include "aknet/harness/config.hpp"

#include "aknet/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace aknet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ContractViolation("config key '" + key + "': '" + v + "' is not a number");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ContractViolation("config key '" + key + "': '" + v + "' is not a non-negative integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ContractViolation("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string fmt(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

struct Field {
  const char* key;
  const char* doc;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define AK_SIZE(name, doc)                                                                  \
  Field {                                                                                   \
    #name, doc,                                                                             \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {               \
          c.name = static_cast<decltype(c.name)>(to_u64(k, v));                             \
        },                                                                                  \
        [](const ExperimentConfig& c) { return std::to_string(c.name); }                    \
  }
#define AK_REAL(name, doc)                                                                  \
  Field {                                                                                   \
    #name, doc,                                                                             \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {               \
          c.name = to_double(k, v);                                                         \
        },                                                                                  \
        [](const ExperimentConfig& c) { return fmt(c.name); }                               \
  }
#define AK_LIST(name, doc)                                                                  \
  Field {                                                                                   \
    #name, doc,                                                                             \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {               \
          c.name = to_list(k, v);                                                           \
        },                                                                                  \
        [](const ExperimentConfig& c) { return fmt(c.name); }                               \
  }
#define AK_TEXT(name, doc)                                                                  \
  Field {                                                                                   \
    #name, doc, [](ExperimentConfig& c, const std::string&, const std::string& v) { c.name = v; }, \
        [](const ExperimentConfig& c) { return c.name; }                                    \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      AK_TEXT(experiment, "gaussian-grid | exponential-grid | sow-jump"),
      AK_SIZE(seed, "master seed; every random stream derives from it"),
      AK_TEXT(noise, "gaussian | exponential"),
      AK_SIZE(state_dim, "m"),
      AK_SIZE(obs_dim, "n"),
      AK_REAL(f_radius, "spectral radius of the rotation-decay F"),
      AK_REAL(f_angle, "rotation angle of F (radians)"),
      AK_LIST(train_sows, "trained SoW values; pair (q2, r2) = (sqrt(s), 1/sqrt(s))"),
      AK_SIZE(train_per_pair, "stage-2 trajectories per trained pair"),
      AK_SIZE(stationary_count, "stage-1 trajectories at (q2, r2) = (1, 1)"),
      AK_SIZE(length, "trajectory length T"),
      AK_SIZE(test_per_point, "test trajectories per grid point"),
      AK_SIZE(test_ratio_count, "log-spaced test SoW count over the trained range"),
      AK_LIST(scales, "joint (q2, r2) scale factors applied to trained pairs"),
      AK_SIZE(jump_length, "jump protocol trajectory length"),
      AK_SIZE(jump_step, "first step with the post-jump scales"),
      AK_SIZE(jump_every, "0: single jump; k: toggle scales every k steps"),
      AK_REAL(q2_before, "pre-jump q2"),
      AK_REAL(r2_before, "pre-jump r2"),
      AK_REAL(q2_after, "post-jump q2"),
      AK_LIST(r2_after, "post-jump r2 values"),
      AK_SIZE(hidden, "GRU width; 0 picks 10 (m + n)"),
      AK_SIZE(hyper_hidden, "hypernetwork width"),
      Field{"norm", "unit | rms feature normalization",
            [](ExperimentConfig& c, const std::string&, const std::string& v) {
              c.norm = parse_feature_norm(v);
            },
            [](const ExperimentConfig& c) { return std::string(feature_norm_name(c.norm)); }},
      AK_REAL(rms_decay, "running mean-square decay for rms features"),
      AK_SIZE(stage1_epochs, ""),
      AK_SIZE(stage1_batch, ""),
      AK_REAL(stage1_step, "Adam step size"),
      AK_SIZE(stage2_epochs, ""),
      AK_SIZE(stage2_batch, ""),
      AK_REAL(stage2_step, "Adam step size"),
      AK_SIZE(patience, "early-stop patience in epochs"),
      AK_REAL(l2_weight, "L2 penalty on the trained parameters"),
      AK_REAL(validation_fraction, "held-out share of every SoW group"),
      AK_REAL(corr_alpha, "forgetting factor of the correlation estimator"),
      AK_SIZE(grid_count, "grid-search SoW candidates"),
      AK_TEXT(checkpoint, "reuse trained networks from this file when it exists"),
      Field{"train", "train when no checkpoint is available",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.train = to_bool(k, v);
            },
            [](const ExperimentConfig& c) { return std::string(c.train ? "true" : "false"); }},
  };
  return table;
}

#undef AK_SIZE
#undef AK_REAL
#undef AK_LIST
#undef AK_TEXT

}  // namespace

void ExperimentConfig::validate() const {
  if (experiment != "gaussian-grid" && experiment != "exponential-grid" &&
      experiment != "sow-jump") {
    throw ContractViolation("unknown experiment '" + experiment + "'");
  }
  (void)family();
  if (state_dim <= 0 || obs_dim <= 0) throw ContractViolation("dimensions must be positive");
  if (train_sows.empty()) throw ContractViolation("train_sows must not be empty");
  for (double s : train_sows) {
    if (!(s > 0.0)) throw ContractViolation("train_sows must be positive");
  }
  for (double s : scales) {
    if (!(s > 0.0)) throw ContractViolation("scales must be positive");
  }
  if (experiment == "sow-jump") {
    if (r2_after.empty()) throw ContractViolation("r2_after must not be empty");
    if (jump_step == 0 || jump_step >= jump_length) {
      throw ContractViolation("jump_step must lie inside the trajectory");
    }
  } else if (test_ratio_count == 0) {
    throw ContractViolation("test grid must not be empty");
  }
  if (train_per_pair == 0 || stationary_count == 0 || test_per_point == 0 || length == 0) {
    throw ContractViolation("counts must be positive");
  }
  if (!(corr_alpha > 0.0 && corr_alpha < 1.0)) throw ContractViolation("corr_alpha in (0, 1)");
  if (grid_count < 2) throw ContractViolation("grid_count must be at least 2");
  stage1_config().validate();
  stage2_config().validate();
}

Index ExperimentConfig::hidden_size() const {
  return hidden > 0 ? hidden : default_hidden_size(state_dim, obs_dim);
}

TrainConfig ExperimentConfig::stage1_config() const {
  TrainConfig t;
  t.stage = Stage::kStage1;
  t.epochs = stage1_epochs;
  t.batch_size = stage1_batch;
  t.step_size = stage1_step;
  t.patience = patience;
  t.l2_weight = l2_weight;
  t.validation_fraction = validation_fraction;
  t.seed = derive_seed(seed, "stage1");
  return t;
}

TrainConfig ExperimentConfig::stage2_config() const {
  TrainConfig t = stage1_config();
  t.stage = Stage::kStage2;
  t.epochs = stage2_epochs;
  t.batch_size = stage2_batch;
  t.step_size = stage2_step;
  t.seed = derive_seed(seed, "stage2");
  return t;
}

ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "exponential-grid") {
    c.noise = "exponential";
    c.norm = FeatureNorm::kRunningRms;
    c.stage1_epochs = 300;
    c.stage2_epochs = 200;
  } else if (experiment != "gaussian-grid" && experiment != "sow-jump") {
    throw ContractViolation("unknown experiment '" + experiment + "'");
  }
  return c;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(cfg, key, value);
      return;
    }
  }
  throw ContractViolation("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractViolation("config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ContractViolation& e) {
      throw ContractViolation("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string dump_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

std::string describe_config() {
  const ExperimentConfig d;
  std::string out;
  for (const auto& f : fields()) {
    out += std::string(f.key) + " (default " + f.get(d) + ")";
    if (*f.doc) out += ": " + std::string(f.doc);
    out += "\n";
  }
  return out;
}

}  // namespace aknet
