#include "aknet/errors.hpp"
#include "aknet/estimator/grid_search.hpp"
#include "aknet/harness/config.hpp"
#include "aknet/harness/experiments.hpp"
#include "aknet/harness/svg_plot.hpp"
#include "aknet/kgain/checkpoint.hpp"
#include "aknet/ssm/dataset_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using namespace aknet;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "aknet-out";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--out", c.out, "output / work directory");
}

// defaults <- saved work-dir config <- --config <- --seed
ExperimentConfig resolve(const Common& c, const std::string& experiment) {
  ExperimentConfig cfg;
  const fs::path saved = fs::path(c.out) / "config.txt";
  if (!experiment.empty()) {
    cfg = default_config(experiment);
  } else if (fs::exists(saved)) {
    cfg = load_config(saved, ExperimentConfig{});
  }
  if (!c.config.empty()) {
    // a config naming another experiment starts from that experiment's defaults
    ExperimentConfig probe = load_config(c.config, cfg);
    if (probe.experiment != cfg.experiment && experiment.empty()) {
      cfg = default_config(probe.experiment);
    }
    cfg = load_config(c.config, cfg);
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void save_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os) throw FormatError("cannot write " + p.string());
  os << text;
}

Dataset test_dataset(const ExperimentConfig& cfg, const SSModel& model) {
  Dataset all;
  all.family = cfg.family();
  auto take = [&](Dataset d) {
    for (auto& t : d.trajectories) all.trajectories.push_back(std::move(t));
  };
  if (cfg.experiment == "sow-jump") {
    for (double r2 : cfg.r2_after) take(make_jump_dataset(cfg, model, r2));
    return all;
  }
  std::vector<std::pair<double, double>> pairs;
  for (double s : cfg.train_sows) pairs.push_back(pair_for_sow(model, s));
  for (double s : test_ratios(cfg)) pairs.push_back(pair_for_sow(model, s));
  take(make_dataset(model, pairs, cfg.test_per_point, cfg.length, cfg.family(), SplitTag::kFull,
                    cfg.seed, "test/eval"));
  return all;
}

int cmd_generate(const Common& c, const std::string& experiment) {
  ExperimentConfig cfg = resolve(c, experiment.empty() ? "gaussian-grid" : experiment);
  const fs::path out(c.out);
  fs::create_directories(out);
  const SSModel model = make_model(cfg);
  const TrainingData data = make_training_data(cfg, model);
  save_text(out / "config.txt", dump_config(cfg));
  save_model(out / "model.akm", model);
  save_dataset(out / "stationary.akds", data.stationary);
  save_dataset(out / "train.akds", data.full);
  save_dataset(out / "test.akds", test_dataset(cfg, model));
  std::cout << "wrote config.txt, model.akm, stationary.akds (" << data.stationary.size()
            << "), train.akds (" << data.full.size() << "), test.akds to " << out << "\n";
  return 0;
}

int cmd_train(const Common& c, int stage) {
  ExperimentConfig cfg = resolve(c, "");
  const fs::path out(c.out);
  const SSModel model = load_model(out / "model.akm");
  auto progress = [](const EpochRecord& r) {
    if (r.epoch % 10 == 0) {
      std::cout << "  epoch " << std::setw(4) << r.epoch << "  train " << std::fixed
                << std::setprecision(3) << to_db(r.train_loss) << " dB  val "
                << to_db(r.val_loss) << " dB" << std::endl;
    }
  };
  if (stage == 1) {
    const Dataset ds = load_dataset(out / "stationary.akds");
    GainNetConfig g;
    g.state_dim = model.state_dim();
    g.obs_dim = model.obs_dim();
    g.hidden = cfg.hidden_size();
    g.norm = cfg.norm;
    g.rms_decay = cfg.rms_decay;
    Rng rng(derive_seed(cfg.seed, "init"));
    GainNet net = GainNet::create(g, rng);
    TrainConfig tc = cfg.stage1_config();
    tc.on_epoch = progress;
    TrainReport rep = train_stage1(model, ds, net, tc);
    write_train_report_csv(out / "train_stage1.csv", rep);
    save_checkpoint(out / "theta.akck", net);
    std::cout << train_report_summary(rep) << "\n";
    return rep.diverged ? 3 : 0;
  }
  LoadedNets nets = load_checkpoint(out / "theta.akck");
  const Dataset ds = load_dataset(out / "train.akds");
  Rng rng(derive_seed(cfg.seed, "init-psi"));
  HyperNet hyper = HyperNet::create(nets.gain_net, cfg.hyper_hidden, rng);
  TrainConfig tc = cfg.stage2_config();
  tc.on_epoch = progress;
  TrainReport rep = train_stage2(model, ds, nets.gain_net, hyper, tc);
  write_train_report_csv(out / "train_stage2.csv", rep);
  save_checkpoint(out / "checkpoint.akck", nets.gain_net, &hyper);
  std::cout << train_report_summary(rep) << "\n";
  return rep.diverged ? 3 : 0;
}

int cmd_evaluate(const Common& c, const std::string& source_name, std::string checkpoint) {
  ExperimentConfig cfg = resolve(c, "");
  const fs::path out(c.out);
  if (checkpoint.empty()) checkpoint = (out / "checkpoint.akck").string();
  if (!fs::exists(checkpoint)) {
    throw ContractViolation("no checkpoint at " + checkpoint + "; run `train --stage 2` first");
  }
  const SSModel model = load_model(out / "model.akm");
  const Dataset ds = load_dataset(out / "test.akds");
  LoadedNets nets = load_checkpoint(checkpoint);
  const SowSource source = parse_sow_source(source_name);
  EvalOptions opt;
  opt.sow_source = source;
  opt.corr.alpha = cfg.corr_alpha;
  if (cfg.experiment == "sow-jump") opt.from_step = cfg.jump_step;
  if (source == SowSource::kGrid) {
    const auto [lo, hi] = std::minmax_element(cfg.train_sows.begin(), cfg.train_sows.end());
    opt.grid = GridEstimator::log_spaced(*lo, *hi, cfg.grid_count, 0).grid;
  }
  const HyperNet* hyper = nets.hyper ? &*nets.hyper : nullptr;
  if (hyper == nullptr && source != SowSource::kOracle) {
    throw ContractViolation("checkpoint has no hypernetwork; estimated SoW needs stage 2");
  }
  EvalOptions kf_opt = opt;
  if (source == SowSource::kGrid) kf_opt.sow_source = SowSource::kOracle;
  ResultTable table;
  auto add = [&](const std::vector<GroupMse>& groups, const std::string& filter,
                 const std::string& src) {
    for (const auto& g : groups) {
      ResultRow r;
      r.experiment = cfg.experiment;
      r.panel = "eval";
      r.filter = filter;
      r.q2 = g.q2;
      r.r2 = g.r2;
      r.sow = g.sow;
      r.sow_source = src;
      r.mse_db = g.mse_db;
      r.std_db = g.std_db;
      r.count = g.count;
      r.per_trajectory = g.per_trajectory;
      table.rows.push_back(std::move(r));
    }
  };
  add(evaluate_kf(model, ds, kf_opt), kf_opt.sow_source == SowSource::kCorr ? "adaptive-KF" : "KF",
      sow_source_name(kf_opt.sow_source));
  add(evaluate(model, ds, nets.gain_net, hyper, opt), "AKNet", sow_source_name(source));
  table.validate();
  const std::string report = format_table(table);
  write_outputs(table, report, out);
  std::cout << report;
  return 0;
}

int cmd_experiment(const Common& c, const std::string& id) {
  ExperimentConfig cfg = resolve(c, id);
  std::cout << "running " << cfg.experiment << " (seed " << cfg.seed << ") into " << c.out
            << std::endl;
  ExperimentResult res = run_experiment(cfg, c.out);
  save_text(fs::path(c.out) / "config.txt", dump_config(cfg));
  std::cout << res.report;
  return 0;
}

std::string magic_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  char m[4] = {};
  in.read(m, 4);
  return in ? std::string(m, 4) : std::string();
}

int cmd_inspect(const std::string& file, const std::string& out) {
  const fs::path p(file);
  if (!fs::exists(p)) throw ContractViolation("no such file: " + file);
  const std::string magic = magic_of(p);
  if (magic == "AKCK") {
    LoadedNets nets = load_checkpoint(p);
    const auto& g = nets.gain_net.config();
    const ParamCount theta = param_count(nets.gain_net.params());
    std::cout << "gain network: m=" << g.state_dim << " n=" << g.obs_dim << " h=" << g.hidden
              << " features=" << feature_norm_name(g.norm) << "\n";
    for (const auto& [name, n] : theta.per_block) std::cout << "  " << name << "  " << n << "\n";
    std::cout << "theta total " << theta.total << "\n";
    if (nets.hyper) {
      const ParamCount psi = param_count(nets.hyper->params());
      for (const auto& [name, n] : psi.per_block) std::cout << "  " << name << "  " << n << "\n";
      std::cout << "psi total " << psi.total << " (" << std::fixed << std::setprecision(1)
                << 100.0 * static_cast<double>(psi.total) / static_cast<double>(theta.total)
                << "% of theta)\n";
    }
    return 0;
  }
  if (magic == "AKDS") {
    const Dataset ds = load_dataset(p);
    std::cout << "dataset: " << ds.size() << " trajectories, T=" << ds.length()
              << ", m=" << ds.state_dim() << ", n=" << ds.obs_dim()
              << ", noise=" << noise_family_name(ds.family)
              << ", split=" << (ds.split == SplitTag::kPseudoStationary ? "stationary" : "full")
              << "\n";
    std::map<std::pair<double, double>, std::size_t> groups;
    for (const auto& t : ds.trajectories) ++groups[{t.q2.back(), t.r2.back()}];
    for (const auto& [k, n] : groups) {
      std::cout << "  q2=" << k.first << " r2=" << k.second << "  " << n << "\n";
    }
    return 0;
  }
  if (magic == "AKMD") {
    const SSModel m = load_model(p);
    const Eigen::IOFormat f(6, 0, ", ", "\n", "    [", "]");
    std::cout << "F =\n" << m.F.format(f) << "\nH =\n" << m.H.format(f) << "\nQ0 =\n"
              << m.Q0.format(f) << "\nR0 =\n" << m.R0.format(f) << "\nbase SoW "
              << sow(m.Q0, m.R0) << "\n";
    return 0;
  }
  if (p.extension() == ".csv") {
    ResultTable table = read_results_csv(p);
    std::cout << format_table(table);
    const fs::path dir = out.empty() ? p.parent_path() : fs::path(out);
    if (!dir.empty()) fs::create_directories(dir);
    for (const auto& f : plot_results(table, dir.empty() ? fs::path(".") : dir)) {
      std::cout << "wrote " << f.string() << "\n";
    }
    return 0;
  }
  throw FormatError(file + " is not a checkpoint, dataset, model or results table");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive KalmanNet: data generation, training, evaluation and experiments"};
  app.require_subcommand(1);

  Common common;
  std::string experiment_id;

  auto* gen = app.add_subcommand("generate", "simulate model, training and test datasets");
  add_common(gen, common);
  gen->add_option("--experiment", experiment_id, "experiment whose protocol to generate");

  int stage = 1;
  auto* train = app.add_subcommand("train", "run one training stage on a generated work dir");
  add_common(train, common);
  train->add_option("--stage", stage, "1: gain network, 2: hypernetwork")
      ->required()
      ->check(CLI::IsMember({1, 2}));

  std::string source = "oracle";
  std::string checkpoint;
  auto* eval = app.add_subcommand("evaluate", "MSE table on the work dir test set");
  add_common(eval, common);
  eval->add_option("--sow-source", source, "oracle | corr | grid")
      ->check(CLI::IsMember({"oracle", "corr", "grid"}));
  eval->add_option("--checkpoint", checkpoint, "defaults to <out>/checkpoint.akck");

  auto* exp = app.add_subcommand("experiment", "train and evaluate one protocol end to end");
  add_common(exp, common);
  exp->add_option("id", experiment_id, "gaussian-grid | exponential-grid | sow-jump")
      ->required()
      ->check(CLI::IsMember({"gaussian-grid", "exponential-grid", "sow-jump"}));

  std::string file;
  std::string inspect_out;
  auto* insp = app.add_subcommand("inspect", "describe a checkpoint, dataset, model or results");
  insp->add_option("file", file, "file to inspect")->required();
  insp->add_option("--out", inspect_out, "where to re-render plots from a results CSV");

  auto* schema = app.add_subcommand("config-keys", "list config keys and defaults");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(common, experiment_id);
    if (train->parsed()) return cmd_train(common, stage);
    if (eval->parsed()) return cmd_evaluate(common, source, checkpoint);
    if (exp->parsed()) return cmd_experiment(common, experiment_id);
    if (insp->parsed()) return cmd_inspect(file, inspect_out);
    if (schema->parsed()) {
      std::cout << describe_config();
      return 0;
    }
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
