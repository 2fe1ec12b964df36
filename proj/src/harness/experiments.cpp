#include "aknet/harness/experiments.hpp"

#include "aknet/errors.hpp"
#include "aknet/harness/svg_plot.hpp"
#include "aknet/kgain/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace aknet {

namespace {

std::string key_of(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

ResultRow make_row(const std::string& experiment, const std::string& panel,
                   const std::string& filter, const std::string& source, const GroupMse& g) {
  ResultRow r;
  r.experiment = experiment;
  r.panel = panel;
  r.filter = filter;
  r.q2 = g.q2;
  r.r2 = g.r2;
  r.sow = g.sow;
  r.sow_source = source;
  r.mse_db = g.mse_db;
  r.std_db = g.std_db;
  r.count = g.count;
  r.per_trajectory = g.per_trajectory;
  return r;
}

void append(ResultTable& table, std::vector<ResultRow> rows) {
  for (auto& r : rows) table.rows.push_back(std::move(r));
}

}  // namespace

SSModel make_model(const ExperimentConfig& cfg) {
  const Index m = cfg.state_dim;
  const Index n = cfg.obs_dim;
  SSModel model;
  model.F = rotation_decay(m, cfg.f_radius, cfg.f_angle);
  model.H = Matrix::Identity(n, m);
  if (cfg.family() == NoiseFamily::kGaussian) {
    Rng rng(derive_seed(cfg.seed, "model"));
    Matrix q = random_spd(m, rng);
    Matrix r = random_spd(n, rng);
    model.Q0 = q * (static_cast<double>(m) / q.trace());
    model.R0 = r * (static_cast<double>(n) / r.trace());
  } else {
    model.Q0 = Matrix::Identity(m, m);
    model.R0 = Matrix::Identity(n, n);
  }
  model.validate();
  return model;
}

std::pair<double, double> pair_for_sow(const SSModel& model, double target) {
  if (!(target > 0.0)) throw ContractViolation("pair_for_sow: SoW must be positive");
  const double ratio = target / sow(model.Q0, model.R0);
  return {std::sqrt(ratio), 1.0 / std::sqrt(ratio)};
}

Dataset make_dataset(const SSModel& model, const std::vector<std::pair<double, double>>& pairs,
                     std::size_t count, std::size_t length, NoiseFamily family, SplitTag split,
                     std::uint64_t seed, const std::string& key) {
  Dataset ds;
  ds.family = family;
  ds.split = split;
  const Vector x0 = Vector::Zero(model.state_dim());
  for (const auto& [q2, r2] : pairs) {
    Rng rng(derive_seed(seed, key + "/" + key_of(q2) + "/" + key_of(r2)));
    const auto schedule = NoiseSchedule::constant(q2, r2, length, family);
    for (std::size_t i = 0; i < count; ++i) {
      ds.trajectories.push_back(generate(model, schedule, length, x0, rng));
    }
  }
  return ds;
}

TrainingData make_training_data(const ExperimentConfig& cfg, const SSModel& model) {
  std::vector<std::pair<double, double>> pairs;
  for (double s : cfg.train_sows) pairs.push_back(pair_for_sow(model, s));
  TrainingData d;
  d.stationary = make_dataset(model, {{1.0, 1.0}}, cfg.stationary_count, cfg.length,
                              cfg.family(), SplitTag::kPseudoStationary, cfg.seed, "stationary");
  d.full = make_dataset(model, pairs, cfg.train_per_pair, cfg.length, cfg.family(),
                        SplitTag::kFull, cfg.seed, "train");
  return d;
}

NoiseSchedule jump_schedule(const ExperimentConfig& cfg, double r2_after) {
  NoiseSchedule s = NoiseSchedule::jump(cfg.q2_before, cfg.r2_before, cfg.q2_after, r2_after,
                                        cfg.jump_step, cfg.jump_length, cfg.family());
  if (cfg.jump_every > 0) {
    for (std::size_t t = cfg.jump_step; t < cfg.jump_length; ++t) {
      const bool after = ((t - cfg.jump_step) / cfg.jump_every) % 2 == 0;
      s.q2[t] = after ? cfg.q2_after : cfg.q2_before;
      s.r2[t] = after ? r2_after : cfg.r2_before;
    }
  }
  return s;
}

Dataset make_jump_dataset(const ExperimentConfig& cfg, const SSModel& model, double r2_after) {
  Dataset ds;
  ds.family = cfg.family();
  ds.split = SplitTag::kFull;
  const auto schedule = jump_schedule(cfg, r2_after);
  Rng rng(derive_seed(cfg.seed, "jump/" + key_of(r2_after)));
  const Vector x0 = Vector::Zero(model.state_dim());
  for (std::size_t i = 0; i < cfg.test_per_point; ++i) {
    ds.trajectories.push_back(generate(model, schedule, cfg.jump_length, x0, rng));
  }
  return ds;
}

std::vector<double> test_ratios(const ExperimentConfig& cfg) {
  const auto [lo_it, hi_it] = std::minmax_element(cfg.train_sows.begin(), cfg.train_sows.end());
  const double lo = std::log10(*lo_it);
  const double hi = std::log10(*hi_it);
  std::vector<double> out;
  const std::size_t k = cfg.test_ratio_count;
  for (std::size_t i = 0; i < k; ++i) {
    const double t = k == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(k - 1);
    out.push_back(std::pow(10.0, lo + t * (hi - lo)));
  }
  return out;
}

TrainedNets obtain_networks(const ExperimentConfig& cfg, const SSModel& model,
                            const std::filesystem::path& out_dir) {
  if (!cfg.checkpoint.empty() && std::filesystem::exists(cfg.checkpoint)) {
    LoadedNets nets = load_checkpoint(cfg.checkpoint);
    if (!nets.hyper) {
      throw FormatError("checkpoint '" + cfg.checkpoint + "' holds no hypernetwork; run stage 2");
    }
    if (nets.gain_net.config().state_dim != model.state_dim() ||
        nets.gain_net.config().obs_dim != model.obs_dim()) {
      throw FormatError("checkpoint '" + cfg.checkpoint + "' does not match the model size");
    }
    return TrainedNets{std::move(nets.gain_net), std::move(*nets.hyper), {}, {}, true};
  }
  if (!cfg.train) {
    throw ContractViolation("no checkpoint at '" + cfg.checkpoint +
                            "' and training is disabled; set train = true or point checkpoint "
                            "at a file written by a previous run");
  }
  const TrainingData data = make_training_data(cfg, model);
  GainNetConfig gcfg;
  gcfg.state_dim = cfg.state_dim;
  gcfg.obs_dim = cfg.obs_dim;
  gcfg.hidden = cfg.hidden_size();
  gcfg.norm = cfg.norm;
  gcfg.rms_decay = cfg.rms_decay;
  Rng rng(derive_seed(cfg.seed, "init"));
  GainNet gain_net = GainNet::create(gcfg, rng);
  HyperNet hyper = HyperNet::create(gain_net, cfg.hyper_hidden, rng);
  TrainReport r1 = train_stage1(model, data.stationary, gain_net, cfg.stage1_config());
  TrainReport r2 = train_stage2(model, data.full, gain_net, hyper, cfg.stage2_config());
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_train_report_csv(out_dir / "train_stage1.csv", r1);
    write_train_report_csv(out_dir / "train_stage2.csv", r2);
    save_checkpoint(out_dir / "checkpoint.akck", gain_net, &hyper);
  }
  return TrainedNets{std::move(gain_net), std::move(hyper), std::move(r1), std::move(r2), false};
}

ResultTable evaluate_grid(const ExperimentConfig& cfg, const SSModel& model,
                          const GainNet& gain_net, const HyperNet& hyper) {
  ResultTable table;
  EvalOptions opt;
  opt.corr.alpha = cfg.corr_alpha;
  auto run_point = [&](const std::string& panel, double q2, double r2) {
    Dataset ds = make_dataset(model, {{q2, r2}}, cfg.test_per_point, cfg.length, cfg.family(),
                              SplitTag::kFull, cfg.seed, "test/" + panel);
    auto kf = evaluate_kf(model, ds, opt);
    auto ak = evaluate(model, ds, gain_net, &hyper, opt);
    table.rows.push_back(make_row(cfg.experiment, panel, "KF", "oracle", kf.front()));
    table.rows.push_back(make_row(cfg.experiment, panel, "AKNet", "oracle", ak.front()));
  };
  std::vector<double> scales{1.0};
  for (double c : cfg.scales) {
    if (c != 1.0) scales.push_back(c);
  }
  for (double s : cfg.train_sows) {
    const auto [q2, r2] = pair_for_sow(model, s);
    for (double c : scales) run_point("scaling", c * q2, c * r2);
  }
  for (double s : test_ratios(cfg)) {
    const auto [q2, r2] = pair_for_sow(model, s);
    run_point("ratio", q2, r2);
  }
  table.validate();
  return table;
}

ResultTable evaluate_jump(const ExperimentConfig& cfg, const SSModel& model,
                          const GainNet& gain_net, const HyperNet& hyper) {
  ResultTable table;
  EvalOptions oracle;
  oracle.from_step = cfg.jump_step;
  EvalOptions corr = oracle;
  corr.sow_source = SowSource::kCorr;
  corr.corr.alpha = cfg.corr_alpha;
  oracle.corr.alpha = cfg.corr_alpha;
  for (double r2 : cfg.r2_after) {
    Dataset ds = make_jump_dataset(cfg, model, r2);
    std::vector<ResultRow> rows{
        make_row(cfg.experiment, "jump", "KF", "oracle", evaluate_kf(model, ds, oracle).front()),
        make_row(cfg.experiment, "jump", "adaptive-KF", "corr",
                 evaluate_kf(model, ds, corr).front()),
        make_row(cfg.experiment, "jump", "AKNet", "oracle",
                 evaluate(model, ds, gain_net, &hyper, oracle).front()),
        make_row(cfg.experiment, "jump", "AKNet", "corr",
                 evaluate(model, ds, gain_net, &hyper, corr).front()),
    };
    for (auto& r : rows) {
      r.q2 = cfg.q2_after;
      r.r2 = r2;
      r.sow = sow(cfg.q2_after * model.Q0, r2 * model.R0);
    }
    append(table, std::move(rows));
  }
  table.validate();
  return table;
}

std::string grid_report(const ResultTable& table) {
  std::ostringstream os;
  os << std::fixed;
  os << "panel    q2          r2          sow         KF[dB]   AKNet[dB]  gap[dB]\n";
  for (const auto& r : table.rows) {
    if (r.filter != "KF") continue;
    const ResultRow* a = table.find(r.panel, "AKNet", "oracle", r.q2, r.r2);
    if (a == nullptr) continue;
    os << std::left << std::setw(9) << r.panel << std::right << std::setprecision(5)
       << std::setw(10) << r.q2 << "  " << std::setw(10) << r.r2 << "  " << std::setw(10)
       << r.sow << "  " << std::setprecision(3) << std::setw(7) << r.mse_db << "  "
       << std::setw(9) << a->mse_db << "  " << std::setw(7) << a->mse_db - r.mse_db << '\n';
  }
  return os.str();
}

std::string jump_report(const ResultTable& table) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "post-jump MSE [dB]\n";
  os << "r2_after   KF(oracle)  adaptive-KF  AKNet(corr)  AKNet(oracle)\n";
  for (const auto& r : table.rows) {
    if (r.filter != "KF") continue;
    const ResultRow* akf = table.find("jump", "adaptive-KF", "corr", r.q2, r.r2);
    const ResultRow* ac = table.find("jump", "AKNet", "corr", r.q2, r.r2);
    const ResultRow* ao = table.find("jump", "AKNet", "oracle", r.q2, r.r2);
    if (!akf || !ac || !ao) continue;
    os << std::setw(8) << r.r2 << "  " << std::setw(10) << r.mse_db << "  " << std::setw(11)
       << akf->mse_db << "  " << std::setw(11) << ac->mse_db << "  " << std::setw(13)
       << ao->mse_db << '\n';
  }
  return os.str();
}

std::vector<std::filesystem::path> write_outputs(const ResultTable& table,
                                                 const std::string& report,
                                                 const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  std::vector<std::filesystem::path> files{out / "results.csv", out / "errors.csv",
                                           out / "report.txt"};
  write_results_csv(files[0], table);
  write_errors_csv(files[1], table);
  {
    std::ofstream os(files[2]);
    if (!os) throw FormatError("cannot write " + files[2].string());
    os << report;
  }
  // plots come from the CSV alone
  for (auto& p : plot_results(read_results_csv(files[0]), out)) files.push_back(p);
  return files;
}

namespace {

ExperimentResult run_grid(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  const SSModel model = make_model(cfg);
  TrainedNets nets = obtain_networks(cfg, model, out);
  ExperimentResult res;
  res.table = evaluate_grid(cfg, model, nets.gain_net, nets.hyper);
  std::ostringstream os;
  os << "experiment " << cfg.experiment << " seed " << cfg.seed << "\n";
  if (nets.stage1) os << train_report_summary(*nets.stage1) << "\n";
  if (nets.stage2) os << train_report_summary(*nets.stage2) << "\n";
  if (nets.loaded) os << "networks loaded from " << cfg.checkpoint << "\n";
  os << grid_report(res.table);
  res.report = os.str();
  res.files = write_outputs(res.table, res.report, out);
  return res;
}

}  // namespace

ExperimentResult run_gaussian_grid(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  if (cfg.family() != NoiseFamily::kGaussian) {
    throw ContractViolation("gaussian-grid needs noise = gaussian");
  }
  return run_grid(cfg, out);
}

ExperimentResult run_exponential_grid(const ExperimentConfig& cfg,
                                      const std::filesystem::path& out) {
  if (cfg.family() != NoiseFamily::kExponential) {
    throw ContractViolation("exponential-grid needs noise = exponential");
  }
  return run_grid(cfg, out);
}

ExperimentResult run_sow_jump(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  const SSModel model = make_model(cfg);
  TrainedNets nets = obtain_networks(cfg, model, out);
  ExperimentResult res;
  res.table = evaluate_jump(cfg, model, nets.gain_net, nets.hyper);
  std::ostringstream os;
  os << "experiment " << cfg.experiment << " seed " << cfg.seed << "\n";
  if (nets.stage1) os << train_report_summary(*nets.stage1) << "\n";
  if (nets.stage2) os << train_report_summary(*nets.stage2) << "\n";
  if (nets.loaded) os << "networks loaded from " << cfg.checkpoint << "\n";
  os << jump_report(res.table);
  res.report = os.str();
  res.files = write_outputs(res.table, res.report, out);
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  if (cfg.experiment == "gaussian-grid") return run_gaussian_grid(cfg, out);
  if (cfg.experiment == "exponential-grid") return run_exponential_grid(cfg, out);
  if (cfg.experiment == "sow-jump") return run_sow_jump(cfg, out);
  throw ContractViolation("unknown experiment '" + cfg.experiment + "'");
}

}  // namespace aknet
