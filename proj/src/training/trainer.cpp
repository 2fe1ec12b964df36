#include "aknet/training/trainer.hpp"

#include "aknet/errors.hpp"
#include "aknet/estimator/adaptive_aknet.hpp"
#include "aknet/estimator/grid_search.hpp"
#include "aknet/filter/aknet_filter.hpp"
#include "aknet/kf/kalman_filter.hpp"
#include "aknet/numerics/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

namespace aknet {

namespace {

using GroupKey = std::tuple<double, double, double, double>;

GroupKey group_key(const Trajectory& tr) {
  return {tr.q2.front(), tr.r2.front(), tr.q2.back(), tr.r2.back()};
}

// Trajectory indices grouped by noise schedule, in order of first appearance.
std::vector<std::vector<std::size_t>> group_indices(const Dataset& ds) {
  std::map<GroupKey, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Trajectory& tr = ds.trajectories[i];
    if (tr.q2.empty() || tr.r2.empty()) throw ContractViolation("trajectory has no noise schedule");
    auto [it, inserted] = slot.try_emplace(group_key(tr), groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

std::vector<const Trajectory*> pick(const Dataset& ds, std::span<const std::size_t> idx) {
  std::vector<const Trajectory*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    if (i >= ds.size()) throw ContractViolation("trajectory index out of range");
    out.push_back(&ds.trajectories[i]);
  }
  return out;
}

// Mean squared state error over one minibatch, recorded through the whole recursion.
Var minibatch_loss(Tape& tape, FilterGraph& graph, const SSModel& model, Index hidden,
                   std::span<const Trajectory* const> batch) {
  const auto rows = static_cast<Index>(batch.size());
  const Index m = model.state_dim();
  const Index n = model.obs_dim();
  const std::size_t T = batch.front()->length();
  Matrix x0(rows, m);
  for (Index i = 0; i < rows; ++i) {
    const Trajectory& tr = *batch[static_cast<std::size_t>(i)];
    if (tr.length() != T) throw ContractViolation("loss: trajectories differ in length");
    x0.row(i) = tr.x0.transpose();
  }
  auto state = graph.load(BatchStateValues::initial(x0, hidden));
  Matrix y(rows, n);
  Matrix x(rows, m);
  std::vector<double> sow(batch.size());
  Var total;
  for (std::size_t t = 0; t < T; ++t) {
    const auto tt = static_cast<Index>(t);
    for (Index i = 0; i < rows; ++i) {
      const auto k = static_cast<std::size_t>(i);
      y.row(i) = batch[k]->observations.row(tt);
      x.row(i) = batch[k]->states.row(tt);
      sow[k] = batch[k]->sow[t];
    }
    auto out = graph.step(state, tape.constant(y), sow);
    Var err = tape.sum(tape.row_sq_sum(tape.sub(out.x_post, tape.constant(x))));
    total = total.valid() ? tape.add(total, err) : err;
    state = out.next;
  }
  return tape.scale(total, 1.0 / (static_cast<double>(rows) * static_cast<double>(T)));
}

double sum_squares(std::span<const double> v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

struct StageSetup {
  const SSModel& model;
  const Dataset& data;
  const GainNet& gain_net;
  const HyperNet* hyper;
  ParamStore& trainable;
  FilterGraph::Options options;
};

TrainReport run_training(const StageSetup& s, const TrainConfig& config) {
  config.validate();
  s.data.validate();
  if (s.data.state_dim() != s.model.state_dim() || s.data.obs_dim() != s.model.obs_dim()) {
    throw ContractViolation("train: dataset dimensions do not match the model");
  }
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.stage = config.stage;

  Split split = stratified_split(s.data, config.validation_fraction, config.seed);
  if (split.validation.empty()) split.validation = split.train;
  const Index hidden = s.gain_net.config().hidden;
  const double l2 = config.l2_weight;

  auto penalty = [&] { return l2 * sum_squares(s.trainable.values()); };

  EpochRecord first;
  first.train_loss = loss(s.model, s.gain_net, s.hyper, s.data, split.train);
  first.val_loss = loss(s.model, s.gain_net, s.hyper, s.data, split.validation);
  first.l2_penalty = penalty();
  report.epochs.push_back(first);
  if (config.on_epoch) config.on_epoch(first);

  std::vector<double> best(s.trainable.values().begin(), s.trainable.values().end());
  report.best_val_loss = std::isfinite(first.val_loss) ? first.val_loss
                                                       : std::numeric_limits<double>::infinity();
  report.best_epoch = 0;

  AdamOptimizer opt(s.trainable, AdamConfig{config.step_size, 0.9, 0.999, 1e-8});
  Rng rng(derive_seed(config.seed, "minibatch-order"));
  std::vector<std::size_t> order = split.train;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < order.size() && !report.diverged; b += config.batch_size) {
      const std::size_t e = std::min(order.size(), b + config.batch_size);
      auto batch = pick(s.data, std::span<const std::size_t>(order).subspan(b, e - b));
      Tape tape;
      FilterGraph graph(tape, s.model, s.gain_net, s.hyper, s.options);
      Var l = minibatch_loss(tape, graph, s.model, hidden, batch);
      const double value = tape.value(l)(0, 0);
      if (!std::isfinite(value)) {
        report.diverged = true;
        report.note = "non-finite training loss at epoch " + std::to_string(epoch);
        break;
      }
      std::vector<double> g = tape.grad(l, s.trainable);
      if (l2 > 0.0) {
        auto p = s.trainable.values();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * l2 * p[i];
      }
      try {
        opt.step(s.trainable, g);
      } catch (const NumericalError& err) {
        report.diverged = true;
        report.note = std::string(err.what()) + " at epoch " + std::to_string(epoch);
        break;
      }
      weighted += value * static_cast<double>(batch.size());
      seen += batch.size();
    }
    if (report.diverged) break;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = weighted / static_cast<double>(std::max<std::size_t>(seen, 1));
    rec.val_loss = loss(s.model, s.gain_net, s.hyper, s.data, split.validation);
    rec.l2_penalty = penalty();
    report.epochs.push_back(rec);
    if (config.on_epoch) config.on_epoch(rec);
    if (!std::isfinite(rec.val_loss)) {
      report.diverged = true;
      report.note = "non-finite validation loss at epoch " + std::to_string(epoch);
      break;
    }
    if (rec.val_loss < report.best_val_loss) {
      report.best_val_loss = rec.val_loss;
      report.best_epoch = epoch;
      std::copy(s.trainable.values().begin(), s.trainable.values().end(), best.begin());
    } else if (epoch - report.best_epoch >= config.patience) {
      report.early_stopped = true;
      break;
    }
  }

  std::copy(best.begin(), best.end(), s.trainable.values().begin());
  report.final_val_loss = report.epochs.back().val_loss;
  if (!std::isfinite(report.final_val_loss)) report.final_val_loss = report.best_val_loss;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double stdev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

std::vector<GroupMse> summarize(const Dataset& ds,
                                const std::vector<std::vector<std::size_t>>& groups,
                                const std::vector<double>& per_traj) {
  std::vector<GroupMse> out;
  for (const auto& g : groups) {
    const Trajectory& tr = ds.trajectories[g.front()];
    GroupMse row;
    row.q2 = tr.q2.back();
    row.r2 = tr.r2.back();
    row.sow = tr.sow.back();
    row.count = g.size();
    std::vector<double> db;
    for (std::size_t i : g) {
      row.per_trajectory.push_back(per_traj[i]);
      db.push_back(to_db(per_traj[i]));
    }
    row.mse = std::accumulate(row.per_trajectory.begin(), row.per_trajectory.end(), 0.0) /
              static_cast<double>(g.size());
    row.mse_db = to_db(row.mse);
    row.std_db = stdev(db);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ContractViolation("TrainConfig: batch size must be positive");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw ContractViolation("TrainConfig: step size must be positive");
  }
  if (!(l2_weight >= 0.0)) throw ContractViolation("TrainConfig: L2 weight must be >= 0");
  if (patience == 0) throw ContractViolation("TrainConfig: patience must be positive");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ContractViolation("TrainConfig: validation fraction must lie in [0, 1)");
  }
}

double to_db(double mse) { return 10.0 * std::log10(mse); }

double loss(const SSModel& model, const GainNet& gain_net, const HyperNet* hyper,
            const Dataset& dataset, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ContractViolation("loss: empty batch");
  auto batch = pick(dataset, indices);
  std::vector<const std::vector<double>*> sows;
  if (hyper != nullptr) {
    for (const Trajectory* tr : batch) sows.push_back(&tr->sow);
  }
  auto est = aknet_filter(model, gain_net, hyper, batch, sows);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) total += trajectory_mse(*batch[i], est[i], 0);
  return total / static_cast<double>(batch.size());
}

double loss(const SSModel& model, const GainNet& gain_net, const HyperNet* hyper,
            const Dataset& dataset) {
  std::vector<std::size_t> all(dataset.size());
  std::iota(all.begin(), all.end(), 0);
  return loss(model, gain_net, hyper, dataset, all);
}

Split stratified_split(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ContractViolation("stratified_split: fraction must lie in [0, 1)");
  }
  Split out;
  Rng rng(derive_seed(seed, "validation-split"));
  for (auto g : group_indices(dataset)) {
    std::shuffle(g.begin(), g.end(), rng);
    std::size_t nval = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(g.size())));
    if (fraction > 0.0 && g.size() >= 2) nval = std::clamp<std::size_t>(nval, 1, g.size() - 1);
    if (g.size() < 2) nval = 0;
    out.validation.insert(out.validation.end(), g.begin(), g.begin() + static_cast<long>(nval));
    out.train.insert(out.train.end(), g.begin() + static_cast<long>(nval), g.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  return out;
}

TrainReport train_stage1(const SSModel& model, const Dataset& stationary, GainNet& gain_net,
                         const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.stage = Stage::kStage1;
  StageSetup setup{model, stationary, gain_net, nullptr, gain_net.params(), {true, false}};
  return run_training(setup, cfg);
}

TrainReport train_stage2(const SSModel& model, const Dataset& full, const GainNet& gain_net,
                         HyperNet& hyper, const TrainConfig& config) {
  if (hyper.config().output_dim != gain_net.cm_width()) {
    throw ContractViolation("train_stage2: hypernetwork does not match the gain network");
  }
  TrainConfig cfg = config;
  cfg.stage = Stage::kStage2;
  StageSetup setup{model, full, gain_net, &hyper, hyper.params(), {false, true}};
  return run_training(setup, cfg);
}

void write_train_report_csv(const std::filesystem::path& path, const TrainReport& report) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << "epoch,train_loss_db,val_loss_db,l2_penalty\n";
  os << std::setprecision(10);
  for (const auto& e : report.epochs) {
    os << e.epoch << ',' << to_db(e.train_loss) << ',' << to_db(e.val_loss) << ','
       << e.l2_penalty << '\n';
  }
}

std::string train_report_summary(const TrainReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "stage " << static_cast<int>(report.stage) << ": " << (report.epochs.size() - 1)
     << " epochs, best epoch " << report.best_epoch << " val " << to_db(report.best_val_loss)
     << " dB, final val " << to_db(report.final_val_loss) << " dB, " << std::setprecision(1)
     << report.wall_seconds << " s";
  if (report.early_stopped) os << ", early stop";
  if (report.diverged) os << ", diverged (" << report.note << ")";
  return os.str();
}

const char* sow_source_name(SowSource source) {
  switch (source) {
    case SowSource::kOracle: return "oracle";
    case SowSource::kCorr: return "corr";
    case SowSource::kGrid: return "grid";
  }
  return "?";
}

SowSource parse_sow_source(const std::string& name) {
  if (name == "oracle") return SowSource::kOracle;
  if (name == "corr" || name == "estimator") return SowSource::kCorr;
  if (name == "grid") return SowSource::kGrid;
  throw ContractViolation("unknown SoW source '" + name + "'");
}

double trajectory_mse(const Trajectory& tr, const Matrix& estimates, std::size_t from_step) {
  const std::size_t T = tr.length();
  if (estimates.rows() != tr.states.rows() || estimates.cols() != tr.states.cols()) {
    throw ContractViolation("trajectory_mse: estimate shape " + shape_string(estimates) +
                            " vs states " + shape_string(tr.states));
  }
  if (from_step >= T) throw ContractViolation("trajectory_mse: empty error window");
  const auto start = static_cast<Index>(from_step);
  const auto len = static_cast<Index>(T - from_step);
  return (tr.states.middleRows(start, len) - estimates.middleRows(start, len)).squaredNorm() /
         static_cast<double>(len);
}

std::vector<GroupMse> evaluate(const SSModel& model, const Dataset& dataset,
                               const GainNet& gain_net, const HyperNet* hyper,
                               const EvalOptions& options) {
  dataset.validate();
  if (options.batch_size == 0) throw ContractViolation("evaluate: batch size must be positive");
  if (options.sow_source != SowSource::kOracle && hyper == nullptr) {
    throw ContractViolation("evaluate: estimated SoW needs a hypernetwork");
  }
  const auto groups = group_indices(dataset);
  std::vector<double> per(dataset.size());
  const Matrix P0 = Matrix::Zero(model.state_dim(), model.state_dim());
  const std::size_t T = dataset.length();

  for (std::size_t b = 0; b < dataset.size(); b += options.batch_size) {
    const std::size_t e = std::min(dataset.size(), b + options.batch_size);
    std::vector<const Trajectory*> batch;
    for (std::size_t i = b; i < e; ++i) batch.push_back(&dataset.trajectories[i]);
    std::vector<Matrix> est;
    switch (options.sow_source) {
      case SowSource::kOracle: {
        std::vector<const std::vector<double>*> sows;
        if (hyper != nullptr) {
          for (const Trajectory* tr : batch) sows.push_back(&tr->sow);
        }
        est = aknet_filter(model, gain_net, hyper, batch, sows);
        break;
      }
      case SowSource::kCorr:
        est = adaptive_aknet_run(model, gain_net, *hyper, batch, options.corr, P0).estimates;
        break;
      case SowSource::kGrid: {
        if (options.grid.empty()) throw ContractViolation("evaluate: empty SoW grid");
        std::vector<std::vector<double>> chosen;
        for (const Trajectory* tr : batch) {
          const double s = grid_search_sow(model, tr->observations, gain_net, *hyper,
                                           options.grid, tr->x0);
          chosen.emplace_back(T, s);
        }
        std::vector<const std::vector<double>*> sows;
        for (const auto& c : chosen) sows.push_back(&c);
        est = aknet_filter(model, gain_net, hyper, batch, sows);
        break;
      }
    }
    for (std::size_t i = b; i < e; ++i) {
      per[i] = trajectory_mse(dataset.trajectories[i], est[i - b], options.from_step);
    }
  }
  return summarize(dataset, groups, per);
}

std::vector<GroupMse> evaluate_kf(const SSModel& model, const Dataset& dataset,
                                  const EvalOptions& options) {
  dataset.validate();
  const auto groups = group_indices(dataset);
  std::vector<double> per(dataset.size());
  const Matrix P0 = Matrix::Zero(model.state_dim(), model.state_dim());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Trajectory& tr = dataset.trajectories[i];
    Matrix est;
    switch (options.sow_source) {
      case SowSource::kOracle:
        est = kf_run_scaled(model, tr.q2, tr.r2, tr.observations, tr.x0, P0).estimates;
        break;
      case SowSource::kCorr: {
        CorrEstimator estimator(model, options.corr);
        est = adaptive_kf_run(model, tr.observations, estimator, tr.x0, P0).run.estimates;
        break;
      }
      case SowSource::kGrid:
        throw UnsupportedConfiguration("evaluate_kf: grid SoW applies to AKNet only");
    }
    per[i] = trajectory_mse(tr, est, options.from_step);
  }
  return summarize(dataset, groups, per);
}

}  // namespace aknet
