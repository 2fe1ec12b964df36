#pragma once

#include "aknet/estimator/corr_estimator.hpp"
#include "aknet/hypercm/hyper_net.hpp"
#include "aknet/kgain/gain_net.hpp"
#include "aknet/ssm/model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace aknet {

enum class Stage : std::uint8_t { kStage1 = 1, kStage2 = 2 };

struct EpochRecord {
  std::size_t epoch = 0;  // 0 is the pre-training evaluation
  double train_loss = 0.0;
  double val_loss = 0.0;
  double l2_penalty = 0.0;
};

struct TrainConfig {
  Stage stage = Stage::kStage1;
  std::size_t epochs = 150;
  std::size_t batch_size = 10;
  double step_size = 3e-3;
  double l2_weight = 0.0;
  std::size_t patience = 20;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;
  std::function<void(const EpochRecord&)> on_epoch;

  void validate() const;
};

struct TrainReport {
  Stage stage = Stage::kStage1;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double final_val_loss = 0.0;
  double wall_seconds = 0.0;
  bool diverged = false;
  bool early_stopped = false;
  std::string note;
};

double to_db(double mse);

// Mean over trajectories and steps of |x_t - x_hat_t|^2 (no regularization).
// hyper == nullptr runs the gain network without modulation.
double loss(const SSModel& model, const GainNet& gain_net, const HyperNet* hyper,
            const Dataset& dataset, std::span<const std::size_t> indices);
double loss(const SSModel& model, const GainNet& gain_net, const HyperNet* hyper,
            const Dataset& dataset);

// Splits indices so each (q2, r2) schedule group contributes about
// `fraction` of its members (at least one when the group has two or more)
// to validation.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
Split stratified_split(const Dataset& dataset, double fraction, std::uint64_t seed);

// Trains theta on a pseudo-stationary dataset with modulation disabled.
// Best-validation parameters are restored on return. A non-finite loss or
// gradient stops training (diverged = true) at the best finite checkpoint.
TrainReport train_stage1(const SSModel& model, const Dataset& stationary, GainNet& gain_net,
                         const TrainConfig& config);

// Trains psi against the full dataset with theta entering the graph as
// constants; gain_net is never written.
TrainReport train_stage2(const SSModel& model, const Dataset& full, const GainNet& gain_net,
                         HyperNet& hyper, const TrainConfig& config);

void write_train_report_csv(const std::filesystem::path& path, const TrainReport& report);
std::string train_report_summary(const TrainReport& report);

enum class SowSource : std::uint8_t { kOracle, kCorr, kGrid };
const char* sow_source_name(SowSource source);
SowSource parse_sow_source(const std::string& name);

struct EvalOptions {
  SowSource sow_source = SowSource::kOracle;
  CorrEstimatorConfig corr;
  std::vector<double> grid;   // candidates for kGrid
  std::size_t from_step = 0;  // first step included in the error average
  std::size_t batch_size = 256;
};

struct GroupMse {
  double q2 = 0.0;  // scales at the last step of the group's schedule
  double r2 = 0.0;
  double sow = 0.0;
  std::size_t count = 0;
  double mse = 0.0;
  double mse_db = 0.0;
  double std_db = 0.0;  // std-dev of per-trajectory MSE in dB
  std::vector<double> per_trajectory;
};

// Per-trajectory mean squared error over steps [from_step, T).
double trajectory_mse(const Trajectory& tr, const Matrix& estimates, std::size_t from_step);

// AKNet errors grouped by (q2, r2) schedule.
std::vector<GroupMse> evaluate(const SSModel& model, const Dataset& dataset,
                               const GainNet& gain_net, const HyperNet* hyper,
                               const EvalOptions& options);

// Classical KF (true noise for kOracle) or adaptive KF (kCorr) on the same groups.
std::vector<GroupMse> evaluate_kf(const SSModel& model, const Dataset& dataset,
                                  const EvalOptions& options);

}  // namespace aknet
