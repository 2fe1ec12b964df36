#pragma once

#include "aknet/harness/config.hpp"
#include "aknet/harness/results.hpp"
#include "aknet/hypercm/hyper_net.hpp"
#include "aknet/kgain/gain_net.hpp"
#include "aknet/training/trainer.hpp"

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

namespace aknet {

// F: rotation-decay, H: I. Gaussian models draw random SPD Q0, R0 rescaled to
// traces m and n (base SoW 1); exponential models use identity covariances.
SSModel make_model(const ExperimentConfig& cfg);

// (q2, r2) with q2 r2 = 1 whose SoW under `model` equals `target`.
std::pair<double, double> pair_for_sow(const SSModel& model, double target);

// `count` trajectories per (q2, r2) pair, drawn from the stream derive_seed(seed, key).
Dataset make_dataset(const SSModel& model, const std::vector<std::pair<double, double>>& pairs,
                     std::size_t count, std::size_t length, NoiseFamily family, SplitTag split,
                     std::uint64_t seed, const std::string& key);

struct TrainingData {
  Dataset stationary;  // (q2, r2) = (1, 1)
  Dataset full;        // every trained pair
};
TrainingData make_training_data(const ExperimentConfig& cfg, const SSModel& model);

// Jump protocol schedule for one post-jump r2.
NoiseSchedule jump_schedule(const ExperimentConfig& cfg, double r2_after);
Dataset make_jump_dataset(const ExperimentConfig& cfg, const SSModel& model, double r2_after);

// Test points of the grid experiments.
std::vector<double> test_ratios(const ExperimentConfig& cfg);

struct TrainedNets {
  GainNet gain_net;
  HyperNet hyper;
  std::optional<TrainReport> stage1;
  std::optional<TrainReport> stage2;
  bool loaded = false;
};

// Loads cfg.checkpoint when it exists; otherwise trains both stages (if
// cfg.train), writes train_stage{1,2}.csv and checkpoint.akck under out_dir,
// and returns the result.
TrainedNets obtain_networks(const ExperimentConfig& cfg, const SSModel& model,
                            const std::filesystem::path& out_dir);

struct ExperimentResult {
  ResultTable table;
  std::string report;
  std::vector<std::filesystem::path> files;
};

ExperimentResult run_gaussian_grid(const ExperimentConfig& cfg, const std::filesystem::path& out);
ExperimentResult run_exponential_grid(const ExperimentConfig& cfg,
                                      const std::filesystem::path& out);
ExperimentResult run_sow_jump(const ExperimentConfig& cfg, const std::filesystem::path& out);
// Dispatches on cfg.experiment.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out);

// Grid evaluation with already trained networks (no file output).
ResultTable evaluate_grid(const ExperimentConfig& cfg, const SSModel& model,
                          const GainNet& gain_net, const HyperNet& hyper);
ResultTable evaluate_jump(const ExperimentConfig& cfg, const SSModel& model,
                          const GainNet& gain_net, const HyperNet& hyper);

// Writes results.csv, errors.csv, report.txt and the plots.
std::vector<std::filesystem::path> write_outputs(const ResultTable& table,
                                                 const std::string& report,
                                                 const std::filesystem::path& out);

std::string grid_report(const ResultTable& table);
std::string jump_report(const ResultTable& table);

}  // namespace aknet
