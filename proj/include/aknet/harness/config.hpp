#pragma once

#include "aknet/kgain/gain_net.hpp"
#include "aknet/ssm/model.hpp"
#include "aknet/training/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace aknet {

// Key = value experiment description. Lists are comma separated, '#' starts a
// comment. Every key has a default; see describe_config() for the schema.
struct ExperimentConfig {
  std::string experiment = "gaussian-grid";  // gaussian-grid | exponential-grid | sow-jump
  std::uint64_t seed = 0;

  // model
  std::string noise = "gaussian";  // gaussian | exponential
  Index state_dim = 2;
  Index obs_dim = 2;
  double f_radius = 0.95;
  double f_angle = 0.3;

  // data
  std::vector<double> train_sows{0.01, 0.1, 1.0, 10.0};
  std::size_t train_per_pair = 100;
  std::size_t stationary_count = 100;
  std::size_t length = 100;
  std::size_t test_per_point = 200;
  std::size_t test_ratio_count = 9;  // log-spaced over [min, max] of train_sows
  std::vector<double> scales{0.1, 10.0, 100.0};

  // jump protocol
  std::size_t jump_length = 200;
  std::size_t jump_step = 100;
  std::size_t jump_every = 0;  // 0: single jump; k: alternate before/after every k steps
  double q2_before = 1.0;
  double r2_before = 1.0;
  double q2_after = 0.1;
  std::vector<double> r2_after{0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0};

  // networks
  Index hidden = 0;  // 0: 10 (m + n)
  Index hyper_hidden = 5;
  FeatureNorm norm = FeatureNorm::kUnit;
  double rms_decay = 0.9;

  // training
  std::size_t stage1_epochs = 150;
  std::size_t stage1_batch = 10;
  double stage1_step = 1e-3;
  std::size_t stage2_epochs = 100;
  std::size_t stage2_batch = 20;
  double stage2_step = 3e-3;
  std::size_t patience = 20;
  double l2_weight = 0.0;
  double validation_fraction = 0.2;

  // estimation
  double corr_alpha = 0.95;
  std::size_t grid_count = 13;  // SoW candidates for grid search

  // checkpoint reuse: trained nets are read from here when the file exists
  std::string checkpoint;
  bool train = true;

  void validate() const;

  NoiseFamily family() const { return parse_noise_family(noise); }
  Index hidden_size() const;
  TrainConfig stage1_config() const;
  TrainConfig stage2_config() const;
};

// Defaults for one experiment id (sow-jump and gaussian-grid share the
// Gaussian model; exponential-grid switches to identity covariances).
ExperimentConfig default_config(const std::string& experiment);

// Applies one key/value; throws ContractViolation naming the key on error.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Reads a config file on top of `base`.
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base);
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base);

// Round-trippable dump in the same syntax.
std::string dump_config(const ExperimentConfig& cfg);
std::string describe_config();

}  // namespace aknet
