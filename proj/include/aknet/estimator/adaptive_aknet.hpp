#pragma once

#include "aknet/estimator/corr_estimator.hpp"
#include "aknet/hypercm/hyper_net.hpp"
#include "aknet/kgain/gain_net.hpp"

#include <span>
#include <vector>

namespace aknet {

struct AdaptiveAknetResult {
  std::vector<Matrix> estimates;            // T x m per trajectory
  std::vector<std::vector<double>> sow;     // SoW fed to the hypernetwork per step
  std::vector<std::vector<bool>> clamped;   // estimator PSD clamp flags per step
};

// AKNet driven by one CorrEstimator per trajectory. The SoW used at step t is
// the estimator's value after step t - 1. The error covariance needed by the
// estimator is propagated in Joseph form with AKNet's own gain and the current
// noise estimates, starting from P0.
AdaptiveAknetResult adaptive_aknet_run(const SSModel& model, const GainNet& gain_net,
                                       const HyperNet& hyper,
                                       std::span<const Trajectory* const> batch,
                                       const CorrEstimatorConfig& config, const Matrix& P0);

}  // namespace aknet
