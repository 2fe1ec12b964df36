#pragma once

#include "aknet/ssm/model.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace aknet {

struct KFState {
  Vector x;  // posterior mean
  Matrix P;  // posterior covariance
};

struct KFPrediction {
  Vector x_prior;
  Vector y_prior;
  Matrix P_prior;
};

struct KFUpdate {
  KFState state;
  Matrix gain;
  Vector innovation;  // y_t - y_{t|t-1}
  Vector residual;    // y_t - H x_t
};

// Inverse condition-number threshold below which the innovation covariance is
// treated as singular (condition estimate 1e12).
inline constexpr double kMinInnovationRcond = 1e-12;

KFPrediction kf_predict(const KFState& state, const SSModel& model, const Matrix& Qt);

// Gain via Cholesky of S = H P H^T + R; Joseph-form covariance, symmetrized.
// Throws NumericalError if S is not positive definite or its condition
// estimate exceeds 1e12.
KFUpdate kf_update(const KFPrediction& pred, const Vector& y, const SSModel& model,
                   const Matrix& Rt);

struct KFRun {
  Matrix estimates;  // T x m, row t is x_{t+1|t+1}
  std::vector<Matrix> gains;
  std::vector<Matrix> covariances;  // posterior P per step
};

// observations is T x n; Qs/Rs hold one matrix per step.
KFRun kf_run(const SSModel& model, const std::vector<Matrix>& Qs, const std::vector<Matrix>& Rs,
             const Matrix& observations, const Vector& x0, const Matrix& P0);

// kf_run with Q_t = q2_t Q0, R_t = r2_t R0.
KFRun kf_run_scaled(const SSModel& model, const std::vector<double>& q2,
                    const std::vector<double>& r2, const Matrix& observations, const Vector& x0,
                    const Matrix& P0);

// Per-step statistics handed to a noise estimator after each filter update.
struct FilterStepStats {
  Vector innovation;
  Vector residual;
  Matrix gain;
  Matrix posterior_cov;
};

struct NoiseEstimate {
  Matrix Q;
  Matrix R;
  double sow = 1.0;
};

// Supplies the noise statistics for step t, then observes that step's outcome.
class NoiseEstimator {
 public:
  virtual ~NoiseEstimator() = default;
  virtual NoiseEstimate estimate(std::size_t t) = 0;
  virtual void observe(std::size_t t, const FilterStepStats& stats, const SSModel& model) = 0;
};

// Reports the true scaled covariances; adaptive_kf_run with it equals kf_run_scaled.
class OracleNoiseEstimator final : public NoiseEstimator {
 public:
  OracleNoiseEstimator(const SSModel& model, std::vector<double> q2, std::vector<double> r2);
  NoiseEstimate estimate(std::size_t t) override;
  void observe(std::size_t, const FilterStepStats&, const SSModel&) override {}

 private:
  Matrix Q0_;
  Matrix R0_;
  std::vector<double> q2_;
  std::vector<double> r2_;
};

struct AdaptiveKFRun {
  KFRun run;
  std::vector<NoiseEstimate> estimates;  // what the filter used at each step
  std::vector<std::size_t> fallback_steps;
  std::vector<std::string> fallback_reasons;
};

// Substitutes estimator output into predict/update step by step. If the
// estimator throws or returns non-finite/ill-shaped covariances, the previous
// step's estimate is reused and the step is recorded in fallback_steps.
AdaptiveKFRun adaptive_kf_run(const SSModel& model, const Matrix& observations,
                              NoiseEstimator& estimator, const Vector& x0, const Matrix& P0);

}  // namespace aknet
