#pragma once

#include "aknet/kf/kalman_filter.hpp"

#include <vector>

namespace aknet {

struct CorrEstimatorConfig {
  double alpha = 0.95;        // forgetting factor
  double eigen_floor = 1e-12;  // PSD projection clamp
};

struct CorrUpdate {
  Matrix Q;
  Matrix R;
  double sow = 1.0;
  bool clamped = false;
};

struct EstimatorDiagnostic {
  std::size_t step = 0;
  double sow = 0.0;
  bool clamped = false;
};

// One-step innovation/residual covariance matching with exponential forgetting:
//   R_t = a R_{t-1} + (1 - a) (eps eps^T + H P H^T)
//   Q_t = a Q_{t-1} + (1 - a) K d d^T K^T
// where d is the innovation, eps the posterior residual and P the posterior
// covariance. Estimates are projected onto the PSD cone after each update.
//
// As a NoiseEstimator it runs one step behind: estimate(t) reports the
// statistics accumulated through step t - 1.
class CorrEstimator final : public NoiseEstimator {
 public:
  CorrEstimator(const SSModel& model, CorrEstimatorConfig config, Matrix Q_init, Matrix R_init);
  // Starts from the model's base covariances.
  CorrEstimator(const SSModel& model, CorrEstimatorConfig config = {});

  CorrUpdate corr_update(const Vector& innovation, const Vector& residual, const Matrix& gain,
                         const Matrix& H, const Matrix& P);

  NoiseEstimate estimate(std::size_t t) override;
  void observe(std::size_t t, const FilterStepStats& stats, const SSModel& model) override;

  const Matrix& Q() const { return Q_; }
  const Matrix& R() const { return R_; }
  double sow() const;
  // Trace-ratio reduction against the base covariances.
  double q_scale() const;
  double r_scale() const;

  const std::vector<EstimatorDiagnostic>& diagnostics() const { return diagnostics_; }
  const CorrEstimatorConfig& config() const { return config_; }

 private:
  CorrEstimatorConfig config_;
  Matrix Q0_;
  Matrix R0_;
  Matrix Q_;
  Matrix R_;
  std::vector<EstimatorDiagnostic> diagnostics_;
};

}  // namespace aknet
