#include "aknet/estimator/corr_estimator.hpp"

#include "aknet/errors.hpp"

namespace aknet {

CorrEstimator::CorrEstimator(const SSModel& model, CorrEstimatorConfig config, Matrix Q_init,
                             Matrix R_init)
    : config_(config), Q0_(model.Q0), R0_(model.R0), Q_(std::move(Q_init)), R_(std::move(R_init)) {
  if (!(config_.alpha > 0.0 && config_.alpha < 1.0)) {
    throw ContractViolation("CorrEstimator: forgetting factor must lie in (0, 1)");
  }
  if (Q_.rows() != model.state_dim() || Q_.cols() != model.state_dim() ||
      R_.rows() != model.obs_dim() || R_.cols() != model.obs_dim()) {
    throw ContractViolation("CorrEstimator: initial covariances have wrong shape");
  }
}

CorrEstimator::CorrEstimator(const SSModel& model, CorrEstimatorConfig config)
    : CorrEstimator(model, config, model.Q0, model.R0) {}

CorrUpdate CorrEstimator::corr_update(const Vector& innovation, const Vector& residual,
                                      const Matrix& gain, const Matrix& H, const Matrix& P) {
  const double a = config_.alpha;
  const Vector kd = gain * innovation;
  Matrix R_next = a * R_ + (1.0 - a) * (residual * residual.transpose() + H * P * H.transpose());
  Matrix Q_next = a * Q_ + (1.0 - a) * (kd * kd.transpose());
  bool clamped = false;
  if (!R_next.allFinite() || !Q_next.allFinite()) {
    // Keep the previous estimate rather than propagating NaN/inf.
    R_next = R_;
    Q_next = Q_;
    clamped = true;
  }
  clamped |= project_psd(R_next, config_.eigen_floor);
  clamped |= project_psd(Q_next, config_.eigen_floor);
  Q_ = std::move(Q_next);
  R_ = std::move(R_next);
  CorrUpdate out{Q_, R_, sow(), clamped};
  return out;
}

NoiseEstimate CorrEstimator::estimate(std::size_t) { return NoiseEstimate{Q_, R_, sow()}; }

void CorrEstimator::observe(std::size_t t, const FilterStepStats& stats, const SSModel& model) {
  CorrUpdate u = corr_update(stats.innovation, stats.residual, stats.gain, model.H,
                             stats.posterior_cov);
  diagnostics_.push_back(EstimatorDiagnostic{t, u.sow, u.clamped});
}

double CorrEstimator::sow() const { return aknet::sow(Q_, R_); }

double CorrEstimator::q_scale() const { return Q_.trace() / Q0_.trace(); }

double CorrEstimator::r_scale() const { return R_.trace() / R0_.trace(); }

}  // namespace aknet
