#include "aknet/kf/kalman_filter.hpp"

#include "aknet/errors.hpp"

#include <cmath>
#include <sstream>

namespace aknet {

KFPrediction kf_predict(const KFState& state, const SSModel& model, const Matrix& Qt) {
  const Index m = model.state_dim();
  if (state.x.size() != m || state.P.rows() != m || state.P.cols() != m || Qt.rows() != m ||
      Qt.cols() != m) {
    throw ContractViolation("kf_predict: dimension mismatch");
  }
  KFPrediction pred;
  pred.x_prior = model.F * state.x;
  pred.y_prior = model.H * pred.x_prior;
  pred.P_prior = model.F * state.P * model.F.transpose() + Qt;
  return pred;
}

KFUpdate kf_update(const KFPrediction& pred, const Vector& y, const SSModel& model,
                   const Matrix& Rt) {
  const Index m = model.state_dim();
  const Index n = model.obs_dim();
  if (y.size() != n || Rt.rows() != n || Rt.cols() != n || pred.x_prior.size() != m) {
    throw ContractViolation("kf_update: dimension mismatch");
  }
  const Matrix& H = model.H;
  const Matrix HP = H * pred.P_prior;
  const Matrix S = symmetrized(HP * H.transpose() + Rt);
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  if (llt.info() != Eigen::Success || !(rcond >= kMinInnovationRcond)) {
    std::ostringstream msg;
    msg << "kf_update: innovation covariance is singular or ill-conditioned (rcond estimate "
        << rcond << ", threshold " << kMinInnovationRcond << ", trace " << S.trace() << ")";
    throw NumericalError(msg.str());
  }
  // K = P H^T S^{-1} = (S^{-1} H P)^T since S and P are symmetric.
  const Matrix K = Matrix(llt.solve(Eigen::MatrixXd(HP))).transpose();

  KFUpdate upd;
  upd.innovation = y - pred.y_prior;
  upd.state.x = pred.x_prior + K * upd.innovation;
  const Matrix IKH = Matrix::Identity(m, m) - K * H;
  upd.state.P = symmetrized(IKH * pred.P_prior * IKH.transpose() + K * Rt * K.transpose());
  upd.residual = y - H * upd.state.x;
  upd.gain = K;
  return upd;
}

KFRun kf_run(const SSModel& model, const std::vector<Matrix>& Qs, const std::vector<Matrix>& Rs,
             const Matrix& observations, const Vector& x0, const Matrix& P0) {
  const auto T = static_cast<std::size_t>(observations.rows());
  if (Qs.size() < T || Rs.size() < T) throw ContractViolation("kf_run: noise sequences too short");
  if (observations.cols() != model.obs_dim()) {
    throw ContractViolation("kf_run: observation dimension mismatch");
  }
  KFRun out;
  out.estimates.resize(observations.rows(), model.state_dim());
  out.gains.reserve(T);
  out.covariances.reserve(T);
  KFState state{x0, P0};
  for (std::size_t t = 0; t < T; ++t) {
    const auto row = static_cast<Index>(t);
    const KFPrediction pred = kf_predict(state, model, Qs[t]);
    KFUpdate upd = kf_update(pred, observations.row(row).transpose(), model, Rs[t]);
    state = std::move(upd.state);
    out.estimates.row(row) = state.x.transpose();
    out.gains.push_back(std::move(upd.gain));
    out.covariances.push_back(state.P);
  }
  return out;
}

KFRun kf_run_scaled(const SSModel& model, const std::vector<double>& q2,
                    const std::vector<double>& r2, const Matrix& observations, const Vector& x0,
                    const Matrix& P0) {
  const auto T = static_cast<std::size_t>(observations.rows());
  if (q2.size() < T || r2.size() < T) throw ContractViolation("kf_run_scaled: schedule too short");
  std::vector<Matrix> Qs;
  std::vector<Matrix> Rs;
  Qs.reserve(T);
  Rs.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    Qs.push_back(q2[t] * model.Q0);
    Rs.push_back(r2[t] * model.R0);
  }
  return kf_run(model, Qs, Rs, observations, x0, P0);
}

OracleNoiseEstimator::OracleNoiseEstimator(const SSModel& model, std::vector<double> q2,
                                           std::vector<double> r2)
    : Q0_(model.Q0), R0_(model.R0), q2_(std::move(q2)), r2_(std::move(r2)) {
  if (q2_.size() != r2_.size()) throw ContractViolation("oracle estimator: schedule mismatch");
}

NoiseEstimate OracleNoiseEstimator::estimate(std::size_t t) {
  if (t >= q2_.size()) throw ContractViolation("oracle estimator: step beyond schedule");
  NoiseEstimate e;
  e.Q = q2_[t] * Q0_;
  e.R = r2_[t] * R0_;
  e.sow = sow(e.Q, e.R);
  return e;
}

AdaptiveKFRun adaptive_kf_run(const SSModel& model, const Matrix& observations,
                              NoiseEstimator& estimator, const Vector& x0, const Matrix& P0) {
  const Index m = model.state_dim();
  const Index n = model.obs_dim();
  const auto T = static_cast<std::size_t>(observations.rows());
  AdaptiveKFRun out;
  out.run.estimates.resize(observations.rows(), m);
  out.run.gains.reserve(T);
  out.run.covariances.reserve(T);
  out.estimates.reserve(T);

  NoiseEstimate previous{model.Q0, model.R0, sow(model.Q0, model.R0)};
  KFState state{x0, P0};
  for (std::size_t t = 0; t < T; ++t) {
    NoiseEstimate est;
    std::string failure;
    try {
      est = estimator.estimate(t);
      if (est.Q.rows() != m || est.Q.cols() != m || est.R.rows() != n || est.R.cols() != n) {
        failure = "estimate has wrong shape";
      } else if (!est.Q.allFinite() || !est.R.allFinite() || !std::isfinite(est.sow)) {
        failure = "estimate is not finite";
      }
    } catch (const std::exception& e) {
      failure = e.what();
    }
    if (!failure.empty()) {
      est = previous;
      out.fallback_steps.push_back(t);
      out.fallback_reasons.push_back(std::move(failure));
    }

    const auto row = static_cast<Index>(t);
    const KFPrediction pred = kf_predict(state, model, est.Q);
    KFUpdate upd = kf_update(pred, observations.row(row).transpose(), model, est.R);
    state = upd.state;
    out.run.estimates.row(row) = state.x.transpose();
    estimator.observe(t, FilterStepStats{upd.innovation, upd.residual, upd.gain, state.P}, model);
    out.run.gains.push_back(std::move(upd.gain));
    out.run.covariances.push_back(state.P);
    out.estimates.push_back(est);
    previous = std::move(est);
  }
  return out;
}

}  // namespace aknet
