#include "aknet/estimator/adaptive_aknet.hpp"

#include "aknet/errors.hpp"
#include "aknet/filter/aknet_filter.hpp"

namespace aknet {

AdaptiveAknetResult adaptive_aknet_run(const SSModel& model, const GainNet& gain_net,
                                       const HyperNet& hyper,
                                       std::span<const Trajectory* const> batch,
                                       const CorrEstimatorConfig& config, const Matrix& P0) {
  AdaptiveAknetResult out;
  if (batch.empty()) return out;
  const Index m = model.state_dim();
  const Index n = model.obs_dim();
  const std::size_t B = batch.size();
  const std::size_t T = batch.front()->length();

  Matrix x0(static_cast<Index>(B), m);
  for (std::size_t i = 0; i < B; ++i) {
    if (batch[i]->length() != T) throw ContractViolation("adaptive_aknet_run: length mismatch");
    x0.row(static_cast<Index>(i)) = batch[i]->x0.transpose();
  }

  std::vector<CorrEstimator> estimators(B, CorrEstimator(model, config));
  std::vector<Matrix> P(B, P0);
  BatchRunner runner(model, gain_net, &hyper, x0);
  out.estimates.assign(B, Matrix(static_cast<Index>(T), m));
  out.sow.assign(B, std::vector<double>(T));
  out.clamped.assign(B, std::vector<bool>(T));

  const Matrix I = Matrix::Identity(m, m);
  Matrix y(static_cast<Index>(B), n);
  std::vector<double> sow_t(B);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < B; ++i) {
      y.row(static_cast<Index>(i)) = batch[i]->observations.row(static_cast<Index>(t));
      sow_t[i] = estimators[i].sow();
      out.sow[i][t] = sow_t[i];
    }
    StepResult r = runner.step(y, sow_t);
    for (std::size_t i = 0; i < B; ++i) {
      const auto row = static_cast<Index>(i);
      out.estimates[i].row(static_cast<Index>(t)) = r.x_post.row(row);
      const Matrix K = Eigen::Map<const Matrix>(r.gain.row(row).data(), m, n);
      const Matrix P_prior = model.F * P[i] * model.F.transpose() + estimators[i].Q();
      const Matrix IKH = I - K * model.H;
      P[i] = symmetrized(IKH * P_prior * IKH.transpose() + K * estimators[i].R() * K.transpose());
      const Vector innovation = r.innovation.row(row).transpose();
      const Vector residual = y.row(row).transpose() - model.H * r.x_post.row(row).transpose();
      CorrUpdate u = estimators[i].corr_update(innovation, residual, K, model.H, P[i]);
      out.clamped[i][t] = u.clamped;
    }
  }
  return out;
}

}  // namespace aknet
