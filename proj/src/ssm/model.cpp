#include "aknet/ssm/model.hpp"

#include "aknet/errors.hpp"

#include <cmath>

namespace aknet {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

bool is_diagonal(const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

void require_spd(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) throw ContractViolation(std::string(name) + " must be square");
  if (!m.allFinite()) throw ContractViolation(std::string(name) + " has non-finite entries");
  if (!m.isApprox(m.transpose(), 1e-12)) {
    throw ContractViolation(std::string(name) + " must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ContractViolation(std::string(name) + " must be positive definite");
  }
}

// Factor such that factor * z has covariance `cov` for z with identity
// covariance (Cholesky for Gaussian, per-axis std-dev for exponential).
Matrix noise_factor(const Matrix& cov, NoiseFamily family) {
  if (cov.rows() != cov.cols()) throw ContractViolation("noise covariance must be square");
  if (family == NoiseFamily::kExponential) {
    if (!is_diagonal(cov)) {
      throw UnsupportedConfiguration(
          "exponential noise requires a diagonal covariance (spatially uncorrelated)");
    }
    Matrix f = Matrix::Zero(cov.rows(), cov.cols());
    for (Index i = 0; i < cov.rows(); ++i) {
      if (!(cov(i, i) >= 0.0)) throw ContractViolation("noise variance must be non-negative");
      f(i, i) = std::sqrt(cov(i, i));
    }
    return f;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw ContractViolation("Gaussian noise covariance must be positive definite");
  }
  return llt.matrixL().toDenseMatrix();
}

Vector draw_unit(Index dim, NoiseFamily family, Rng& rng) {
  Vector z(dim);
  if (family == NoiseFamily::kGaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < dim; ++i) z(i) = normal(rng);
  } else {
    std::exponential_distribution<double> expo(1.0);
    for (Index i = 0; i < dim; ++i) z(i) = expo(rng) - 1.0;
  }
  return z;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t key) {
  return splitmix64(splitmix64(master) ^ (key * 0xD1B54A32D192ED03ULL));
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& key) {
  // FNV-1a over the key bytes; std::hash is not stable across implementations.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return derive_seed(master, h);
}

void SSModel::validate() const {
  const Index m = F.rows();
  if (m == 0 || F.cols() != m) throw ContractViolation("F must be a non-empty square matrix");
  if (H.cols() != m || H.rows() == 0) throw ContractViolation("H must be n x m with m = dim(F)");
  if (!F.allFinite() || !H.allFinite()) throw ContractViolation("F and H must be finite");
  if (Q0.rows() != m) throw ContractViolation("Q0 must be m x m");
  if (R0.rows() != H.rows()) throw ContractViolation("R0 must be n x n");
  require_spd(Q0, "Q0");
  require_spd(R0, "R0");
}

const char* noise_family_name(NoiseFamily family) {
  return family == NoiseFamily::kGaussian ? "gaussian" : "exponential";
}

NoiseFamily parse_noise_family(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::kGaussian;
  if (name == "exponential") return NoiseFamily::kExponential;
  throw ContractViolation("unknown noise family '" + name + "'");
}

void NoiseSchedule::validate() const {
  if (q2.size() != r2.size()) throw ContractViolation("noise schedule: q2/r2 length mismatch");
  for (std::size_t t = 0; t < q2.size(); ++t) {
    if (!(q2[t] > 0.0) || !(r2[t] > 0.0) || !std::isfinite(q2[t]) || !std::isfinite(r2[t])) {
      throw ContractViolation("noise schedule: scales must be positive and finite at t=" +
                              std::to_string(t));
    }
  }
}

NoiseSchedule NoiseSchedule::constant(double q2, double r2, std::size_t length,
                                      NoiseFamily family) {
  NoiseSchedule s{std::vector<double>(length, q2), std::vector<double>(length, r2), family};
  s.validate();
  return s;
}

NoiseSchedule NoiseSchedule::jump(double q2_before, double r2_before, double q2_after,
                                  double r2_after, std::size_t jump_step, std::size_t length,
                                  NoiseFamily family) {
  NoiseSchedule s;
  s.family = family;
  s.q2.resize(length);
  s.r2.resize(length);
  for (std::size_t t = 0; t < length; ++t) {
    const bool after = t >= jump_step;
    s.q2[t] = after ? q2_after : q2_before;
    s.r2[t] = after ? r2_after : r2_before;
  }
  s.validate();
  return s;
}

Index Dataset::state_dim() const {
  if (trajectories.empty()) throw ContractViolation("dataset is empty");
  return trajectories.front().states.cols();
}

Index Dataset::obs_dim() const {
  if (trajectories.empty()) throw ContractViolation("dataset is empty");
  return trajectories.front().observations.cols();
}

std::size_t Dataset::length() const {
  if (trajectories.empty()) throw ContractViolation("dataset is empty");
  return trajectories.front().length();
}

void Dataset::validate() const {
  if (trajectories.empty()) throw ContractViolation("dataset is empty");
  const Index m = state_dim();
  const Index n = obs_dim();
  const std::size_t len = length();
  for (const auto& tr : trajectories) {
    if (tr.states.cols() != m || tr.observations.cols() != n || tr.length() != len ||
        static_cast<std::size_t>(tr.observations.rows()) != len || tr.sow.size() != len ||
        tr.q2.size() != len || tr.r2.size() != len || tr.x0.size() != m) {
      throw ContractViolation("dataset trajectories disagree on (m, n, T)");
    }
  }
}

double sow(const Matrix& Q, const Matrix& R) {
  if (Q.rows() != Q.cols() || R.rows() != R.cols()) {
    throw ContractViolation("sow: Q and R must be square");
  }
  const double trace_r = R.trace();
  if (trace_r == 0.0) throw NumericalError("sow: observation-noise trace is zero");
  const double m = static_cast<double>(Q.rows());
  const double n = static_cast<double>(R.rows());
  return n * Q.trace() / (m * trace_r);
}

Vector sample_noise(const Matrix& cov, NoiseFamily family, Rng& rng) {
  const Matrix factor = noise_factor(cov, family);
  return factor * draw_unit(cov.rows(), family, rng);
}

Trajectory generate(const SSModel& model, const NoiseSchedule& schedule, std::size_t length,
                    const Vector& x0, Rng& rng) {
  model.validate();
  schedule.validate();
  if (schedule.length() < length) {
    throw ContractViolation("generate: schedule shorter than requested length");
  }
  const Index m = model.state_dim();
  const Index n = model.obs_dim();
  if (x0.size() != m) throw ContractViolation("generate: x0 has wrong dimension");

  const Matrix process_factor = noise_factor(model.Q0, schedule.family);
  const Matrix obs_factor = noise_factor(model.R0, schedule.family);
  const double base_sow = sow(model.Q0, model.R0);

  Trajectory tr;
  tr.states.resize(static_cast<Index>(length), m);
  tr.observations.resize(static_cast<Index>(length), n);
  tr.sow.resize(length);
  tr.q2.assign(schedule.q2.begin(), schedule.q2.begin() + static_cast<std::ptrdiff_t>(length));
  tr.r2.assign(schedule.r2.begin(), schedule.r2.begin() + static_cast<std::ptrdiff_t>(length));
  tr.x0 = x0;

  Vector x = x0;
  for (std::size_t t = 0; t < length; ++t) {
    const double q = std::sqrt(schedule.q2[t]);
    const double r = std::sqrt(schedule.r2[t]);
    Vector e = q * (process_factor * draw_unit(m, schedule.family, rng));
    x = model.F * x + e;
    Vector v = r * (obs_factor * draw_unit(n, schedule.family, rng));
    Vector y = model.H * x + v;
    tr.states.row(static_cast<Index>(t)) = x.transpose();
    tr.observations.row(static_cast<Index>(t)) = y.transpose();
    tr.sow[t] = base_sow * schedule.q2[t] / schedule.r2[t];
  }
  return tr;
}

Matrix random_spd(Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) a(i, j) = normal(rng);
  }
  Matrix spd = a * a.transpose() + 0.1 * Matrix::Identity(dim, dim);
  return symmetrized(spd);
}

Matrix rotation_decay(Index dim, double radius, double angle) {
  Matrix f = Matrix::Zero(dim, dim);
  const double c = radius * std::cos(angle);
  const double s = radius * std::sin(angle);
  Index i = 0;
  for (; i + 1 < dim; i += 2) {
    f(i, i) = c;
    f(i, i + 1) = -s;
    f(i + 1, i) = s;
    f(i + 1, i + 1) = c;
  }
  if (i < dim) f(i, i) = radius;
  return f;
}

}  // namespace aknet
