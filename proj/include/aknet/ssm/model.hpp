#pragma once

#include "aknet/numerics/matrix.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace aknet {

using Rng = std::mt19937_64;

// Mixes a master seed with a stream key so independent grid points and
// datasets draw from decorrelated streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t key);
std::uint64_t derive_seed(std::uint64_t master, const std::string& key);

// Linear state-space model x_t = F x_{t-1} + e_t, y_t = H x_t + v_t with
// Var(e_t) = q2_t Q0 and Var(v_t) = r2_t R0.
struct SSModel {
  Matrix F;
  Matrix H;
  Matrix Q0;
  Matrix R0;

  Index state_dim() const { return F.rows(); }
  Index obs_dim() const { return H.rows(); }

  // Throws ContractViolation unless shapes agree, entries are finite and
  // Q0, R0 are symmetric positive definite.
  void validate() const;
};

enum class NoiseFamily : std::uint8_t { kGaussian = 0, kExponential = 1 };

const char* noise_family_name(NoiseFamily family);
NoiseFamily parse_noise_family(const std::string& name);

struct NoiseSchedule {
  std::vector<double> q2;
  std::vector<double> r2;
  NoiseFamily family = NoiseFamily::kGaussian;

  std::size_t length() const { return q2.size(); }
  void validate() const;

  static NoiseSchedule constant(double q2, double r2, std::size_t length, NoiseFamily family);
  // (q2_before, r2_before) for t < jump_step, (q2_after, r2_after) from then on.
  static NoiseSchedule jump(double q2_before, double r2_before, double q2_after, double r2_after,
                            std::size_t jump_step, std::size_t length, NoiseFamily family);
};

// One simulated trajectory. Row t of `states`/`observations` holds x_{t+1}/y_{t+1};
// `x0` is the known initial state. q2/r2 carry the schedule used to draw it.
struct Trajectory {
  Matrix states;
  Matrix observations;
  std::vector<double> sow;
  std::vector<double> q2;
  std::vector<double> r2;
  Vector x0;

  std::size_t length() const { return static_cast<std::size_t>(states.rows()); }
};

enum class SplitTag : std::uint8_t { kPseudoStationary = 0, kFull = 1 };

struct Dataset {
  std::vector<Trajectory> trajectories;
  SplitTag split = SplitTag::kFull;
  NoiseFamily family = NoiseFamily::kGaussian;

  std::size_t size() const { return trajectories.size(); }
  Index state_dim() const;
  Index obs_dim() const;
  std::size_t length() const;
  // Throws ContractViolation if empty or if trajectories disagree on (m, n, T).
  void validate() const;
};

// n Tr(Q) / (m Tr(R)).
double sow(const Matrix& Q, const Matrix& R);

// Zero-mean noise vector with covariance `cov`. Gaussian draws are colored by
// the Cholesky factor; exponential draws are lambda_i (E_i - 1), E_i ~ Exp(1),
// with lambda_i^2 = cov(i, i) and require a diagonal cov.
Vector sample_noise(const Matrix& cov, NoiseFamily family, Rng& rng);

Trajectory generate(const SSModel& model, const NoiseSchedule& schedule, std::size_t length,
                    const Vector& x0, Rng& rng);

// A A^T + 0.1 I with A standard normal.
Matrix random_spd(Index dim, Rng& rng);

// Spectral-radius-`radius` rotation-decay matrix, embedded block-wise for dim > 2.
Matrix rotation_decay(Index dim, double radius, double angle);

}  // namespace aknet
