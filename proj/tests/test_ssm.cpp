#include "aknet/errors.hpp"
#include "aknet/ssm/dataset_io.hpp"
#include "aknet/ssm/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace aknet {
namespace {

SSModel identity_model(Index m) {
  SSModel model;
  model.F = rotation_decay(m, 0.9, 0.4);
  model.H = Matrix::Identity(m, m);
  model.Q0 = Matrix::Identity(m, m);
  model.R0 = Matrix::Identity(m, m);
  return model;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double skew = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments out;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x / n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : xs) {
    m2 += (x - out.mean) * (x - out.mean) / n;
    m3 += std::pow(x - out.mean, 3) / n;
  }
  out.var = m2;
  out.skew = m3 / std::pow(m2, 1.5);
  return out;
}

TEST(Sow, ScaledIdentities) {
  EXPECT_DOUBLE_EQ(sow(0.3 * Matrix::Identity(2, 2), 1.5 * Matrix::Identity(3, 3)), 0.3 / 1.5);
  EXPECT_DOUBLE_EQ(sow(Matrix::Identity(2, 2), Matrix::Identity(2, 2)), 1.0);
}

TEST(Sow, TraceArithmetic) {
  Matrix q = Matrix::Zero(2, 2);
  q.diagonal() << 1.0, 2.0;
  Matrix r = Matrix::Zero(2, 2);
  r.diagonal() << 3.0, 1.0;
  EXPECT_DOUBLE_EQ(sow(q, r), 0.75);
}

TEST(Sow, ScaleInvariant) {
  Rng rng(4);
  Matrix q = random_spd(3, rng);
  Matrix r = random_spd(2, rng);
  for (double c : {1e-3, 0.5, 7.0, 1e4}) EXPECT_NEAR(sow(c * q, c * r), sow(q, r), 1e-12);
}

TEST(Sow, ZeroObservationTraceThrows) {
  EXPECT_THROW(sow(Matrix::Identity(2, 2), Matrix::Zero(2, 2)), NumericalError);
}

TEST(SampleNoise, TinyCovarianceGivesTinySamples) {
  Rng rng(1);
  const Matrix cov = 1e-12 * Matrix::Identity(3, 3);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_LE(sample_noise(cov, NoiseFamily::kGaussian, rng).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(SampleNoise, GaussianVariance) {
  Rng rng(2);
  Matrix cov(1, 1);
  cov << 4.0;
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(sample_noise(cov, NoiseFamily::kGaussian, rng)(0));
  EXPECT_NEAR(moments(xs).var, 4.0, 0.2);
}

TEST(SampleNoise, ExponentialMoments) {
  Rng rng(3);
  const Matrix cov = Matrix::Identity(1, 1);
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) {
    xs.push_back(sample_noise(cov, NoiseFamily::kExponential, rng)(0));
  }
  const Moments mo = moments(xs);
  EXPECT_NEAR(mo.mean, 0.0, 0.02);
  EXPECT_NEAR(mo.var, 1.0, 0.05);
  EXPECT_NEAR(mo.skew, 2.0, 0.2);
  // zero mean within 5 sigma / sqrt(N)
  EXPECT_LT(std::abs(mo.mean), 5.0 / std::sqrt(100000.0));
}

TEST(SampleNoise, ExponentialNeedsDiagonalCovariance) {
  Rng rng(3);
  Matrix cov(2, 2);
  cov << 1.0, 0.5, 0.5, 1.0;
  EXPECT_THROW(sample_noise(cov, NoiseFamily::kExponential, rng), UnsupportedConfiguration);
}

TEST(Generate, NoiselessFollowsDeterministicRecursion) {
  SSModel model = identity_model(2);
  model.H << 1.0, 0.5, -0.2, 2.0;
  Rng rng(5);
  Vector x0(2);
  x0 << 1.0, -2.0;
  auto s = NoiseSchedule::constant(1e-30, 1e-30, 20, NoiseFamily::kGaussian);
  Trajectory tr = generate(model, s, 20, x0, rng);
  Vector x = x0;
  for (std::size_t t = 0; t < 20; ++t) {
    x = model.F * x;
    const Vector y = model.H * x;
    EXPECT_LE((tr.observations.row(t).transpose() - y).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Generate, RandomWalkVariance) {
  SSModel model;
  model.F = Matrix::Identity(1, 1);
  model.H = Matrix::Identity(1, 1);
  model.Q0 = Matrix::Identity(1, 1);
  model.R0 = Matrix::Identity(1, 1);
  const std::size_t T = 50;
  auto s = NoiseSchedule::constant(1.0, 1e-12, T, NoiseFamily::kGaussian);
  Rng rng(6);
  const Vector x0 = Vector::Zero(1);
  std::vector<double> end;
  for (int i = 0; i < 10000; ++i) end.push_back(generate(model, s, T, x0, rng).states(T - 1, 0));
  EXPECT_NEAR(moments(end).var, static_cast<double>(T), 0.1 * T);
}

TEST(Generate, SowMatchesScheduleRatio) {
  const SSModel model = identity_model(2);
  auto s = NoiseSchedule::jump(1.0, 1.0, 0.1, 0.05, 5, 10, NoiseFamily::kGaussian);
  Rng rng(7);
  Trajectory tr = generate(model, s, 10, Vector::Zero(2), rng);
  for (std::size_t t = 0; t < 10; ++t) EXPECT_NEAR(tr.sow[t], s.q2[t] / s.r2[t], 1e-12);
}

TEST(Generate, DeterministicForSameSeed) {
  Rng r1(8);
  const SSModel model = [&] {
    SSModel m = identity_model(2);
    m.Q0 = random_spd(2, r1);
    m.R0 = random_spd(2, r1);
    return m;
  }();
  auto s = NoiseSchedule::constant(0.5, 2.0, 30, NoiseFamily::kGaussian);
  Rng a(9);
  Rng b(9);
  Trajectory ta = generate(model, s, 30, Vector::Zero(2), a);
  Trajectory tb = generate(model, s, 30, Vector::Zero(2), b);
  EXPECT_EQ(ta.states, tb.states);
  EXPECT_EQ(ta.observations, tb.observations);
}

TEST(Generate, ShortScheduleThrows) {
  Rng rng(1);
  auto s = NoiseSchedule::constant(1.0, 1.0, 5, NoiseFamily::kGaussian);
  EXPECT_THROW(generate(identity_model(2), s, 6, Vector::Zero(2), rng), ContractViolation);
}

TEST(DeriveSeed, DistinctKeysDistinctStreams) {
  EXPECT_NE(derive_seed(1, "train"), derive_seed(1, "test"));
  EXPECT_NE(derive_seed(1, "train"), derive_seed(2, "train"));
  EXPECT_EQ(derive_seed(3, "x"), derive_seed(3, "x"));
}

TEST(DatasetIo, RoundTripIsBitExact) {
  const SSModel model = identity_model(2);
  Dataset ds;
  ds.family = NoiseFamily::kExponential;
  ds.split = SplitTag::kPseudoStationary;
  Rng rng(10);
  auto s = NoiseSchedule::jump(1.0, 1.0, 0.1, 3.0, 4, 12, NoiseFamily::kExponential);
  for (int i = 0; i < 3; ++i) ds.trajectories.push_back(generate(model, s, 12, Vector::Ones(2), rng));
  const auto path = std::filesystem::temp_directory_path() / "aknet_test_ds.akds";
  save_dataset(path, ds);
  Dataset back = load_dataset(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), ds.size());
  EXPECT_EQ(back.family, ds.family);
  EXPECT_EQ(back.split, ds.split);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.trajectories[i].states, ds.trajectories[i].states);
    EXPECT_EQ(back.trajectories[i].observations, ds.trajectories[i].observations);
    EXPECT_EQ(back.trajectories[i].sow, ds.trajectories[i].sow);
    EXPECT_EQ(back.trajectories[i].q2, ds.trajectories[i].q2);
    EXPECT_EQ(back.trajectories[i].r2, ds.trajectories[i].r2);
    EXPECT_EQ(back.trajectories[i].x0, ds.trajectories[i].x0);
  }
}

TEST(DatasetIo, ModelRoundTrip) {
  Rng rng(11);
  SSModel model = identity_model(3);
  model.Q0 = random_spd(3, rng);
  model.R0 = random_spd(3, rng);
  const auto path = std::filesystem::temp_directory_path() / "aknet_test_model.akm";
  save_model(path, model);
  SSModel back = load_model(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.F, model.F);
  EXPECT_EQ(back.H, model.H);
  EXPECT_EQ(back.Q0, model.Q0);
  EXPECT_EQ(back.R0, model.R0);
}

TEST(DatasetIo, GarbageIsRejected) {
  const auto path = std::filesystem::temp_directory_path() / "aknet_test_bad.akds";
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE0000";
  }
  EXPECT_THROW(load_dataset(path), FormatError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace aknet
