#include "aknet/errors.hpp"
#include "aknet/filter/aknet_filter.hpp"
#include "aknet/hypercm/hyper_net.hpp"
#include "aknet/kf/kalman_filter.hpp"
#include "aknet/kgain/gain_net.hpp"
#include "aknet/training/trainer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace aknet {
namespace {

SSModel model_2x2(std::uint64_t seed) {
  Rng rng(seed);
  SSModel m;
  m.F = rotation_decay(2, 0.95, 0.3);
  m.H = Matrix::Identity(2, 2);
  m.Q0 = random_spd(2, rng);
  m.R0 = random_spd(2, rng);
  return m;
}

Dataset make_data(const SSModel& m, std::vector<std::pair<double, double>> pairs,
                  std::size_t per_pair, std::size_t T, std::uint64_t seed) {
  Dataset ds;
  Rng rng(seed);
  for (auto [q2, r2] : pairs) {
    auto sched = NoiseSchedule::constant(q2, r2, T, NoiseFamily::kGaussian);
    for (std::size_t i = 0; i < per_pair; ++i) {
      ds.trajectories.push_back(generate(m, sched, T, Vector::Zero(2), rng));
    }
  }
  return ds;
}

GainNet small_net(std::uint64_t seed, Index hidden = 6) {
  GainNetConfig cfg;
  cfg.hidden = hidden;
  Rng rng(seed);
  return GainNet::create(cfg, rng);
}

TrainConfig quick(Stage stage, std::size_t epochs, double step) {
  TrainConfig c;
  c.stage = stage;
  c.epochs = epochs;
  c.batch_size = 4;
  c.step_size = step;
  c.patience = epochs + 1;
  c.seed = 42;
  return c;
}

TEST(Loss, PerfectEstimatesGiveZero) {
  const SSModel m = model_2x2(1);
  Dataset ds = make_data(m, {{1.0, 1.0}}, 1, 10, 2);
  const Trajectory& tr = ds.trajectories[0];
  EXPECT_EQ(trajectory_mse(tr, tr.states, 0), 0.0);
}

TEST(Loss, ZeroEstimatorOnSingleStep) {
  SSModel m = model_2x2(3);
  Trajectory tr;
  tr.x0 = Vector::Zero(2);
  tr.states = Matrix(1, 2);
  tr.states << 3.0, 4.0;
  tr.observations = Matrix::Zero(1, 2);
  tr.sow = {1.0};
  tr.q2 = {1.0};
  tr.r2 = {1.0};
  Dataset ds;
  ds.trajectories.push_back(tr);
  GainNetConfig cfg;
  cfg.hidden = 4;
  GainNet zero(cfg);
  EXPECT_DOUBLE_EQ(loss(m, zero, nullptr, ds), 25.0);
  EXPECT_DOUBLE_EQ(trajectory_mse(tr, Matrix::Zero(1, 2), 0), 25.0);
}

TEST(Loss, MeanOfPerTrajectoryErrors) {
  const SSModel m = model_2x2(4);
  Dataset ds = make_data(m, {{1.0, 1.0}, {0.1, 3.0}}, 3, 15, 5);
  GainNet net = small_net(6);
  double expect = 0.0;
  for (const auto& tr : ds.trajectories) {
    const Trajectory* batch[] = {&tr};
    const std::vector<double>* sows[] = {&tr.sow};
    Matrix est = aknet_filter(m, net, nullptr, batch, sows)[0];
    double s = 0.0;
    for (Index t = 0; t < est.rows(); ++t) {
      for (Index j = 0; j < 2; ++j) s += std::pow(est(t, j) - tr.states(t, j), 2);
    }
    expect += s / static_cast<double>(est.rows()) / static_cast<double>(ds.size());
  }
  EXPECT_NEAR(loss(m, net, nullptr, ds), expect, 1e-12 * expect);
}

TEST(Loss, ZeroGainNetGivesMeanSquaredStateNorm) {
  SSModel m = model_2x2(7);
  m.F = Matrix::Zero(2, 2);
  Dataset ds = make_data(m, {{1.0, 1.0}}, 4, 12, 8);
  GainNetConfig cfg;
  cfg.hidden = 4;
  GainNet zero(cfg);
  double expect = 0.0;
  for (const auto& tr : ds.trajectories) expect += tr.states.squaredNorm() / 12.0 / 4.0;
  EXPECT_NEAR(loss(m, zero, nullptr, ds), expect, 1e-12 * expect);
}

TEST(Split, StratifiedAndDisjoint) {
  const SSModel m = model_2x2(9);
  Dataset ds = make_data(m, {{1.0, 1.0}, {0.1, 10.0}, {10.0, 0.1}}, 10, 5, 10);
  ds.trajectories.push_back(make_data(m, {{5.0, 5.0}}, 1, 5, 11).trajectories[0]);
  Split s = stratified_split(ds, 0.2, 12);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  for (auto i : s.validation) EXPECT_TRUE(all.insert(i).second) << "index in both sets";
  EXPECT_EQ(all.size(), ds.size());
  for (std::size_t g = 0; g < 3; ++g) {
    const auto in_group = std::count_if(s.validation.begin(), s.validation.end(),
                                        [&](std::size_t i) { return i / 10 == g; });
    EXPECT_EQ(in_group, 2);
  }
  EXPECT_TRUE(std::find(s.train.begin(), s.train.end(), 30u) != s.train.end());
  Split again = stratified_split(ds, 0.2, 12);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.validation, s.validation);
}

TEST(TrainStage1, ZeroEpochsLeaveInitialisation) {
  const SSModel m = model_2x2(13);
  Dataset ds = make_data(m, {{1.0, 1.0}}, 10, 20, 14);
  GainNet net = small_net(15);
  const ParamStore before = net.params();
  TrainReport r = train_stage1(m, ds, net, quick(Stage::kStage1, 0, 1e-3));
  EXPECT_EQ(net.params(), before);
  ASSERT_EQ(r.epochs.size(), 1u);
  EXPECT_EQ(r.best_epoch, 0u);
}

TEST(TrainStage1, ReducesLossAndRestoresBest) {
  const SSModel m = model_2x2(16);
  Dataset ds = make_data(m, {{1.0, 1.0}}, 20, 30, 17);
  GainNet net = small_net(18);
  std::size_t callbacks = 0;
  TrainConfig cfg = quick(Stage::kStage1, 8, 1e-2);
  cfg.on_epoch = [&](const EpochRecord&) { ++callbacks; };
  TrainReport r = train_stage1(m, ds, net, cfg);
  EXPECT_FALSE(r.diverged);
  EXPECT_EQ(callbacks, r.epochs.size());
  EXPECT_LT(r.best_val_loss, r.epochs.front().val_loss);
  EXPECT_LE(r.best_val_loss, r.final_val_loss);
  double best_so_far = r.epochs.front().val_loss;
  for (const auto& e : r.epochs) best_so_far = std::min(best_so_far, e.val_loss);
  EXPECT_EQ(best_so_far, r.best_val_loss);
  // the restored parameters are the best-validation ones
  Split s = stratified_split(ds, cfg.validation_fraction, cfg.seed);
  EXPECT_NEAR(loss(m, net, nullptr, ds, s.validation), r.best_val_loss, 1e-12 * r.best_val_loss);
}

TEST(TrainStage1, SameSeedSameResult) {
  const SSModel m = model_2x2(19);
  Dataset ds = make_data(m, {{1.0, 1.0}}, 10, 20, 20);
  GainNet a = small_net(21);
  GainNet b = small_net(21);
  train_stage1(m, ds, a, quick(Stage::kStage1, 3, 1e-2));
  train_stage1(m, ds, b, quick(Stage::kStage1, 3, 1e-2));
  EXPECT_EQ(a.params(), b.params());
}

TEST(TrainStage1, DivergenceKeepsLastFiniteParameters) {
  const SSModel m = model_2x2(22);
  Dataset ds = make_data(m, {{1.0, 1.0}}, 10, 60, 23);
  GainNet net = small_net(24);
  TrainReport r = train_stage1(m, ds, net, quick(Stage::kStage1, 5, 1e6));
  EXPECT_TRUE(r.diverged) << r.note;
  for (double v : net.params().values()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_TRUE(std::isfinite(r.best_val_loss));
  Split s = stratified_split(ds, 0.2, 42);
  EXPECT_NEAR(loss(m, net, nullptr, ds, s.validation), r.best_val_loss, 1e-9 * r.best_val_loss);
}

TEST(TrainStage2, ThetaUntouchedPsiTrained) {
  const SSModel m = model_2x2(25);
  Dataset ds = make_data(m, {{0.1, 10.0}, {10.0, 0.1}}, 8, 20, 26);
  GainNet net = small_net(27);
  Rng rng(28);
  HyperNet hyper = HyperNet::create(net, 3, rng);
  const ParamStore theta = net.params();
  const ParamStore psi = hyper.params();
  TrainReport r = train_stage2(m, ds, net, hyper, quick(Stage::kStage2, 3, 1e-2));
  EXPECT_EQ(r.stage, Stage::kStage2);
  EXPECT_EQ(net.params(), theta);
  EXPECT_NE(hyper.params(), psi);
}

TEST(TrainConfig, RejectsBadValues) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ContractViolation);
  c = TrainConfig{};
  c.step_size = -1.0;
  EXPECT_THROW(c.validate(), ContractViolation);
  c = TrainConfig{};
  c.validation_fraction = 1.0;
  EXPECT_THROW(c.validate(), ContractViolation);
}

TEST(Evaluate, KfOracleDelegatesToKalmanFilter) {
  const SSModel m = model_2x2(29);
  Dataset ds = make_data(m, {{0.3, 2.0}}, 20, 40, 30);
  EvalOptions opt;
  auto groups = evaluate_kf(m, ds, opt);
  ASSERT_EQ(groups.size(), 1u);
  double expect = 0.0;
  for (const auto& tr : ds.trajectories) {
    KFRun run = kf_run_scaled(m, tr.q2, tr.r2, tr.observations, tr.x0, Matrix::Zero(2, 2));
    expect += trajectory_mse(tr, run.estimates, 0) / 20.0;
  }
  EXPECT_NEAR(groups[0].mse, expect, 1e-12 * expect);
  EXPECT_NEAR(groups[0].mse_db, 10.0 * std::log10(expect), 1e-10);
  EXPECT_EQ(groups[0].count, 20u);
  EXPECT_DOUBLE_EQ(groups[0].q2, 0.3);
  EXPECT_DOUBLE_EQ(groups[0].r2, 2.0);
}

TEST(Evaluate, KfErrorScalesWithJointNoiseScale) {
  const SSModel m = model_2x2(31);
  EvalOptions opt;
  const double base = evaluate_kf(m, make_data(m, {{0.5, 2.0}}, 10, 30, 32), opt)[0].mse_db;
  for (double c : {0.1, 10.0, 100.0}) {
    // same seed: every noise draw is scaled by sqrt(c)
    const double db = evaluate_kf(m, make_data(m, {{0.5 * c, 2.0 * c}}, 10, 30, 32), opt)[0].mse_db;
    EXPECT_NEAR(db - base, 10.0 * std::log10(c), 1e-8);
  }
}

TEST(Evaluate, GroupsBySchedule) {
  const SSModel m = model_2x2(33);
  Dataset ds = make_data(m, {{1.0, 1.0}, {0.1, 0.1}}, 5, 10, 34);
  GainNet net = small_net(35);
  auto groups = evaluate(m, ds, net, nullptr, EvalOptions{});
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].count + groups[1].count, 10u);
}

TEST(Evaluate, GridNeedsNetworksForKalmanFilter) {
  const SSModel m = model_2x2(36);
  Dataset ds = make_data(m, {{1.0, 1.0}}, 2, 10, 37);
  EvalOptions opt;
  opt.sow_source = SowSource::kGrid;
  EXPECT_THROW(evaluate_kf(m, ds, opt), UnsupportedConfiguration);
}

TEST(SowSource, Names) {
  EXPECT_EQ(parse_sow_source("oracle"), SowSource::kOracle);
  EXPECT_EQ(parse_sow_source("corr"), SowSource::kCorr);
  EXPECT_EQ(parse_sow_source("estimator"), SowSource::kCorr);
  EXPECT_EQ(parse_sow_source("grid"), SowSource::kGrid);
  EXPECT_THROW(parse_sow_source("psychic"), ContractViolation);
}

}  // namespace
}  // namespace aknet
