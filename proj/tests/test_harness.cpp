#include "aknet/errors.hpp"
#include "aknet/harness/config.hpp"
#include "aknet/harness/experiments.hpp"
#include "aknet/harness/results.hpp"
#include "aknet/harness/svg_plot.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace aknet {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("aknet_harness_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig tiny(const std::string& experiment, std::uint64_t seed) {
  ExperimentConfig c = default_config(experiment);
  c.seed = seed;
  c.hidden = 4;
  c.hyper_hidden = 3;
  c.train_per_pair = 6;
  c.stationary_count = 6;
  c.length = 15;
  c.test_per_point = 4;
  c.test_ratio_count = 3;
  c.jump_length = 20;
  c.jump_step = 10;
  c.r2_after = {0.1, 1.0};
  c.stage1_epochs = 2;
  c.stage2_epochs = 2;
  c.stage1_batch = 4;
  c.stage2_batch = 4;
  return c;
}

TEST(Config, DumpParsesBackToSameConfig) {
  ExperimentConfig c = default_config("exponential-grid");
  c.seed = 17;
  c.train_sows = {0.02, 0.2, 2.0};
  c.checkpoint = "nets/ck.akck";
  c.train = false;
  c.stage2_step = 0.0042;
  ExperimentConfig back = parse_config(dump_config(c), ExperimentConfig{});
  EXPECT_EQ(dump_config(back), dump_config(c));
  EXPECT_EQ(back.norm, FeatureNorm::kRunningRms);
  EXPECT_EQ(back.train_sows, c.train_sows);
  EXPECT_EQ(back.stage2_step, 0.0042);
}

TEST(Config, CommentsAndBlankLines) {
  ExperimentConfig c = parse_config("# header\n\nseed = 9  # trailing\n scales = 2, 3\n",
                                    ExperimentConfig{});
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.scales, (std::vector<double>{2.0, 3.0}));
}

TEST(Config, ErrorsNameLineAndKey) {
  try {
    parse_config("seed = 1\nbogus_key = 3\n", ExperimentConfig{});
    FAIL();
  } catch (const ContractViolation& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos);
    EXPECT_NE(msg.find("bogus_key"), std::string::npos);
  }
  EXPECT_THROW(parse_config("seed = -4\n", ExperimentConfig{}), ContractViolation);
  EXPECT_THROW(parse_config("corr_alpha = fast\n", ExperimentConfig{}), ContractViolation);
  EXPECT_THROW(parse_config("seed 4\n", ExperimentConfig{}), ContractViolation);
}

TEST(Config, Validation) {
  ExperimentConfig c;
  c.experiment = "nope";
  EXPECT_THROW(c.validate(), ContractViolation);
  c = ExperimentConfig{};
  c.noise = "laplace";
  EXPECT_THROW(c.validate(), ContractViolation);
  c = default_config("sow-jump");
  c.jump_step = c.jump_length;
  EXPECT_THROW(c.validate(), ContractViolation);
  EXPECT_THROW(default_config("nope"), ContractViolation);
  EXPECT_EQ(ExperimentConfig{}.hidden_size(), 40);
}

TEST(Experiments, PairsHaveTargetSow) {
  ExperimentConfig c = default_config("gaussian-grid");
  c.seed = 3;
  const SSModel m = make_model(c);
  EXPECT_NEAR(sow(m.Q0, m.R0), 1.0, 1e-12);
  for (double s : {0.01, 0.5, 10.0}) {
    auto [q2, r2] = pair_for_sow(m, s);
    EXPECT_NEAR(sow(q2 * m.Q0, r2 * m.R0), s, 1e-12 * s);
    EXPECT_NEAR(q2 * r2, 1.0, 1e-12);
  }
}

TEST(Experiments, TestRatiosSpanTrainedRange) {
  ExperimentConfig c;
  auto r = test_ratios(c);
  ASSERT_EQ(r.size(), 9u);
  EXPECT_NEAR(r.front(), 0.01, 1e-15);
  EXPECT_NEAR(r.back(), 10.0, 1e-12);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GT(r[i], r[i - 1]);
}

TEST(Experiments, JumpScheduleToggles) {
  ExperimentConfig c = default_config("sow-jump");
  c.jump_length = 10;
  c.jump_step = 4;
  auto single = jump_schedule(c, 5.0);
  EXPECT_EQ(single.r2[3], 1.0);
  EXPECT_EQ(single.r2[9], 5.0);
  c.jump_every = 2;
  auto toggled = jump_schedule(c, 5.0);
  const std::vector<double> expect{1, 1, 1, 1, 5, 5, 1, 1, 5, 5};
  EXPECT_EQ(toggled.r2, expect);
}

ResultTable sample_table() {
  ResultTable t;
  ResultRow r;
  r.experiment = "gaussian-grid";
  r.panel = "ratio";
  r.filter = "KF";
  r.q2 = 0.1;
  r.r2 = 10.0;
  r.sow = 0.01;
  r.sow_source = "oracle";
  r.per_trajectory = {0.5, 1.5, 1.0};
  r.mse_db = reaggregate_db(r);
  r.std_db = 0.3;
  r.count = 3;
  t.rows.push_back(r);
  r.filter = "AKNet";
  r.per_trajectory = {0.4, 1.7, 1.0 / 3.0};
  r.mse_db = reaggregate_db(r);
  t.rows.push_back(r);
  r.panel = "scaling";
  r.filter = "KF";
  r.q2 = 1.0;
  r.r2 = 100.0;
  t.rows.push_back(r);
  r.filter = "AKNet";
  r.mse_db += 0.2;
  t.rows.push_back(r);
  return t;
}

TEST(Results, CsvRoundTripIsExact) {
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  ResultTable t = sample_table();
  write_results_csv(dir / "results.csv", t);
  ResultTable back = read_results_csv(dir / "results.csv");
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].panel, t.rows[i].panel);
    EXPECT_EQ(back.rows[i].filter, t.rows[i].filter);
    EXPECT_EQ(back.rows[i].q2, t.rows[i].q2);
    EXPECT_EQ(back.rows[i].r2, t.rows[i].r2);
    EXPECT_EQ(back.rows[i].mse_db, t.rows[i].mse_db);
    EXPECT_EQ(back.rows[i].count, t.rows[i].count);
  }
  EXPECT_EQ(slurp(dir / "results.csv").substr(0, 61),
            "experiment,panel,filter,q2,r2,sow,sow_source,mse_db,std_db,n\n");
  fs::remove_all(dir);
}

TEST(Results, ReaggregateFromRawErrors) {
  ResultRow r;
  r.per_trajectory = {1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(reaggregate_db(r), 10.0 * std::log10(2.5));
}

TEST(Results, ValidateRejectsNonFinite) {
  ResultTable t = sample_table();
  t.rows[1].mse_db = NAN;
  EXPECT_THROW(t.validate(), ContractViolation);
}

TEST(Results, FindMatchesKey) {
  ResultTable t = sample_table();
  const ResultRow* r = t.find("ratio", "AKNet", "oracle", 0.1, 10.0);
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->filter, "AKNet");
  EXPECT_EQ(t.find("ratio", "AKNet", "corr", 0.1, 10.0), nullptr);
}

TEST(Plots, RebuiltFromCsvAlone) {
  const fs::path dir = scratch("plots");
  fs::create_directories(dir);
  write_results_csv(dir / "results.csv", sample_table());
  auto files = plot_results(read_results_csv(dir / "results.csv"), dir);
  ASSERT_EQ(files.size(), 2u);
  for (const auto& f : files) {
    const std::string svg = slurp(f);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u) << f;
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find("AKNet"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Pipeline, TinyGridIsDeterministic) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  ExperimentConfig c = tiny("gaussian-grid", 7);
  auto ra = run_experiment(c, a);
  auto rb = run_experiment(c, b);
  EXPECT_EQ(slurp(a / "results.csv"), slurp(b / "results.csv"));
  EXPECT_EQ(slurp(a / "errors.csv"), slurp(b / "errors.csv"));
  EXPECT_EQ(slurp(a / "checkpoint.akck"), slurp(b / "checkpoint.akck"));
  // four trained SoWs at four scales plus three ratios, KF and AKNet each
  EXPECT_EQ(ra.table.rows.size(), 2u * (4 * 4 + 3));
  EXPECT_TRUE(fs::exists(a / "gaussian-grid-ratio.svg"));
  EXPECT_TRUE(fs::exists(a / "gaussian-grid-scaling.svg"));

  ExperimentConfig other = c;
  other.seed = 8;
  auto rc = run_experiment(other, scratch("det_c"));
  EXPECT_NE(rc.table.rows[1].mse_db, ra.table.rows[1].mse_db);
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(scratch("det_c"));
}

TEST(Pipeline, JumpReusesCheckpoint) {
  const fs::path dir = scratch("jump");
  ExperimentConfig c = tiny("sow-jump", 5);
  auto first = run_experiment(c, dir);
  EXPECT_EQ(first.table.rows.size(), 4u * 2);
  c.checkpoint = (dir / "checkpoint.akck").string();
  c.train = false;
  auto again = run_experiment(c, dir / "reuse");
  ASSERT_EQ(again.table.rows.size(), first.table.rows.size());
  for (std::size_t i = 0; i < first.table.rows.size(); ++i) {
    EXPECT_EQ(again.table.rows[i].mse_db, first.table.rows[i].mse_db);
  }
  EXPECT_NE(again.report.find("loaded"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Pipeline, MissingCheckpointWithoutTrainingIsActionable) {
  ExperimentConfig c = tiny("sow-jump", 5);
  c.checkpoint = "/nonexistent/ck.akck";
  c.train = false;
  try {
    run_experiment(c, scratch("missing"));
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("train = true"), std::string::npos);
  }
}

}  // namespace
}  // namespace aknet
