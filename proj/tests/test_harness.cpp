#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "coalcoag/config.hpp"
#include "coalcoag/harness.hpp"

using namespace coalcoag;

namespace {

json small_critical() {
  return json::parse(R"({
    "d": 2, "W": [[0, 1], [1, 0]], "alpha": [1, 1], "regime": "critical",
    "beta": [0.5, 0.5], "c": 1, "seed": 17,
    "experiment": "convergence_critical", "K_list": [10, 20], "replicates": 40,
    "times": [1.0, 0.5], "lambda_grid": [[1, 1]], "n_max": 12, "indicator_max": 2, "dt": 0.01
  })");
}

std::string report(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  write_report(os, rows);
  return os.str();
}

}  // namespace

TEST(Config, ModelFromJson) {
  const auto p = model_from_json(json::parse(R"({"d": 2, "W": [[0, 2], [1, 0]], "alpha": [1, 3], "K": 4, "L0": [3, 5]})"));
  EXPECT_EQ(p.N, 8);
  EXPECT_EQ(p.regime, Regime::Critical);
  EXPECT_DOUBLE_EQ(p.W[0][1], 2.0);
  const auto v = validate_params(p);
  EXPECT_DOUBLE_EQ(v.gamma, 2.0);
}

TEST(Config, BadRegime) {
  EXPECT_THROW(model_from_json(json::parse(R"({"d": 1, "W": [[0]], "alpha": [1], "regime": "huge"})")), Error);
}

TEST(Config, MissingKey) {
  try {
    model_from_json(json::parse(R"({"d": 1, "alpha": [1]})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidParameter);
  }
}

TEST(Config, ExperimentKeys) {
  const auto cfg = experiment_from_json(small_critical());
  EXPECT_EQ(cfg.kind, ExperimentKind::ConvergenceCritical);
  EXPECT_EQ(cfg.seed, 17u);
  EXPECT_EQ(cfg.K_list, (std::vector<double>{10, 20}));
  EXPECT_EQ(cfg.replicates, 40u);
  EXPECT_EQ(cfg.n_max, 12);
  EXPECT_THROW(experiment_from_json(json::parse(R"({"d": 1, "W": [[0]], "alpha": [1], "experiment": "nope"})")), Error);
}

TEST(ValidateConfig, SortsTimesAndFillsDefaults) {
  auto cfg = experiment_from_json(small_critical());
  cfg.lambda_grid.clear();
  const auto v = validate_config(cfg);
  EXPECT_EQ(v.times, (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(v.lambda_grid, (std::vector<std::vector<double>>{{1.0, 1.0}}));
  EXPECT_EQ(v.start, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(v.kingman_times, v.times);
}

TEST(ValidateConfig, Rejections) {
  const auto base = experiment_from_json(small_critical());
  auto cfg = base;
  cfg.K_list = {10, -1};
  EXPECT_THROW(validate_config(cfg), Error);
  cfg = base;
  cfg.replicates = 0;
  EXPECT_THROW(validate_config(cfg), Error);
  cfg = base;
  cfg.times.clear();
  EXPECT_THROW(validate_config(cfg), Error);
  cfg = base;
  cfg.lambda_grid = {{1.0, 0.0}};
  try {
    validate_config(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveLambda);
  }
  cfg = base;
  cfg.model.regime = Regime::Large;
  cfg.times = {0.0, 1.0};
  EXPECT_THROW(validate_config(cfg), Error);
}

TEST(ParamsForK, Schedules) {
  auto cfg = experiment_from_json(small_critical());
  cfg.model.c = 2.0;
  auto p = params_for_K(cfg, 50.0);
  EXPECT_EQ(p.N, 100);
  EXPECT_EQ(p.L0, (std::vector<std::int64_t>{50, 50}));
  cfg.model.regime = Regime::Large;
  p = params_for_K(cfg, 100.0);
  EXPECT_EQ(p.N, 1000);
  EXPECT_DOUBLE_EQ(p.scale, 10.0);
  EXPECT_DOUBLE_EQ(p.b, 1.0);
}

TEST(Evaluate, Comparisons) {
  EXPECT_TRUE(evaluate(Comparison::Within, 1.05, 1.0, 0.1));
  EXPECT_FALSE(evaluate(Comparison::Within, 1.2, 1.0, 0.1));
  EXPECT_TRUE(evaluate(Comparison::AtMost, 1.05, 1.0, 0.1));
  EXPECT_FALSE(evaluate(Comparison::AtMost, 1.2, 1.0, 0.1));
  EXPECT_TRUE(evaluate(Comparison::AtLeast, 0.95, 1.0, 0.1));
  EXPECT_FALSE(evaluate(Comparison::AtLeast, 0.8, 1.0, 0.1));
  EXPECT_TRUE(evaluate(Comparison::Info, 1e9, 0.0, 0.0));
}

TEST(RunExperiment, DeterministicAcrossThreadCounts) {
  auto cfg = experiment_from_json(small_critical());
  cfg.threads = 1;
  const auto one = report(run_experiment(cfg));
  cfg.threads = 3;
  const auto three = report(run_experiment(cfg));
  EXPECT_EQ(one, three);
  EXPECT_EQ(one, report(run_experiment(cfg)));
  cfg.seed = 18;
  EXPECT_NE(one, report(run_experiment(cfg)));
}

TEST(RunExperiment, PassFlagsRecomputable) {
  auto cfg = experiment_from_json(small_critical());
  for (auto kind : {ExperimentKind::ConvergenceCritical, ExperimentKind::Coupling, ExperimentKind::MomentBounds}) {
    cfg.kind = kind;
    const auto rows = run_experiment(cfg);
    ASSERT_FALSE(rows.empty());
    for (const auto& r : rows) {
      EXPECT_EQ(r.pass, r.recomputed_pass()) << r.observable;
      EXPECT_EQ(r.experiment, to_string(kind));
    }
  }
}

TEST(RunExperiment, ReportHeader) {
  const auto text = report({make_row("coupling", 10, 1, -1, "x", 1.0, 1.0, 0.0, 0.0, Comparison::Within)});
  EXPECT_EQ(text,
            "experiment,K,t,colony,observable,simulated,reference,std_error,tolerance,comparison,pass\n"
            "coupling,10,1,-1,x,1,1,0,0,within,true\n");
}

TEST(RunExperiment, ModelWithoutKList) {
  auto j = small_critical();
  j.erase("K_list");
  j["K"] = 10;
  j["L0"] = {5, 5};
  j.erase("beta");
  const auto rows = run_experiment(experiment_from_json(j));
  for (const auto& r : rows) EXPECT_DOUBLE_EQ(r.K, 10.0);
}

TEST(Csv, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
}
