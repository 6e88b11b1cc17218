#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "incidentlab/experiment.hpp"
#include "test_support.hpp"

using namespace incidentlab;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const std::string& out) {
  KeyValueDoc d = KeyValueDoc::parse(
      "network = grid4x4.net\n"
      "counts = tempe_like_counts.csv\n"
      "days = 2\neval_days = 1\nseed = 5\nhorizon_s = 3600\ndemand_scale = 2.5\n"
      "sensors = n11;n12;n21;n22\n"
      "window.window_s = 300\nwindow.stride_s = 60\n"
      "incidents.p_incident = 0.004\n"
      "trees.n_trees = 20\ntrees.max_depth = 3\ntrees.min_samples_leaf = 10\n");
  auto cfg = experiment_config_from(d, INCIDENTLAB_DATA_DIR);
  cfg.output = out;
  cfg.validate();
  return cfg;
}

}  // namespace

TEST(ExperimentConfig, ParsesShippedConfig) {
  const auto cfg = load_experiment_config(testsupport::data_path("../configs/grid.cfg"));
  EXPECT_EQ(cfg.days, 6);
  EXPECT_EQ(cfg.sensors, (std::vector<std::string>{"n11", "n12", "n21", "n22"}));
  EXPECT_EQ(cfg.window.window_s, 300);
  EXPECT_EQ(cfg.trees.max_depth, 3);
  EXPECT_TRUE(fs::path(cfg.network).is_absolute());
  EXPECT_TRUE(fs::exists(cfg.network));
  EXPECT_EQ(fs::path(cfg.output).filename(), "grid");

  // the resolved document parses back to the same settings
  const auto doc = experiment_config_doc(cfg);
  const auto back = experiment_config_from(KeyValueDoc::parse(doc.str()));
  EXPECT_EQ(experiment_config_doc(back).str(), doc.str());
  EXPECT_EQ(back.trees, cfg.trees);
}

TEST(ExperimentConfig, Errors) {
  EXPECT_THROW(experiment_config_from(KeyValueDoc::parse("netwrok = x\n")), ValidationError);
  auto cfg = experiment_config_from(KeyValueDoc::parse("network = missing.net\ncounts = c.csv\n"), "/nonexistent");
  EXPECT_EQ(cfg.network, "/nonexistent/missing.net");
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = small_config("unused");
  cfg.threshold = 1.5;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = small_config("unused");
  cfg.window.window_s = 450;
  EXPECT_THROW(cfg.validate(), ValidationError);
  EXPECT_THROW(experiment_config_from(KeyValueDoc::parse("window.label_mode = sometimes\n")), ParseError);
}

TEST(Experiment, DaySeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (int d = 0; d < 100; ++d) {
    seen.insert(day_seed(7, false, d));
    seen.insert(day_seed(7, true, d));
  }
  EXPECT_EQ(seen.size(), 200u);
  EXPECT_EQ(day_seed(7, true, 3), day_seed(7, true, 3));
  EXPECT_NE(day_seed(7, false, 0), day_seed(8, false, 0));
}

TEST(Experiment, SimulateDayIsDeterministic) {
  const auto cfg = small_config("unused");
  const auto& net = testsupport::grid();
  const auto params = resolve_params(cfg);
  const auto placement = experiment_placement(cfg, net, cfg.sensors);
  const auto a = simulate_day(cfg, net, params, placement, 42);
  const auto b = simulate_day(cfg, net, params, placement, 42);
  EXPECT_EQ(a.result.raw, b.result.raw);
  EXPECT_EQ(a.result.incident_log, b.result.incident_log);
  const auto c = simulate_day(cfg, net, params, placement, 43);
  EXPECT_NE(a.result.raw, c.result.raw);
}

TEST(Experiment, PipelineWritesOutputs) {
  const auto dir = testsupport::temp_dir("pipeline");
  const auto cfg = small_config(dir);
  const auto res = run_pipeline(cfg, dir);
  EXPECT_GT(res.train.rows.size(), 0u);
  EXPECT_EQ(res.eval.rows.size(), res.predictions.size());
  EXPECT_EQ(res.report.counts.total(), static_cast<std::int64_t>(res.eval.rows.size()));
  EXPECT_EQ(res.report.gating_violations, 0);
  std::size_t positives = 0;
  for (const auto& r : res.train.rows) positives += r.label_incident;
  EXPECT_GT(positives, 0u);
  EXPECT_EQ(res.model.localizer_rows, positives);
  EXPECT_EQ(res.model.detector_rows, res.train.rows.size());
  for (const auto* p : {"train/day_000/raw.csv", "train/day_001/incidents.csv", "eval/day_000/raw.csv"}) {
    EXPECT_TRUE(fs::exists(dir + "/" + p)) << p;
  }

  // the written days reproduce the in-memory feature tables
  const auto eval = extract_features(dir + "/eval", testsupport::grid(), cfg.window);
  EXPECT_EQ(eval.rows, res.eval.rows);
  const auto train = extract_features(dir + "/train", testsupport::grid(), cfg.window);
  EXPECT_EQ(train.rows.size(), res.train.rows.size());
  EXPECT_EQ(train.rows.back().window_end_s, res.train.rows.back().window_end_s);

  const auto rows = validate_days(dir + "/train", cfg.counts, cfg.demand_scale, 600);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].day, "day_000");
}
