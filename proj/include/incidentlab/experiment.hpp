#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "incidentlab/demand.hpp"
#include "incidentlab/ensemble.hpp"
#include "incidentlab/features.hpp"
#include "incidentlab/gbdt.hpp"
#include "incidentlab/incidents.hpp"
#include "incidentlab/keyvalue.hpp"
#include "incidentlab/metrics.hpp"
#include "incidentlab/microsim.hpp"
#include "incidentlab/validate.hpp"

namespace incidentlab {

struct ExperimentConfig {
  std::string network;
  std::string counts;
  std::string params;  // optional pre-fitted flow parameters
  int days = 31;
  int eval_days = 1;
  std::uint64_t seed = 1;
  std::int64_t horizon_s = 86400;
  double demand_scale = 1.0;
  std::vector<std::string> sensors;        // empty: every sensor-site node
  std::vector<std::string> sweep_sensors;  // priority order for sweep-sparsity
  double sensor_range_m = 50.0;
  WindowConfig window;
  IncidentPlanConfig incidents;
  SimConfig sim;
  TreeEnsembleConfig trees;
  double threshold = 0.5;
  std::string output = "out";

  void validate() const;
};

/// Relative paths inside the document resolve against `base_dir`.
ExperimentConfig experiment_config_from(const KeyValueDoc& doc, const std::string& base_dir = "");
ExperimentConfig load_experiment_config(const std::string& path);
/// Every field with defaults resolved.
KeyValueDoc experiment_config_doc(const ExperimentConfig& cfg);

struct DemandFit {
  MacroCountSeries average;
  FlowModelParams init;
  FlowModelParams fitted;
  LmTrace trace;
};

DemandFit fit_demand(const std::string& counts_path);
std::string format_fit_report(const DemandFit& fit);
/// cfg.params when set, otherwise a fresh fit of cfg.counts.
FlowModelParams resolve_params(const ExperimentConfig& cfg);

SensorPlacement experiment_placement(const ExperimentConfig& cfg, const RoadNetwork& network,
                                     const std::vector<std::string>& sensors);

/// Seeds per day; evaluation days draw from a stream disjoint from training days.
std::uint64_t day_seed(std::uint64_t base, bool eval, int day);

struct DayData {
  SpawnSchedule schedule;
  std::vector<IncidentSpec> plan;
  RunResult result;
};

DayData simulate_day(const ExperimentConfig& cfg, const RoadNetwork& network, const FlowModelParams& params,
                     const SensorPlacement& placement, std::uint64_t seed);

/// Writes raw.csv, incidents.csv, entries.csv and placement.kv.
void write_day(const RoadNetwork& network, const DayData& day, const std::string& dir);

/// Writes train/day_NNN and eval/day_NNN under cfg.output plus the resolved config.
void simulate_experiment(const ExperimentConfig& cfg);

FeatureTable day_features(const RawDataset& raw, const std::vector<IncidentSpec>& log, const RoadNetwork& network,
                          const WindowConfig& window);

/// A day directory (holding raw.csv) or a parent of day_* directories; days
/// are concatenated with window_end_s shifted by day index * horizon.
FeatureTable extract_features(const std::string& raw_dir, const RoadNetwork& network, const WindowConfig& window);

std::vector<ValidationRow> validate_days(const std::string& raw_dir, const std::string& counts_path,
                                         double demand_scale, std::int64_t bin_s = 900);

/// Writes `path` (key-value report) and `path.csv` (one-row summary).
void write_report(const EvalReport& report, const std::string& path, const std::string& label);

struct PipelineResult {
  EvalReport report;
  EnsembleModel model;
  FeatureTable train;
  FeatureTable eval;
  std::vector<IncidentPrediction> predictions;
};

/// Simulate training and evaluation days, extract features, train, evaluate.
/// Outputs land under out_dir when it is non-empty.
PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::string& out_dir);

struct SweepLevel {
  std::size_t n_sensors = 0;
  std::vector<std::string> sensors;
  EvalReport report;
};

/// Simulates once with the full priority list, then retrains and evaluates
/// on the first k sensors for each requested k.
std::vector<SweepLevel> sweep_sparsity(const ExperimentConfig& cfg, const std::vector<int>& levels,
                                       const std::string& out_dir);

}  // namespace incidentlab
