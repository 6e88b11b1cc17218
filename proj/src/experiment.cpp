#include "incidentlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <set>
#include <thread>

namespace incidentlab {

namespace fs = std::filesystem;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "network", "counts", "params", "days", "eval_days", "seed", "horizon_s", "demand_scale", "sensors",
      "sensors.range_m", "sweep.sensors", "window.window_s", "window.stride_s", "window.label_mode",
      "window.staleness_s", "incidents.p_incident", "incidents.p_crash_given_incident",
      "incidents.minor_duration_min_s", "incidents.minor_duration_max_s", "incidents.severe_duration_min_s",
      "incidents.severe_duration_max_s", "incidents.p_severe", "incidents.base_radius_m",
      "incidents.severe_radius_multiplier", "incidents.slowdown_factor", "incidents.crash_vehicles", "sim.accel",
      "sim.decel", "sim.driver_imperfection", "sim.min_gap", "sim.vehicle_length", "trees.n_trees",
      "trees.max_depth", "trees.learning_rate", "trees.min_samples_leaf", "trees.subsample", "trees.seed",
      "trees.l2", "trees.max_bins", "trees.balance_classes", "threshold", "output"};
  return keys;
}

std::string resolve_path(const std::string& p, const std::string& base) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

std::vector<std::string> id_list(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& part : split(s, ';')) {
    const std::string t = trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::string day_name(int d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "day_%03d", d);
  return buf;
}

// Runs fn(0..n-1) on up to hardware_concurrency threads. Results must be
// written to per-index slots so that scheduling never affects output.
template <class Fn>
void parallel_for(int n, Fn fn) {
  const int workers = std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto body = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string format_predictions(const std::vector<IncidentPrediction>& preds) {
  std::string out = "window_end_s,score,detected,road_label,severity\n";
  for (const auto& p : preds) {
    out += std::to_string(p.window_end_s) + "," + format_double(p.score) + "," + (p.detected ? "1" : "0") + "," +
           p.road_label.value_or("") + "," + (p.severity ? to_string(*p.severity) : "") + "\n";
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (network.empty()) throw ValidationError("config: network path is required");
  if (!fs::exists(network)) throw ValidationError("config: network file '" + network + "' does not exist");
  if (params.empty() && counts.empty()) throw ValidationError("config: either counts or params is required");
  if (!params.empty() && !fs::exists(params)) throw ValidationError("config: params file '" + params + "' does not exist");
  if (params.empty() && !fs::exists(counts)) throw ValidationError("config: counts file '" + counts + "' does not exist");
  if (days < 1) throw ValidationError("config: days must be at least 1");
  if (eval_days < 1) throw ValidationError("config: eval_days must be at least 1");
  if (horizon_s < window.window_s) throw ValidationError("config: horizon must cover at least one window");
  if (!(demand_scale >= 0.0)) throw ValidationError("config: demand_scale must be non-negative");
  if (!(sensor_range_m > 0.0)) throw ValidationError("config: sensors.range_m must be positive");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("config: threshold must lie in (0, 1)");
  window.validate();
  incidents.validate();
  sim.validate();
  trees.validate();
}

ExperimentConfig experiment_config_from(const KeyValueDoc& doc, const std::string& base_dir) {
  for (const auto& [k, v] : doc.entries()) {
    if (!known_keys().count(k)) throw ValidationError("config: unknown key '" + k + "'");
  }
  ExperimentConfig c;
  c.network = resolve_path(doc.get_or("network", ""), base_dir);
  c.counts = resolve_path(doc.get_or("counts", ""), base_dir);
  c.params = resolve_path(doc.get_or("params", ""), base_dir);
  c.days = static_cast<int>(doc.get_int_or("days", c.days));
  c.eval_days = static_cast<int>(doc.get_int_or("eval_days", c.eval_days));
  c.seed = static_cast<std::uint64_t>(doc.get_int_or("seed", static_cast<std::int64_t>(c.seed)));
  c.horizon_s = doc.get_int_or("horizon_s", c.horizon_s);
  c.demand_scale = doc.get_double_or("demand_scale", c.demand_scale);
  c.sensors = id_list(doc.get_or("sensors", ""));
  c.sweep_sensors = id_list(doc.get_or("sweep.sensors", ""));
  c.sensor_range_m = doc.get_double_or("sensors.range_m", c.sensor_range_m);

  auto& w = c.window;
  w.window_s = doc.get_int_or("window.window_s", w.window_s);
  w.stride_s = doc.get_int_or("window.stride_s", w.stride_s);
  w.label_mode = parse_label_mode(doc.get_or("window.label_mode", to_string(w.label_mode)));
  w.staleness_s = doc.get_int_or("window.staleness_s", w.staleness_s);

  auto& i = c.incidents;
  i.p_incident = doc.get_double_or("incidents.p_incident", i.p_incident);
  i.p_crash_given_incident = doc.get_double_or("incidents.p_crash_given_incident", i.p_crash_given_incident);
  i.minor_duration_min_s = doc.get_int_or("incidents.minor_duration_min_s", i.minor_duration_min_s);
  i.minor_duration_max_s = doc.get_int_or("incidents.minor_duration_max_s", i.minor_duration_max_s);
  i.severe_duration_min_s = doc.get_int_or("incidents.severe_duration_min_s", i.severe_duration_min_s);
  i.severe_duration_max_s = doc.get_int_or("incidents.severe_duration_max_s", i.severe_duration_max_s);
  i.p_severe = doc.get_double_or("incidents.p_severe", i.p_severe);
  i.base_radius_m = doc.get_double_or("incidents.base_radius_m", i.base_radius_m);
  i.severe_radius_multiplier = doc.get_double_or("incidents.severe_radius_multiplier", i.severe_radius_multiplier);
  i.slowdown_factor = doc.get_double_or("incidents.slowdown_factor", i.slowdown_factor);
  i.crash_vehicles = static_cast<int>(doc.get_int_or("incidents.crash_vehicles", i.crash_vehicles));

  auto& s = c.sim;
  s.accel = doc.get_double_or("sim.accel", s.accel);
  s.decel = doc.get_double_or("sim.decel", s.decel);
  s.driver_imperfection = doc.get_double_or("sim.driver_imperfection", s.driver_imperfection);
  s.min_gap = doc.get_double_or("sim.min_gap", s.min_gap);
  s.vehicle_length = doc.get_double_or("sim.vehicle_length", s.vehicle_length);

  auto& t = c.trees;
  t.n_trees = static_cast<int>(doc.get_int_or("trees.n_trees", t.n_trees));
  t.max_depth = static_cast<int>(doc.get_int_or("trees.max_depth", t.max_depth));
  t.learning_rate = doc.get_double_or("trees.learning_rate", t.learning_rate);
  t.min_samples_leaf = static_cast<int>(doc.get_int_or("trees.min_samples_leaf", t.min_samples_leaf));
  t.subsample = doc.get_double_or("trees.subsample", t.subsample);
  t.seed = static_cast<std::uint64_t>(doc.get_int_or("trees.seed", static_cast<std::int64_t>(t.seed)));
  t.l2 = doc.get_double_or("trees.l2", t.l2);
  t.max_bins = static_cast<int>(doc.get_int_or("trees.max_bins", t.max_bins));
  t.balance_classes = doc.get_bool_or("trees.balance_classes", t.balance_classes);

  c.threshold = doc.get_double_or("threshold", c.threshold);
  c.output = resolve_path(doc.get_or("output", c.output), base_dir);
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const auto doc = KeyValueDoc::load(path);
  auto cfg = experiment_config_from(doc, fs::path(path).parent_path().string());
  cfg.validate();
  return cfg;
}

KeyValueDoc experiment_config_doc(const ExperimentConfig& c) {
  KeyValueDoc d;
  d.set("network", c.network);
  d.set("counts", c.counts);
  d.set("params", c.params);
  d.set("days", c.days);
  d.set("eval_days", c.eval_days);
  d.set("seed", static_cast<std::int64_t>(c.seed));
  d.set("horizon_s", c.horizon_s);
  d.set("demand_scale", c.demand_scale);
  d.set("sensors", join(c.sensors, ";"));
  d.set("sensors.range_m", c.sensor_range_m);
  d.set("sweep.sensors", join(c.sweep_sensors, ";"));
  d.set("window.window_s", c.window.window_s);
  d.set("window.stride_s", c.window.stride_s);
  d.set("window.label_mode", to_string(c.window.label_mode));
  d.set("window.staleness_s", c.window.staleness_s);
  const auto& i = c.incidents;
  d.set("incidents.p_incident", i.p_incident);
  d.set("incidents.p_crash_given_incident", i.p_crash_given_incident);
  d.set("incidents.minor_duration_min_s", i.minor_duration_min_s);
  d.set("incidents.minor_duration_max_s", i.minor_duration_max_s);
  d.set("incidents.severe_duration_min_s", i.severe_duration_min_s);
  d.set("incidents.severe_duration_max_s", i.severe_duration_max_s);
  d.set("incidents.p_severe", i.p_severe);
  d.set("incidents.base_radius_m", i.base_radius_m);
  d.set("incidents.severe_radius_multiplier", i.severe_radius_multiplier);
  d.set("incidents.slowdown_factor", i.slowdown_factor);
  d.set("incidents.crash_vehicles", i.crash_vehicles);
  d.set("sim.accel", c.sim.accel);
  d.set("sim.decel", c.sim.decel);
  d.set("sim.driver_imperfection", c.sim.driver_imperfection);
  d.set("sim.min_gap", c.sim.min_gap);
  d.set("sim.vehicle_length", c.sim.vehicle_length);
  const auto& t = c.trees;
  d.set("trees.n_trees", t.n_trees);
  d.set("trees.max_depth", t.max_depth);
  d.set("trees.learning_rate", t.learning_rate);
  d.set("trees.min_samples_leaf", t.min_samples_leaf);
  d.set("trees.subsample", t.subsample);
  d.set("trees.seed", static_cast<std::int64_t>(t.seed));
  d.set("trees.l2", t.l2);
  d.set("trees.max_bins", t.max_bins);
  d.set("trees.balance_classes", t.balance_classes);
  d.set("threshold", c.threshold);
  d.set("output", c.output);
  return d;
}

DemandFit fit_demand(const std::string& counts_path) {
  const auto roads = load_counts(counts_path);
  if (roads.empty()) throw ValidationError(counts_path + ": no count series");
  std::vector<MacroCountSeries> series;
  for (const auto& [label, s] : roads) series.push_back(s);
  DemandFit fit;
  fit.average = average_counts(series);
  fit.init = fft_init_params(fit.average);
  fit.fitted = lm_fit(fit.average, fit.init, LmConfig{}, &fit.trace);
  return fit;
}

std::string format_fit_report(const DemandFit& fit) {
  KeyValueDoc d;
  d.set("bins", static_cast<std::int64_t>(fit.average.counts.size()));
  d.set("bin_s", fit.average.bin_s);
  d.set("init_rmse", fit.init.fit_rmse);
  d.set("fit_rmse", fit.fitted.fit_rmse);
  d.set("alpha_sigma", fit.fitted.alpha_sigma);
  d.set("iterations", fit.trace.iterations);
  d.set("rejected_full_steps", fit.trace.rejected_full_steps);
  d.set("converged", fit.trace.converged);
  return d.str();
}

FlowModelParams resolve_params(const ExperimentConfig& cfg) {
  if (!cfg.params.empty()) return load_params(cfg.params);
  return fit_demand(cfg.counts).fitted;
}

SensorPlacement experiment_placement(const ExperimentConfig& cfg, const RoadNetwork& network,
                                     const std::vector<std::string>& sensors) {
  SensorPlacement p;
  p.range_m = cfg.sensor_range_m;
  p.sensor_ids = sensors;
  if (p.sensor_ids.empty()) {
    for (const auto& n : network.nodes()) {
      if (n.sensor_site) p.sensor_ids.push_back(n.id);
    }
  }
  std::sort(p.sensor_ids.begin(), p.sensor_ids.end());
  validate_placement(network, p);
  return p;
}

std::uint64_t day_seed(std::uint64_t base, bool eval, int day) {
  return mix_seed(base, (eval ? (1ULL << 32) : 0ULL) + static_cast<std::uint64_t>(day));
}

DayData simulate_day(const ExperimentConfig& cfg, const RoadNetwork& network, const FlowModelParams& params,
                     const SensorPlacement& placement, std::uint64_t seed) {
  DayData d;
  SpawnOptions opts;
  opts.demand_scale = cfg.demand_scale;
  d.schedule = spawn_schedule(params, network, cfg.horizon_s, mix_seed(seed, 1), opts);
  d.plan = plan_incidents(d.schedule, cfg.incidents, network, mix_seed(seed, 2));
  SimConfig sim = cfg.sim;
  sim.seed = mix_seed(seed, 3);
  d.result = run(network, d.schedule, d.plan, placement, sim, cfg.incidents);
  return d;
}

void write_day(const RoadNetwork& network, const DayData& day, const std::string& dir) {
  emit_raw(day.result.raw, day.result.incident_log, dir);
  write_text(dir + "/entries.csv", format_entries(network, day.result.entries));
}

void simulate_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto network = load_network(cfg.network);
  const auto params = resolve_params(cfg);
  const auto placement = experiment_placement(cfg, network, cfg.sensors);
  fs::create_directories(cfg.output);
  experiment_config_doc(cfg).save(cfg.output + "/config.resolved.kv");
  save_params(params, cfg.output + "/params.kv");
  const int total = cfg.days + cfg.eval_days;
  parallel_for(total, [&](int k) {
    const bool eval = k >= cfg.days;
    const int d = eval ? k - cfg.days : k;
    const auto day = simulate_day(cfg, network, params, placement, day_seed(cfg.seed, eval, d));
    write_day(network, day, cfg.output + (eval ? "/eval/" : "/train/") + day_name(d));
  });
}

FeatureTable day_features(const RawDataset& raw, const std::vector<IncidentSpec>& log, const RoadNetwork& network,
                          const WindowConfig& window) {
  const auto pairs = contiguous_sensor_pairs(network, raw.placement());
  const auto records = reidentify_travel_times(raw, pairs, window.staleness_s);
  return build_feature_rows(raw, records, pairs, window, log, network);
}

FeatureTable extract_features(const std::string& raw_dir, const RoadNetwork& network, const WindowConfig& window) {
  std::vector<std::string> dirs;
  if (fs::exists(fs::path(raw_dir) / "raw.csv")) {
    dirs.push_back(raw_dir);
  } else {
    if (!fs::is_directory(raw_dir)) throw IoError("raw directory '" + raw_dir + "' does not exist");
    for (const auto& e : fs::directory_iterator(raw_dir)) {
      if (e.is_directory() && fs::exists(e.path() / "raw.csv")) dirs.push_back(e.path().string());
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw IoError("no raw.csv found under '" + raw_dir + "'");
  }
  std::vector<FeatureTable> days(dirs.size());
  std::vector<std::int64_t> horizons(dirs.size());
  parallel_for(static_cast<int>(dirs.size()), [&](int i) {
    const auto& dir = dirs[static_cast<std::size_t>(i)];
    const auto raw = load_raw(dir);
    horizons[static_cast<std::size_t>(i)] = raw.horizon_s;
    days[static_cast<std::size_t>(i)] = day_features(raw, load_incident_log(dir + "/incidents.csv"), network, window);
  });
  FeatureTable table;
  for (std::size_t i = 0; i < days.size(); ++i) {
    append_table(table, days[i], static_cast<std::int64_t>(i) * horizons[i]);
  }
  return table;
}

std::vector<ValidationRow> validate_days(const std::string& raw_dir, const std::string& counts_path,
                                         double demand_scale, std::int64_t bin_s) {
  const auto roads = load_counts(counts_path);
  std::vector<MacroCountSeries> series;
  for (const auto& [label, s] : roads) series.push_back(s);
  const auto average = average_counts(series);
  std::vector<double> reference;
  for (double c : average.counts) reference.push_back(c * demand_scale);

  std::vector<std::string> dirs;
  if (fs::exists(fs::path(raw_dir) / "placement.kv")) {
    dirs.push_back(raw_dir);
  } else {
    if (!fs::is_directory(raw_dir)) throw IoError("raw directory '" + raw_dir + "' does not exist");
    for (const auto& e : fs::directory_iterator(raw_dir)) {
      if (e.is_directory() && fs::exists(e.path() / "placement.kv")) dirs.push_back(e.path().string());
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw IoError("no simulated days found under '" + raw_dir + "'");
  }
  std::vector<ValidationRow> rows;
  for (const auto& dir : dirs) {
    MacroCountSeries sim;
    if (fs::exists(dir + "/entries.csv")) {
      const auto meta = KeyValueDoc::load(dir + "/placement.kv");
      sim = aggregate_bins(load_entry_times(dir + "/entries.csv"), meta.get_int_or("horizon_s", 0), bin_s);
    } else {
      sim = aggregate_bins(load_raw(dir), bin_s);
    }
    rows.push_back(ValidationRow{fs::path(dir).filename().string(), ks_two_sample(sim.counts, reference)});
  }
  return rows;
}

void write_report(const EvalReport& report, const std::string& path, const std::string& label) {
  write_text(path, format_report(report));
  write_text(path + ".csv", report_csv_header() + "\n" + report_csv_row(report, label) + "\n");
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const auto network = load_network(cfg.network);
  const auto params = resolve_params(cfg);
  const auto placement = experiment_placement(cfg, network, cfg.sensors);
  const int total = cfg.days + cfg.eval_days;
  std::vector<FeatureTable> tables(static_cast<std::size_t>(total));
  parallel_for(total, [&](int k) {
    const bool eval = k >= cfg.days;
    const int d = eval ? k - cfg.days : k;
    const auto day = simulate_day(cfg, network, params, placement, day_seed(cfg.seed, eval, d));
    if (!out_dir.empty()) write_day(network, day, out_dir + (eval ? "/eval/" : "/train/") + day_name(d));
    tables[static_cast<std::size_t>(k)] = day_features(day.result.raw, day.result.incident_log, network, cfg.window);
  });
  PipelineResult out;
  for (int k = 0; k < total; ++k) {
    const bool eval = k >= cfg.days;
    const int d = eval ? k - cfg.days : k;
    append_table(eval ? out.eval : out.train, tables[static_cast<std::size_t>(k)], d * cfg.horizon_s);
  }
  out.model = train_incident_ensemble(out.train, cfg.trees, cfg.threshold);
  out.predictions = infer_all(out.model, out.eval);
  out.report = evaluate_predictions(out.eval, out.predictions, cfg.window.window_s);
  if (!out_dir.empty()) {
    experiment_config_doc(cfg).save(out_dir + "/config.resolved.kv");
    save_params(params, out_dir + "/params.kv");
    write_feature_table(out.train, out_dir + "/features_train.csv");
    write_feature_table(out.eval, out_dir + "/features_eval.csv");
    save_ensemble(out.model, out_dir + "/model.json");
    write_text(out_dir + "/predictions.csv", format_predictions(out.predictions));
    write_report(out.report, out_dir + "/report.kv", "pipeline");
  }
  return out;
}

std::vector<SweepLevel> sweep_sparsity(const ExperimentConfig& cfg, const std::vector<int>& levels,
                                       const std::string& out_dir) {
  cfg.validate();
  const auto network = load_network(cfg.network);
  const auto params = resolve_params(cfg);
  const auto priority = cfg.sweep_sensors.empty() ? cfg.sensors : cfg.sweep_sensors;
  if (priority.empty()) throw ValidationError("sweep-sparsity: config lists no sweep.sensors");
  for (int k : levels) {
    if (k < 1 || static_cast<std::size_t>(k) > priority.size()) {
      throw ValidationError("sweep-sparsity: level " + std::to_string(k) + " outside [1, " +
                            std::to_string(priority.size()) + "]");
    }
  }
  const auto placement = experiment_placement(cfg, network, priority);
  const int total = cfg.days + cfg.eval_days;
  const std::size_t nl = levels.size();
  // tables[day][level]
  std::vector<std::vector<FeatureTable>> tables(static_cast<std::size_t>(total), std::vector<FeatureTable>(nl));
  parallel_for(total, [&](int k) {
    const bool eval = k >= cfg.days;
    const int d = eval ? k - cfg.days : k;
    const auto day = simulate_day(cfg, network, params, placement, day_seed(cfg.seed, eval, d));
    if (!out_dir.empty()) write_day(network, day, out_dir + (eval ? "/eval/" : "/train/") + day_name(d));
    for (std::size_t l = 0; l < nl; ++l) {
      const std::vector<std::string> subset(priority.begin(), priority.begin() + levels[l]);
      const auto raw = select_sensors(day.result.raw, subset);
      tables[static_cast<std::size_t>(k)][l] = day_features(raw, day.result.incident_log, network, cfg.window);
    }
  });

  std::vector<SweepLevel> out(nl);
  std::string table = report_csv_header() + "\n";
  for (std::size_t l = 0; l < nl; ++l) {
    FeatureTable train, eval;
    for (int k = 0; k < total; ++k) {
      const bool is_eval = k >= cfg.days;
      const int d = is_eval ? k - cfg.days : k;
      append_table(is_eval ? eval : train, tables[static_cast<std::size_t>(k)][l], d * cfg.horizon_s);
    }
    const auto model = train_incident_ensemble(train, cfg.trees, cfg.threshold);
    const auto preds = infer_all(model, eval);
    auto& level = out[l];
    level.n_sensors = static_cast<std::size_t>(levels[l]);
    level.sensors.assign(priority.begin(), priority.begin() + levels[l]);
    level.report = evaluate_predictions(eval, preds, cfg.window.window_s);
    const std::string label = "sensors_" + std::to_string(levels[l]);
    table += report_csv_row(level.report, label) + "\n";
    if (!out_dir.empty()) {
      const std::string dir = out_dir + "/" + label;
      fs::create_directories(dir);
      save_ensemble(model, dir + "/model.json");
      write_report(level.report, dir + "/report.kv", label);
      write_text(dir + "/sensors.txt", join(level.sensors, "\n") + "\n");
    }
  }
  if (!out_dir.empty()) {
    experiment_config_doc(cfg).save(out_dir + "/config.resolved.kv");
    write_text(out_dir + "/sweep.csv", table);
  }
  return out;
}

}  // namespace incidentlab
