// incidentlab command-line driver.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "incidentlab/experiment.hpp"

using namespace incidentlab;

namespace {

std::vector<int> parse_levels(const std::string& s) {
  std::vector<int> out;
  for (const auto& part : split(s, ',')) {
    if (!trim(part).empty()) out.push_back(static_cast<int>(parse_int(part, "sensor count")));
  }
  if (out.empty()) throw ValidationError("--sensors needs at least one sensor count");
  return out;
}

void print_summary(const EvalReport& r) {
  auto f = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("undefined"); };
  std::cout << "rows " << r.counts.total() << "  DR(window) " << f(r.dr) << "  FAR " << f(r.far) << "  AUC "
            << f(r.auc_roc) << "\n"
            << "incidents " << r.detected_incidents << "/" << r.total_incidents << " detected  MTTD "
            << f(r.mttd_s) << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"incidentlab: synthetic traffic incident data and detection experiments"};
  app.require_subcommand(1);

  std::string counts, out, config, raw, network, features, model, incidents, sensors;
  double scale = 1.0;
  std::int64_t bin_s = 900;
  double threshold = -1.0;
  std::int64_t grace = -1;
  WindowConfig window;
  std::string label_mode = "stride";

  auto* fit = app.add_subcommand("fit-demand", "fit the two-sinusoid flow model to 15-minute counts");
  fit->add_option("--counts", counts, "road_label,start_time_s,bin_s,count file")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", out, "output parameter file")->required();

  auto* sim = app.add_subcommand("simulate", "simulate training and evaluation days");
  sim->add_option("--config", config, "experiment config")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "output directory (overrides config)");

  auto* ext = app.add_subcommand("extract-features", "build the labelled feature table");
  ext->add_option("--raw", raw, "day directory or parent of day_* directories")->required();
  ext->add_option("--network", network, "network file")->required()->check(CLI::ExistingFile);
  ext->add_option("--out", out, "feature table path")->required();
  ext->add_option("--window", window.window_s, "window length in seconds (300, 600 or 900)");
  ext->add_option("--stride", window.stride_s, "stride in seconds");
  ext->add_option("--label-mode", label_mode, "stride or window");
  ext->add_option("--staleness", window.staleness_s, "re-identification staleness horizon in seconds");

  auto* val = app.add_subcommand("validate", "KS test of simulated entry counts against macroscopic counts");
  val->add_option("--raw", raw, "day directory or parent of day_* directories")->required();
  val->add_option("--counts", counts, "macroscopic counts file")->required()->check(CLI::ExistingFile);
  val->add_option("--scale", scale, "demand scale used when simulating");
  val->add_option("--bin", bin_s, "aggregation bin in seconds");
  val->add_option("--out", out, "report path (printed when omitted)");

  auto* train = app.add_subcommand("train", "train the detector, localizer and severity models");
  train->add_option("--features", features, "feature table")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "model file")->required();
  train->add_option("--config", config, "experiment config supplying trees.* settings")->check(CLI::ExistingFile);
  train->add_option("--threshold", threshold, "detection threshold");

  auto* eval = app.add_subcommand("evaluate", "score a model on a feature table");
  eval->add_option("--model", model, "model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--features", features, "feature table")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "report path")->required();
  eval->add_option("--incidents", incidents, "incident log (defaults to the table's sidecar)")
      ->check(CLI::ExistingFile);
  eval->add_option("--grace", grace, "detection grace in seconds (defaults to the window length)");

  auto* sweep = app.add_subcommand("sweep-sparsity", "retrain and evaluate with fewer sensors");
  sweep->add_option("--config", config, "experiment config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--sensors", sensors, "comma-separated sensor counts")->default_val("8,7,6,5,4,3");
  sweep->add_option("--out", out, "output directory (overrides config)");

  auto* hw = app.add_subcommand("highway", "run the linear highway scenario end to end");
  hw->add_option("--config", config, "experiment config")->required()->check(CLI::ExistingFile);
  hw->add_option("--out", out, "output directory (overrides config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) {
      const auto f = fit_demand(counts);
      save_params(f.fitted, out);
      write_text(out + ".report", format_fit_report(f));
      std::cout << "fit_rmse " << format_double(f.fitted.fit_rmse) << " (init " << format_double(f.init.fit_rmse)
                << ", " << f.trace.iterations << " iterations)\n";
    } else if (*sim) {
      auto cfg = load_experiment_config(config);
      if (!out.empty()) cfg.output = out;
      simulate_experiment(cfg);
      std::cout << "wrote " << cfg.days << " training and " << cfg.eval_days << " evaluation days to " << cfg.output
                << "\n";
    } else if (*ext) {
      window.label_mode = parse_label_mode(label_mode);
      window.validate();
      const auto net = load_network(network);
      const auto table = extract_features(raw, net, window);
      write_feature_table(table, out);
      std::size_t pos = 0;
      for (const auto& r : table.rows) pos += r.label_incident;
      std::cout << table.rows.size() << " rows (" << pos << " positive), " << table.feature_names.size()
                << " features\n";
    } else if (*val) {
      const auto rows = validate_days(raw, counts, scale, bin_s);
      const auto report = format_validation_report(rows);
      if (out.empty()) {
        std::cout << report;
      } else {
        write_text(out, report);
      }
    } else if (*train) {
      TreeEnsembleConfig tcfg;
      double tau = 0.5;
      if (!config.empty()) {
        const auto cfg = load_experiment_config(config);
        tcfg = cfg.trees;
        tau = cfg.threshold;
      }
      if (threshold > 0.0) tau = threshold;
      const auto table = load_feature_table(features);
      const auto m = train_incident_ensemble(table, tcfg, tau);
      save_ensemble(m, out);
      std::cout << "detector rows " << m.detector_rows << ", localizer rows " << m.localizer_rows
                << (m.localizer_degenerate() ? " (degenerate)" : "") << ", severity rows " << m.severity_rows
                << (m.severity_degenerate() ? " (degenerate)" : "") << "\n";
    } else if (*eval) {
      const auto m = load_ensemble(model);
      auto table = load_feature_table(features);
      if (!incidents.empty()) table.incidents = load_incident_log(incidents);
      // the first row of day 0 ends exactly one window length into the day
      if (grace < 0) grace = table.rows.empty() ? 600 : table.rows.front().window_end_s;
      const auto preds = infer_all(m, table);
      const auto report = evaluate_predictions(table, preds, grace);
      write_report(report, out, "evaluate");
      print_summary(report);
    } else if (*sweep) {
      auto cfg = load_experiment_config(config);
      if (!out.empty()) cfg.output = out;
      const auto levels = sweep_sparsity(cfg, parse_levels(sensors), cfg.output);
      for (const auto& l : levels) {
        std::cout << "-- " << l.n_sensors << " sensors\n";
        print_summary(l.report);
      }
    } else if (*hw) {
      auto cfg = load_experiment_config(config);
      if (!out.empty()) cfg.output = out;
      const auto result = run_pipeline(cfg, cfg.output);
      print_summary(result.report);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
