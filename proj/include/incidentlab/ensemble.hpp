#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "incidentlab/features.hpp"
#include "incidentlab/gbdt.hpp"

namespace incidentlab {

/// Detector gates the localizer (road label) and severity models.
struct EnsembleModel {
  TreeEnsemble detector;
  TreeEnsemble localizer;
  TreeEnsemble severity;
  double threshold = 0.5;
  std::vector<std::string> feature_names;
  std::size_t detector_rows = 0;
  std::size_t localizer_rows = 0;
  std::size_t severity_rows = 0;

  bool localizer_degenerate() const { return localizer.constant; }
  bool severity_degenerate() const { return severity.constant; }
};

struct IncidentPrediction {
  std::int64_t window_end_s = 0;
  bool detected = false;
  double score = 0.0;
  std::optional<std::string> road_label;
  std::optional<SeverityClass> severity;
};

/// Detector on all rows; localizer and severity on positive rows only.
/// A sub-model whose training rows hold a single class becomes a constant
/// predictor and is flagged as degenerate. Throws when no row is positive.
EnsembleModel train_incident_ensemble(const FeatureTable& table, const TreeEnsembleConfig& cfg,
                                      double threshold = 0.5);

IncidentPrediction infer(const EnsembleModel& model, const FeatureRow& row);
std::vector<IncidentPrediction> infer_all(const EnsembleModel& model, const FeatureTable& table);

/// JSON document tagged "incidentlab.ensemble/1".
std::string serialize_ensemble(const EnsembleModel& model);
EnsembleModel parse_ensemble(const std::string& text);
void save_ensemble(const EnsembleModel& model, const std::string& path);
EnsembleModel load_ensemble(const std::string& path);

}  // namespace incidentlab
