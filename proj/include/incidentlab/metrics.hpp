#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "incidentlab/ensemble.hpp"
#include "incidentlab/features.hpp"
#include "incidentlab/incidents.hpp"

namespace incidentlab {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& actual);

/// Probability that a random positive outscores a random negative, ties
/// counted one half (midrank Mann-Whitney). Undefined without both classes.
std::optional<double> auc_roc(const std::vector<double>& scores, const std::vector<bool>& labels);

/// Event-level accounting. An incident is detected when some positive
/// prediction has window_end in [onset, onset + duration + grace]; its delay
/// is the first such window_end minus the onset.
struct EventDetection {
  std::int64_t total = 0;
  std::int64_t detected = 0;
  std::vector<std::optional<std::int64_t>> delays;  // per incident
  std::optional<double> fraction;
  std::optional<double> mttd_s;
};

EventDetection detect_events(const std::vector<std::int64_t>& window_ends, const std::vector<bool>& predicted,
                             const std::vector<IncidentSpec>& incidents, std::int64_t grace_s);

/// Rates are empty (undefined) whenever their denominator is zero.
struct EvalReport {
  ConfusionCounts counts;
  std::optional<double> dr, far, accuracy, precision, recall, f1, specificity, auc_roc;
  std::optional<double> event_detection_fraction;
  std::optional<double> mttd_s;
  std::int64_t detected_incidents = 0;
  std::int64_t total_incidents = 0;
  // over rows that are labelled positive and detected
  std::optional<double> localization_accuracy;
  std::optional<double> severity_accuracy;
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> localization_by_road;  // correct, total
  std::int64_t gating_violations = 0;
};

EvalReport summary(const ConfusionCounts& counts, const std::vector<double>& scores, const std::vector<bool>& labels,
                   const EventDetection& events);

/// Full report for ensemble predictions over a labelled table.
EvalReport evaluate_predictions(const FeatureTable& table, const std::vector<IncidentPrediction>& predictions,
                                std::int64_t grace_s);

/// `key = value` document; undefined rates are written as "undefined".
std::string format_report(const EvalReport& report);
std::string report_csv_header();
std::string report_csv_row(const EvalReport& report, const std::string& label);

}  // namespace incidentlab
