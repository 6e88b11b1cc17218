#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "incidentlab/incidents.hpp"
#include "incidentlab/roadnet.hpp"
#include "incidentlab/sensors.hpp"

namespace incidentlab {

enum class LabelMode {
  Stride,  // incident overlaps (window_end - stride, window_end]
  Window,  // incident overlaps (window_end - window, window_end]
};

std::string to_string(LabelMode m);
LabelMode parse_label_mode(const std::string& s);

struct WindowConfig {
  std::int64_t window_s = 600;
  std::int64_t stride_s = 30;
  LabelMode label_mode = LabelMode::Stride;
  std::int64_t staleness_s = 1800;

  void validate() const;
};

struct TravelTimeRecord {
  std::string from_sensor;
  std::string to_sensor;
  std::int64_t vehicle = 0;
  std::int64_t depart = 0;  // last second seen at from_sensor
  std::int64_t arrive = 0;  // first second seen at to_sensor

  std::int64_t travel_time() const { return arrive - depart; }
  bool operator==(const TravelTimeRecord&) const = default;
};

using SensorPairs = std::vector<std::pair<std::string, std::string>>;

/// Splits each vehicle's sightings into visits (maximal runs of consecutive
/// seconds at one sensor). Consecutive visits at sensors a != b form a
/// record when (a, b) is a listed pair and the gap is within staleness.
/// Records are ordered by (arrive, vehicle).
std::vector<TravelTimeRecord> reidentify_travel_times(const RawDataset& raw, const SensorPairs& pairs,
                                                      std::int64_t staleness_s = 1800);

struct FeatureRow {
  std::int64_t window_end_s = 0;
  /// Aligned with FeatureTable::feature_names; NaN marks a missing value.
  std::vector<double> features;
  bool label_incident = false;
  std::string label_road;  // empty when no incident
  std::optional<SeverityClass> label_severity;

  bool operator==(const FeatureRow& o) const;
};

struct FeatureTable {
  /// Model inputs: time_of_day, then s{ID}_count/_speed/_occupancy per
  /// sensor, then tt_{a}_{b} per contiguous pair.
  std::vector<std::string> feature_names;
  std::vector<FeatureRow> rows;
  /// Ground truth with onsets on the same clock as window_end_s.
  std::vector<IncidentSpec> incidents;
};

std::vector<std::string> feature_columns(const std::vector<std::string>& sensor_ids, const SensorPairs& pairs);

/// Rows at window_end = window, window + stride, ... <= horizon. Aggregates
/// cover seconds [window_end - window, window_end). Labels follow cfg.label_mode;
/// road and severity come from the earliest-onset overlapping incident.
FeatureTable build_feature_rows(const RawDataset& raw, const std::vector<TravelTimeRecord>& records,
                                const SensorPairs& pairs, const WindowConfig& cfg,
                                const std::vector<IncidentSpec>& incident_log, const RoadNetwork& network);

/// Appends a day's rows and incidents, shifting all times by `offset_s`.
void append_table(FeatureTable& into, const FeatureTable& day, std::int64_t offset_s);

/// Writes `path` (CSV), `path.schema` and `path.incidents.csv`.
void write_feature_table(const FeatureTable& table, const std::string& path);
/// Reads the CSV and, when present, the incidents sidecar.
FeatureTable load_feature_table(const std::string& path);
std::string format_feature_table(const FeatureTable& table);
FeatureTable parse_feature_table(const std::string& text);

}  // namespace incidentlab
