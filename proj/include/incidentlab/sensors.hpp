#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "incidentlab/incidents.hpp"
#include "incidentlab/roadnet.hpp"

namespace incidentlab {

struct SimState;

struct SensorReading {
  std::string sensor_id;
  std::int64_t time_s = 0;
  std::vector<std::int64_t> vehicle_ids;  // ascending
  int count = 0;
  double mean_speed = 0.0;
  double occupancy = 0.0;

  bool operator==(const SensorReading&) const = default;
};

/// Per-second camera readings, one per (second, sensor), ordered by
/// (time, sensor id). Sensor ids are kept sorted.
struct RawDataset {
  std::vector<std::string> sensor_ids;
  double range_m = 50.0;
  std::int64_t horizon_s = 0;
  std::vector<SensorReading> readings;

  const SensorReading& at(std::int64_t t, std::size_t sensor) const {
    return readings[static_cast<std::size_t>(t) * sensor_ids.size() + sensor];
  }
  SensorPlacement placement() const { return SensorPlacement{sensor_ids, range_m}; }
  bool operator==(const RawDataset&) const = default;
};

/// Emulated intersection cameras. A vehicle is observed by a sensor iff its
/// network path distance to the sensor node is within the placement range.
class SensorArray {
 public:
  SensorArray(const RoadNetwork& network, const SensorPlacement& placement, double vehicle_length);

  /// One reading per sensor, in sorted sensor-id order.
  std::vector<SensorReading> capture(const SimState& state, std::int64_t t) const;

  const std::vector<std::string>& sensor_ids() const { return ids_; }
  /// Lane-metres monitored by sensor i.
  double monitored_length(std::size_t i) const { return zones_[i].covered_lane_length(); }
  const ProximityMap& zone(std::size_t i) const { return zones_[i]; }

 private:
  const RoadNetwork* network_;
  std::vector<std::string> ids_;
  std::vector<ProximityMap> zones_;
  std::vector<std::vector<bool>> touches_;  // [sensor][segment]
  double vehicle_length_;
};

/// Writes raw.csv, incidents.csv and placement.kv into `dir`.
void emit_raw(const RawDataset& dataset, const std::vector<IncidentSpec>& incident_log, const std::string& dir);
/// Reads the files written by emit_raw.
RawDataset load_raw(const std::string& dir);

/// `time_s,sensor_id,count,mean_speed_mps,occupancy,vehicle_ids`
std::string format_raw_table(const RawDataset& dataset);
void parse_raw_table(const std::string& text, RawDataset& into);

/// Keeps only the listed sensors (which must be present).
RawDataset select_sensors(const RawDataset& dataset, const std::vector<std::string>& keep);

}  // namespace incidentlab
