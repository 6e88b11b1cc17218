#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "incidentlab/demand.hpp"
#include "incidentlab/roadnet.hpp"

namespace incidentlab {

enum class IncidentType { StalledVehicle, MultiVehicleCrash };
enum class SeverityClass { Minor, Severe };

std::string to_string(IncidentType t);
std::string to_string(SeverityClass s);
IncidentType parse_incident_type(const std::string& s);
SeverityClass parse_severity(const std::string& s);

/// One incident. Planned incidents carry a nominal onset; the simulator
/// logs the realised onset and halt position.
struct IncidentSpec {
  std::int64_t id = 0;
  IncidentType type = IncidentType::StalledVehicle;
  SeverityClass severity = SeverityClass::Minor;
  std::int64_t onset_s = 0;
  std::int64_t duration_s = 0;
  std::string segment_id;
  Index segment = kNoIndex;
  double offset_m = 0.0;
  int n_vehicles = 1;
  double radius_m = 0.0;
  /// Vehicle (schedule index) whose halt triggers the incident.
  std::int64_t trigger_vehicle = -1;

  std::int64_t end_s() const { return onset_s + duration_s; }
  bool operator==(const IncidentSpec&) const = default;
};

struct IncidentPlanConfig {
  double p_incident = 1e-4;
  double p_crash_given_incident = 0.5;
  std::int64_t minor_duration_min_s = 300;
  std::int64_t minor_duration_max_s = 900;
  std::int64_t severe_duration_min_s = 900;
  std::int64_t severe_duration_max_s = 2700;
  double p_severe = 0.3;
  double base_radius_m = 50.0;
  double severe_radius_multiplier = 2.0;
  double slowdown_factor = 0.3;
  int crash_vehicles = 2;

  void validate() const;
};

/// Bernoulli(p_incident) per scheduled vehicle; type, severity and duration
/// sampled independently; location at the vehicle's mid-journey point.
/// Candidates overlapping an earlier incident on the same segment (or running
/// past the horizon) are resampled up to 10 times, then skipped.
std::vector<IncidentSpec> plan_incidents(const SpawnSchedule& schedule, const IncidentPlanConfig& cfg,
                                         const RoadNetwork& network, std::uint64_t seed);

struct SimState;

/// Per-vehicle speed caps (aligned with state.vehicles; +inf = uncapped)
/// from the incidents active at state.time.
std::vector<double> apply_effects(const SimState& state, const RoadNetwork& network, const IncidentPlanConfig& cfg);

/// `id,type,severity,onset_s,duration_s,segment_id,offset_m,radius_m`
std::string format_incident_log(const std::vector<IncidentSpec>& log);
std::vector<IncidentSpec> parse_incident_log(const std::string& text);
std::vector<IncidentSpec> load_incident_log(const std::string& path);
/// Fills IncidentSpec::segment from segment_id.
void resolve_segments(std::vector<IncidentSpec>& log, const RoadNetwork& network);

}  // namespace incidentlab
