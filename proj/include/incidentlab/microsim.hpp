#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "incidentlab/common.hpp"
#include "incidentlab/demand.hpp"
#include "incidentlab/incidents.hpp"
#include "incidentlab/roadnet.hpp"
#include "incidentlab/sensors.hpp"

namespace incidentlab {

struct SimConfig {
  double accel = 2.6;
  double decel = 4.5;
  double driver_imperfection = 0.1;
  double min_gap = 2.5;
  double vehicle_length = 5.0;
  std::uint64_t seed = 1;

  static constexpr double dt = 1.0;
  void validate() const;
};

struct VehicleState {
  std::int64_t id = 0;
  Route route;
  std::size_t seg_index = 0;
  double offset = 0.0;  // front bumper, metres along the current segment
  double speed = 0.0;
  std::int64_t spawn_time = 0;  // scheduled
  std::int64_t entry_time = 0;  // actual insertion
  int lane = 0;
  std::optional<std::int64_t> halted_by;

  Index segment() const { return route[seg_index]; }
  bool on_last_segment() const { return seg_index + 1 == route.size(); }
};

struct ActiveIncident {
  IncidentSpec spec;
  std::vector<std::int64_t> vehicles;
  std::shared_ptr<const ProximityMap> zone;
};

struct PendingSpawn {
  std::int64_t id = 0;
  SpawnEvent event;
};

struct NodeCrossing {
  std::int64_t vehicle = 0;
  Index from_segment = kNoIndex;
  Index to_segment = kNoIndex;
};

struct SimState {
  std::int64_t time = 0;
  std::vector<VehicleState> vehicles;
  std::int64_t arrived = 0;
  std::int64_t spawned = 0;
  std::deque<PendingSpawn> pending;
  std::vector<ActiveIncident> active_incidents;
  /// Crossings performed by the last step (from `time - 1` to `time`).
  std::vector<NodeCrossing> last_crossings;
  /// Vehicles retired by the last step.
  std::vector<std::int64_t> last_arrivals;
};

struct EntryRecord {
  std::int64_t vehicle = 0;
  std::int64_t entry_time = 0;
  Index entry = kNoIndex;
  Index exit = kNoIndex;
};

/// Krauss-style 1 Hz simulator over a fixed schedule and incident plan.
///
/// Per step and vehicle the new speed is
///   min(v + a dt, speed limit(s), incident cap, safe speed to leader,
///       stop-line speed on red) - U(0, imperfection * a * dt),
/// clamped so that the post-step gap to the leader is at least min_gap.
/// Vehicles are processed front to back per lane.
class Simulator {
 public:
  Simulator(const RoadNetwork& network, SpawnSchedule schedule, std::vector<IncidentSpec> plan, SimConfig cfg,
            IncidentPlanConfig incident_cfg = {});

  /// Advances from state().time to state().time + 1.
  void step();

  const SimState& state() const { return state_; }
  const RoadNetwork& network() const { return *network_; }
  const SimConfig& config() const { return cfg_; }
  std::int64_t horizon() const { return schedule_.horizon_s; }
  /// Incidents that have started, with realised onset and position.
  const std::vector<IncidentSpec>& incident_log() const { return log_; }
  const std::vector<EntryRecord>& entries() const { return entries_; }

 private:
  void release_and_insert();
  void activate_incidents();
  void expire_incidents();
  std::size_t best_lane(Index segment, double& space) const;
  double tail_space(Index segment, std::size_t lane) const;
  VehicleState& vehicle(std::int64_t id) { return state_.vehicles[slot_.at(id)]; }
  void reindex();

  const RoadNetwork* network_;
  SpawnSchedule schedule_;
  std::vector<IncidentSpec> planned_;
  SimConfig cfg_;
  IncidentPlanConfig incident_cfg_;
  RouteTable routes_;
  Rng rng_;
  SimState state_;
  std::size_t next_event_ = 0;
  // lanes_[segment][lane]: vehicle ids ordered front to back
  std::vector<std::vector<std::deque<std::int64_t>>> lanes_;
  std::unordered_map<std::int64_t, std::size_t> slot_;  // vehicle id -> index in state_.vehicles
  std::vector<bool> planned_done_;
  std::vector<IncidentSpec> log_;
  std::vector<EntryRecord> entries_;
};

struct RunResult {
  RawDataset raw;
  std::vector<IncidentSpec> incident_log;
  std::vector<EntryRecord> entries;
  std::int64_t spawned = 0;
  std::int64_t arrived = 0;
  std::int64_t active_at_end = 0;
  std::int64_t pending_at_end = 0;
};

using StepObserver = std::function<void(const Simulator&)>;

/// Runs t = 0 .. horizon-1. Each second the state at t is captured by the
/// sensors, the observer (if any) is called, then the simulator steps.
RunResult run(const RoadNetwork& network, const SpawnSchedule& schedule, const std::vector<IncidentSpec>& plan,
              const SensorPlacement& placement, const SimConfig& cfg, const IncidentPlanConfig& incident_cfg = {},
              const StepObserver& observer = {});

std::string format_entries(const RoadNetwork& network, const std::vector<EntryRecord>& entries);
/// Entry times from a `vehicle_id,entry_time_s,entry_node,exit_node` file.
std::vector<std::int64_t> load_entry_times(const std::string& path);

}  // namespace incidentlab
