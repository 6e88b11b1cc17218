#include "incidentlab/microsim.hpp"

#include <algorithm>
#include <cmath>

namespace incidentlab {

void SimConfig::validate() const {
  if (!(accel > 0.0) || !(decel > 0.0)) throw ValidationError("accel and decel must be positive");
  if (!(driver_imperfection >= 0.0 && driver_imperfection < 1.0)) {
    throw ValidationError("driver_imperfection must lie in [0, 1)");
  }
  if (!(min_gap >= 0.0)) throw ValidationError("min_gap must be non-negative");
  if (!(vehicle_length > 0.0)) throw ValidationError("vehicle_length must be positive");
}

Simulator::Simulator(const RoadNetwork& network, SpawnSchedule schedule, std::vector<IncidentSpec> plan, SimConfig cfg,
                     IncidentPlanConfig incident_cfg)
    : network_(&network),
      schedule_(std::move(schedule)),
      planned_(std::move(plan)),
      cfg_(cfg),
      incident_cfg_(incident_cfg),
      routes_(network),
      rng_(cfg.seed) {
  cfg_.validate();
  incident_cfg_.validate();
  if (schedule_.horizon_s <= 0) throw PreconditionError("simulation horizon must be positive");
  std::int64_t prev = 0;
  for (const auto& e : schedule_.events) {
    if (e.time_s < prev || e.time_s >= schedule_.horizon_s) {
      throw ValidationError("spawn times must be non-decreasing and inside [0, horizon)");
    }
    if (e.entry >= network.nodes().size() || e.exit >= network.nodes().size()) {
      throw ValidationError("spawn event references an unknown node");
    }
    prev = e.time_s;
  }
  for (auto& p : planned_) {
    if (p.segment == kNoIndex) p.segment = network.segment_index(p.segment_id);
  }
  planned_done_.assign(planned_.size(), false);
  lanes_.resize(network.segments().size());
  for (Index s = 0; s < network.segments().size(); ++s) {
    lanes_[s].resize(static_cast<std::size_t>(network.segment(s).lanes));
  }
  release_and_insert();
}

double Simulator::tail_space(Index segment, std::size_t lane) const {
  const auto& q = lanes_[segment][lane];
  if (q.empty()) return network_->segment(segment).length_m;
  return state_.vehicles[slot_.at(q.back())].offset - cfg_.vehicle_length;
}

std::size_t Simulator::best_lane(Index segment, double& space) const {
  std::size_t best = 0;
  space = -kInf;
  for (std::size_t l = 0; l < lanes_[segment].size(); ++l) {
    const double s = tail_space(segment, l);
    if (s > space) {
      space = s;
      best = l;
    }
  }
  return best;
}

void Simulator::reindex() {
  slot_.clear();
  for (std::size_t i = 0; i < state_.vehicles.size(); ++i) slot_[state_.vehicles[i].id] = i;
}

void Simulator::step() {
  const RoadNetwork& net = *network_;
  const std::int64_t t = state_.time;
  const double a = cfg_.accel;
  const double b = cfg_.decel;
  const double len_v = cfg_.vehicle_length;
  const double min_gap = cfg_.min_gap;
  const auto caps = apply_effects(state_, net, incident_cfg_);

  state_.last_crossings.clear();
  state_.last_arrivals.clear();
  std::vector<bool> moved(state_.vehicles.size(), false);

  // largest speed that still allows stopping within `gap` given a leader
  // moving at `v_lead` that brakes at the same rate
  auto safe_speed = [b](double gap, double v_lead) {
    if (gap <= 0.0) return 0.0;
    return -b + std::sqrt(b * b + v_lead * v_lead + 2.0 * b * gap);
  };

  for (Index seg = 0; seg < lanes_.size(); ++seg) {
    const Segment& sd = net.segment(seg);
    const double len = sd.length_m;
    const bool red = !net.permits(seg, t);
    for (auto& q : lanes_[seg]) {
      const std::vector<std::int64_t> order(q.begin(), q.end());
      double leader_rear = kInf;
      double leader_speed = 0.0;
      bool leader_left = false;
      for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t k = slot_.at(order[i]);
        if (moved[k]) continue;
        VehicleState& v = state_.vehicles[k];
        const bool front = i == 0;
        const bool last = v.on_last_segment();

        Index nxt = kNoIndex;
        std::size_t nxt_lane = 0;
        double extra_cap = kInf;
        if (front && !last) {
          nxt = v.route[v.seg_index + 1];
          double space = 0.0;
          nxt_lane = best_lane(nxt, space);
          const auto& nq = lanes_[nxt][nxt_lane];
          if (!nq.empty()) {
            leader_rear = len + space;
            leader_speed = state_.vehicles[slot_.at(nq.back())].speed;
          } else {
            extra_cap = len + net.segment(nxt).length_m - v.offset;
          }
        }
        if (!front && leader_left) extra_cap = len - v.offset;

        double vdes = std::min({v.speed + a * SimConfig::dt, sd.speed_limit_mps, caps[k]});
        const double gap = leader_rear - v.offset - min_gap;
        if (std::isfinite(gap)) vdes = std::min(vdes, safe_speed(gap, leader_speed));
        const double to_line = len - v.offset;
        const bool stop = red && !last;
        if (stop) vdes = std::min(vdes, safe_speed(to_line, 0.0));
        const double dawdle = cfg_.driver_imperfection * a * SimConfig::dt * rng_.uniform();
        double vnew = std::max(0.0, vdes - dawdle);
        if (std::isfinite(gap)) vnew = std::min(vnew, std::max(0.0, gap));
        if (stop) vnew = std::min(vnew, to_line);
        vnew = std::max(0.0, std::min(vnew, extra_cap));

        double new_off = v.offset + vnew;
        if (nxt != kNoIndex && new_off > len) {
          const double lim = std::min(sd.speed_limit_mps, net.segment(nxt).speed_limit_mps);
          if (vnew > lim) {
            vnew = lim;
            new_off = v.offset + vnew;
          }
        }
        moved[k] = true;
        v.speed = vnew;

        if (front && last && new_off >= len) {
          q.pop_front();
          state_.last_arrivals.push_back(v.id);
          leader_left = true;
          leader_rear = kInf;
          continue;
        }
        if (nxt != kNoIndex && new_off > len) {
          q.pop_front();
          lanes_[nxt][nxt_lane].push_back(v.id);
          state_.last_crossings.push_back(NodeCrossing{v.id, seg, nxt});
          v.seg_index += 1;
          v.offset = new_off - len;
          v.lane = static_cast<int>(nxt_lane);
          leader_left = true;
          leader_rear = len + v.offset - len_v;
          leader_speed = vnew;
          continue;
        }
        v.offset = new_off;
        leader_left = false;
        leader_rear = new_off - len_v;
        leader_speed = vnew;
      }
    }
  }

  if (!state_.last_arrivals.empty()) {
    std::vector<std::int64_t> gone = state_.last_arrivals;
    std::sort(gone.begin(), gone.end());
    std::erase_if(state_.vehicles,
                  [&](const VehicleState& v) { return std::binary_search(gone.begin(), gone.end(), v.id); });
    state_.arrived += static_cast<std::int64_t>(gone.size());
    reindex();
  }

  state_.time = t + 1;
  expire_incidents();
  activate_incidents();
  release_and_insert();
}

void Simulator::expire_incidents() {
  auto& active = state_.active_incidents;
  for (const auto& inc : active) {
    if (inc.spec.end_s() > state_.time) continue;
    for (auto id : inc.vehicles) {
      auto it = slot_.find(id);
      if (it == slot_.end()) continue;
      auto& v = state_.vehicles[it->second];
      if (v.halted_by == inc.spec.id) v.halted_by.reset();
    }
  }
  std::erase_if(active, [&](const ActiveIncident& inc) { return inc.spec.end_s() <= state_.time; });
}

void Simulator::activate_incidents() {
  const RoadNetwork& net = *network_;
  for (std::size_t i = 0; i < planned_.size(); ++i) {
    if (planned_done_[i]) continue;
    const IncidentSpec& p = planned_[i];
    const auto it = slot_.find(p.trigger_vehicle);
    if (it == slot_.end()) {
      const bool released = p.trigger_vehicle < static_cast<std::int64_t>(next_event_);
      const bool waiting = std::any_of(state_.pending.begin(), state_.pending.end(),
                                       [&](const PendingSpawn& s) { return s.id == p.trigger_vehicle; });
      if (released && !waiting) planned_done_[i] = true;  // already arrived
      continue;
    }
    VehicleState& v = state_.vehicles[it->second];
    const auto pos = std::find(v.route.begin(), v.route.end(), p.segment);
    if (pos == v.route.end()) {
      planned_done_[i] = true;
      continue;
    }
    const auto k = static_cast<std::size_t>(pos - v.route.begin());
    const bool reached = v.seg_index > k || (v.seg_index == k && v.offset >= p.offset_m);
    if (!reached) continue;
    planned_done_[i] = true;
    if (state_.time + p.duration_s > horizon() || v.halted_by) continue;

    ActiveIncident inc;
    inc.spec = p;
    inc.spec.onset_s = state_.time;
    inc.spec.segment = v.segment();
    inc.spec.segment_id = net.segment(v.segment()).id;
    inc.spec.offset_m = v.offset;
    v.speed = 0.0;
    v.halted_by = p.id;
    inc.vehicles.push_back(v.id);
    if (p.type == IncidentType::MultiVehicleCrash) {
      // the nearest followers in the same lane are involved as well
      const auto& q = lanes_[v.segment()][static_cast<std::size_t>(v.lane)];
      auto qi = std::find(q.begin(), q.end(), v.id);
      for (++qi; qi != q.end() && static_cast<int>(inc.vehicles.size()) < p.n_vehicles; ++qi) {
        auto& f = vehicle(*qi);
        if (f.halted_by) break;
        f.speed = 0.0;
        f.halted_by = p.id;
        inc.vehicles.push_back(f.id);
      }
    }
    inc.zone = std::make_shared<const ProximityMap>(net, Anchor::at_point(inc.spec.segment, inc.spec.offset_m),
                                                    inc.spec.radius_m);
    log_.push_back(inc.spec);
    state_.active_incidents.push_back(std::move(inc));
  }
}

void Simulator::release_and_insert() {
  const auto& events = schedule_.events;
  while (next_event_ < events.size() && events[next_event_].time_s <= state_.time) {
    state_.pending.push_back(PendingSpawn{static_cast<std::int64_t>(next_event_), events[next_event_]});
    ++next_event_;
    ++state_.spawned;
  }
  // FIFO per entry node: a blocked spawn holds back later ones at that node
  std::vector<bool> blocked(network_->nodes().size(), false);
  for (auto it = state_.pending.begin(); it != state_.pending.end();) {
    const SpawnEvent& ev = it->event;
    if (blocked[ev.entry]) {
      ++it;
      continue;
    }
    const Route& route = routes_.route(ev.entry, ev.exit);
    double space = 0.0;
    const std::size_t lane = best_lane(route.front(), space);
    if (space < cfg_.vehicle_length + cfg_.min_gap) {
      blocked[ev.entry] = true;
      ++it;
      continue;
    }
    VehicleState v;
    v.id = it->id;
    v.route = route;
    v.spawn_time = ev.time_s;
    v.entry_time = state_.time;
    v.lane = static_cast<int>(lane);
    lanes_[route.front()][lane].push_back(v.id);
    slot_[v.id] = state_.vehicles.size();
    state_.vehicles.push_back(std::move(v));
    entries_.push_back(EntryRecord{it->id, state_.time, ev.entry, ev.exit});
    it = state_.pending.erase(it);
  }
}

RunResult run(const RoadNetwork& network, const SpawnSchedule& schedule, const std::vector<IncidentSpec>& plan,
              const SensorPlacement& placement, const SimConfig& cfg, const IncidentPlanConfig& incident_cfg,
              const StepObserver& observer) {
  Simulator sim(network, schedule, plan, cfg, incident_cfg);
  SensorArray cameras(network, placement, cfg.vehicle_length);
  RunResult out;
  out.raw.sensor_ids = cameras.sensor_ids();
  out.raw.range_m = placement.range_m;
  out.raw.horizon_s = schedule.horizon_s;
  out.raw.readings.reserve(static_cast<std::size_t>(schedule.horizon_s) * cameras.sensor_ids().size());
  for (std::int64_t t = 0; t < schedule.horizon_s; ++t) {
    auto readings = cameras.capture(sim.state(), t);
    std::move(readings.begin(), readings.end(), std::back_inserter(out.raw.readings));
    if (observer) observer(sim);
    sim.step();
  }
  out.incident_log = sim.incident_log();
  out.entries = sim.entries();
  out.spawned = sim.state().spawned;
  out.arrived = sim.state().arrived;
  out.active_at_end = static_cast<std::int64_t>(sim.state().vehicles.size());
  out.pending_at_end = static_cast<std::int64_t>(sim.state().pending.size());
  return out;
}

std::string format_entries(const RoadNetwork& network, const std::vector<EntryRecord>& entries) {
  std::string out = "vehicle_id,entry_time_s,entry_node,exit_node\n";
  for (const auto& e : entries) {
    out += std::to_string(e.vehicle) + "," + std::to_string(e.entry_time) + "," + network.node(e.entry).id + "," +
           network.node(e.exit).id + "\n";
  }
  return out;
}

std::vector<std::int64_t> load_entry_times(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || trim(lines[0]) != "vehicle_id,entry_time_s,entry_node,exit_node") {
    throw ParseError(path + ": expected header 'vehicle_id,entry_time_s,entry_node,exit_node'");
  }
  std::vector<std::int64_t> times;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 4) throw ParseError(path + ": line " + std::to_string(i + 1) + ": expected 4 fields");
    times.push_back(parse_int(f[1], "entry_time_s"));
  }
  return times;
}

}  // namespace incidentlab
