#include "incidentlab/incidents.hpp"

#include <algorithm>
#include <cmath>

#include "incidentlab/microsim.hpp"

namespace incidentlab {

namespace {

constexpr int kMaxResamples = 10;

const char* const kLogHeader = "id,type,severity,onset_s,duration_s,segment_id,offset_m,radius_m";

struct Location {
  Index segment = kNoIndex;
  double offset = 0.0;
  double travel_s = 0.0;  // free-flow time from spawn to the point
};

// Point reached after half the route length, pulled away from both ends of
// its segment so that the halt happens on open road.
Location mid_journey(const RoadNetwork& net, const Route& route) {
  const double half = 0.5 * route_length(net, route);
  double walked = 0.0;
  double time = 0.0;
  for (Index s : route) {
    const auto& seg = net.segment(s);
    if (walked + seg.length_m >= half) {
      const double lo = std::min(20.0, 0.25 * seg.length_m);
      const double hi = std::max(lo, seg.length_m - 30.0);
      const double off = std::clamp(half - walked, lo, hi);
      return Location{s, off, time + off / seg.speed_limit_mps};
    }
    walked += seg.length_m;
    time += seg.length_m / seg.speed_limit_mps;
  }
  const Index last = route.back();
  return Location{last, net.segment(last).length_m * 0.5, time};
}

bool overlaps(const IncidentSpec& a, const IncidentSpec& b) {
  return a.segment == b.segment && a.onset_s < b.end_s() && b.onset_s < a.end_s();
}

}  // namespace

std::string to_string(IncidentType t) {
  return t == IncidentType::StalledVehicle ? "StalledVehicle" : "MultiVehicleCrash";
}

std::string to_string(SeverityClass s) { return s == SeverityClass::Minor ? "Minor" : "Severe"; }

IncidentType parse_incident_type(const std::string& s) {
  if (s == "StalledVehicle") return IncidentType::StalledVehicle;
  if (s == "MultiVehicleCrash") return IncidentType::MultiVehicleCrash;
  throw ParseError("unknown incident type '" + s + "'");
}

SeverityClass parse_severity(const std::string& s) {
  if (s == "Minor") return SeverityClass::Minor;
  if (s == "Severe") return SeverityClass::Severe;
  throw ParseError("unknown severity '" + s + "'");
}

void IncidentPlanConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(name) + " must lie in [0, 1]");
  };
  prob(p_incident, "p_incident");
  prob(p_crash_given_incident, "p_crash_given_incident");
  prob(p_severe, "p_severe");
  if (minor_duration_min_s <= 0 || minor_duration_max_s < minor_duration_min_s) {
    throw ValidationError("minor duration range must be positive and ordered");
  }
  if (severe_duration_min_s <= 0 || severe_duration_max_s < severe_duration_min_s) {
    throw ValidationError("severe duration range must be positive and ordered");
  }
  if (!(base_radius_m >= 0.0) || !(severe_radius_multiplier >= 0.0)) {
    throw ValidationError("radius parameters must be non-negative");
  }
  if (!(slowdown_factor >= 0.0 && slowdown_factor <= 1.0)) throw ValidationError("slowdown_factor must lie in [0, 1]");
  if (crash_vehicles < 2) throw ValidationError("crash_vehicles must be at least 2");
}

std::vector<IncidentSpec> plan_incidents(const SpawnSchedule& schedule, const IncidentPlanConfig& cfg,
                                         const RoadNetwork& network, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  RouteTable routes(network);
  std::vector<IncidentSpec> plan;
  for (std::size_t v = 0; v < schedule.events.size(); ++v) {
    if (!rng.bernoulli(cfg.p_incident)) continue;
    const auto& ev = schedule.events[v];
    const Location loc = mid_journey(network, routes.route(ev.entry, ev.exit));
    for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
      IncidentSpec inc;
      inc.type = rng.bernoulli(cfg.p_crash_given_incident) ? IncidentType::MultiVehicleCrash
                                                           : IncidentType::StalledVehicle;
      inc.severity = rng.bernoulli(cfg.p_severe) ? SeverityClass::Severe : SeverityClass::Minor;
      const bool severe = inc.severity == SeverityClass::Severe;
      const std::int64_t lo = severe ? cfg.severe_duration_min_s : cfg.minor_duration_min_s;
      const std::int64_t hi = severe ? cfg.severe_duration_max_s : cfg.minor_duration_max_s;
      inc.duration_s = lo + static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
      inc.onset_s = ev.time_s + static_cast<std::int64_t>(std::ceil(loc.travel_s));
      inc.segment = loc.segment;
      inc.segment_id = network.segment(loc.segment).id;
      inc.offset_m = loc.offset;
      inc.n_vehicles = inc.type == IncidentType::MultiVehicleCrash ? cfg.crash_vehicles : 1;
      inc.radius_m = cfg.base_radius_m * (severe ? cfg.severe_radius_multiplier : 1.0);
      inc.trigger_vehicle = static_cast<std::int64_t>(v);
      if (inc.end_s() > schedule.horizon_s) continue;
      if (std::any_of(plan.begin(), plan.end(), [&](const IncidentSpec& o) { return overlaps(o, inc); })) continue;
      inc.id = static_cast<std::int64_t>(plan.size());
      plan.push_back(std::move(inc));
      break;
    }
  }
  return plan;
}

std::vector<double> apply_effects(const SimState& state, const RoadNetwork& network, const IncidentPlanConfig& cfg) {
  std::vector<double> caps(state.vehicles.size(), kInf);
  for (std::size_t i = 0; i < state.vehicles.size(); ++i) {
    const auto& v = state.vehicles[i];
    if (v.halted_by) {
      caps[i] = 0.0;
      continue;
    }
    for (const auto& inc : state.active_incidents) {
      if (std::isfinite(inc.zone->distance(v.segment(), v.offset))) {
        caps[i] = std::min(caps[i], cfg.slowdown_factor * network.segment(v.segment()).speed_limit_mps);
      }
    }
  }
  return caps;
}

std::string format_incident_log(const std::vector<IncidentSpec>& log) {
  std::string out = std::string(kLogHeader) + "\n";
  for (const auto& i : log) {
    out += std::to_string(i.id) + "," + to_string(i.type) + "," + to_string(i.severity) + "," +
           std::to_string(i.onset_s) + "," + std::to_string(i.duration_s) + "," + i.segment_id + "," +
           format_double(i.offset_m) + "," + format_double(i.radius_m) + "\n";
  }
  return out;
}

std::vector<IncidentSpec> parse_incident_log(const std::string& text) {
  const auto lines = split(text, '\n');
  std::size_t k = 0;
  while (k < lines.size() && trim(lines[k]).empty()) ++k;
  if (k == lines.size() || trim(lines[k]) != kLogHeader) {
    throw ParseError(std::string("incident log must start with header '") + kLogHeader + "'");
  }
  std::vector<IncidentSpec> out;
  for (++k; k < lines.size(); ++k) {
    const std::string line = trim(lines[k]);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw ParseError("incident log line " + std::to_string(k + 1) + ": expected 8 fields");
    IncidentSpec i;
    i.id = parse_int(f[0], "id");
    i.type = parse_incident_type(f[1]);
    i.severity = parse_severity(f[2]);
    i.onset_s = parse_int(f[3], "onset_s");
    i.duration_s = parse_int(f[4], "duration_s");
    i.segment_id = f[5];
    i.offset_m = parse_double(f[6], "offset_m");
    i.radius_m = parse_double(f[7], "radius_m");
    i.n_vehicles = i.type == IncidentType::MultiVehicleCrash ? 2 : 1;
    if (i.duration_s <= 0) throw ParseError("incident " + std::to_string(i.id) + ": duration must be positive");
    out.push_back(std::move(i));
  }
  return out;
}

std::vector<IncidentSpec> load_incident_log(const std::string& path) {
  std::string text;
  for (const auto& l : read_lines(path)) text += l + "\n";
  try {
    return parse_incident_log(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void resolve_segments(std::vector<IncidentSpec>& log, const RoadNetwork& network) {
  for (auto& i : log) {
    const auto s = network.find_segment(i.segment_id);
    if (!s) throw ValidationError("incident " + std::to_string(i.id) + " references unknown segment '" + i.segment_id + "'");
    i.segment = *s;
  }
}

}  // namespace incidentlab
