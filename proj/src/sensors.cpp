#include "incidentlab/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "incidentlab/keyvalue.hpp"
#include "incidentlab/microsim.hpp"

namespace incidentlab {

namespace {

const char* const kRawHeader = "time_s,sensor_id,count,mean_speed_mps,occupancy,vehicle_ids";

std::string read_text(const std::string& path) {
  std::string text;
  for (const auto& l : read_lines(path)) text += l + "\n";
  return text;
}

}  // namespace

SensorArray::SensorArray(const RoadNetwork& network, const SensorPlacement& placement, double vehicle_length)
    : network_(&network), ids_(placement.sensor_ids), vehicle_length_(vehicle_length) {
  validate_placement(network, placement);
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  for (const auto& id : ids_) {
    zones_.emplace_back(network, Anchor::at_node(network.node_index(id)), placement.range_m);
    std::vector<bool> touch(network.segments().size(), false);
    for (Index s : zones_.back().segments()) touch[s] = true;
    touches_.push_back(std::move(touch));
  }
}

std::vector<SensorReading> SensorArray::capture(const SimState& state, std::int64_t t) const {
  std::vector<SensorReading> out(ids_.size());
  std::vector<double> speed_sum(ids_.size(), 0.0);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    out[i].sensor_id = ids_[i];
    out[i].time_s = t;
  }
  for (const auto& v : state.vehicles) {
    const Index seg = v.segment();
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!touches_[i][seg]) continue;
      if (!std::isfinite(zones_[i].distance(seg, v.offset))) continue;
      out[i].vehicle_ids.push_back(v.id);
      speed_sum[i] += v.speed;
    }
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    auto& r = out[i];
    std::sort(r.vehicle_ids.begin(), r.vehicle_ids.end());
    r.count = static_cast<int>(r.vehicle_ids.size());
    if (r.count > 0) {
      r.mean_speed = speed_sum[i] / r.count;
      const double monitored = zones_[i].covered_lane_length();
      r.occupancy = monitored > 0.0 ? std::min(1.0, r.count * vehicle_length_ / monitored) : 1.0;
    }
  }
  return out;
}

std::string format_raw_table(const RawDataset& dataset) {
  std::string out = std::string(kRawHeader) + "\n";
  std::vector<std::string> ids;
  for (const auto& r : dataset.readings) {
    ids.clear();
    for (auto v : r.vehicle_ids) ids.push_back(std::to_string(v));
    out += std::to_string(r.time_s) + "," + r.sensor_id + "," + std::to_string(r.count) + "," +
           format_double(r.mean_speed) + "," + format_double(r.occupancy) + "," + join(ids, ";") + "\n";
  }
  return out;
}

void parse_raw_table(const std::string& text, RawDataset& into) {
  const auto lines = split(text, '\n');
  std::size_t k = 0;
  while (k < lines.size() && trim(lines[k]).empty()) ++k;
  if (k == lines.size() || trim(lines[k]) != kRawHeader) {
    throw ParseError(std::string("raw table must start with header '") + kRawHeader + "'");
  }
  const std::size_t ns = into.sensor_ids.size();
  into.readings.clear();
  for (++k; k < lines.size(); ++k) {
    const std::string line = trim(lines[k]);
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() == 5) f.emplace_back();
    if (f.size() != 6) throw ParseError("raw table line " + std::to_string(k + 1) + ": expected 6 fields");
    SensorReading r;
    r.time_s = parse_int(f[0], "time_s");
    r.sensor_id = f[1];
    r.count = static_cast<int>(parse_int(f[2], "count"));
    r.mean_speed = parse_double(f[3], "mean_speed_mps");
    r.occupancy = parse_double(f[4], "occupancy");
    if (!f[5].empty()) {
      for (const auto& id : split(f[5], ';')) r.vehicle_ids.push_back(parse_int(id, "vehicle id"));
    }
    const std::size_t idx = into.readings.size();
    if (ns == 0 || r.time_s != static_cast<std::int64_t>(idx / ns) || r.sensor_id != into.sensor_ids[idx % ns]) {
      throw ParseError("raw table line " + std::to_string(k + 1) + ": rows must cover every (second, sensor) in order");
    }
    if (r.count != static_cast<int>(r.vehicle_ids.size())) {
      throw ParseError("raw table line " + std::to_string(k + 1) + ": count does not match vehicle ids");
    }
    into.readings.push_back(std::move(r));
  }
  if (into.readings.size() != static_cast<std::size_t>(into.horizon_s) * ns) {
    throw ParseError("raw table has " + std::to_string(into.readings.size()) + " rows, expected " +
                     std::to_string(static_cast<std::size_t>(into.horizon_s) * ns));
  }
}

void emit_raw(const RawDataset& dataset, const std::vector<IncidentSpec>& incident_log, const std::string& dir) {
  std::filesystem::create_directories(dir);
  KeyValueDoc meta;
  meta.set("format", "raw-placement/1");
  meta.set("sensors", join(dataset.sensor_ids, ";"));
  meta.set("range_m", dataset.range_m);
  meta.set("horizon_s", dataset.horizon_s);
  meta.save(dir + "/placement.kv");
  write_text(dir + "/raw.csv", format_raw_table(dataset));
  write_text(dir + "/incidents.csv", format_incident_log(incident_log));
}

RawDataset load_raw(const std::string& dir) {
  const auto meta = KeyValueDoc::load(dir + "/placement.kv");
  if (meta.get_or("format", "") != "raw-placement/1") throw ParseError(dir + "/placement.kv: unknown format");
  RawDataset d;
  const std::string sensors = meta.get_or("sensors", "");
  if (!sensors.empty()) d.sensor_ids = split(sensors, ';');
  d.range_m = meta.get_double("range_m");
  d.horizon_s = meta.get_int_or("horizon_s", 0);
  if (!std::is_sorted(d.sensor_ids.begin(), d.sensor_ids.end())) {
    throw ParseError(dir + "/placement.kv: sensor ids must be sorted");
  }
  try {
    parse_raw_table(read_text(dir + "/raw.csv"), d);
  } catch (const ParseError& e) {
    throw ParseError(dir + "/raw.csv: " + e.what());
  }
  return d;
}

RawDataset select_sensors(const RawDataset& dataset, const std::vector<std::string>& keep) {
  std::vector<std::string> ids = keep;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) throw PreconditionError("select_sensors: empty sensor subset");
  std::vector<std::size_t> cols;
  for (const auto& id : ids) {
    auto it = std::find(dataset.sensor_ids.begin(), dataset.sensor_ids.end(), id);
    if (it == dataset.sensor_ids.end()) throw PreconditionError("select_sensors: sensor '" + id + "' not in dataset");
    cols.push_back(static_cast<std::size_t>(it - dataset.sensor_ids.begin()));
  }
  RawDataset out;
  out.sensor_ids = ids;
  out.range_m = dataset.range_m;
  out.horizon_s = dataset.horizon_s;
  out.readings.reserve(static_cast<std::size_t>(dataset.horizon_s) * ids.size());
  for (std::int64_t t = 0; t < dataset.horizon_s; ++t) {
    for (std::size_t c : cols) out.readings.push_back(dataset.at(t, c));
  }
  return out;
}

}  // namespace incidentlab
