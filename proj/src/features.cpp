#include "incidentlab/features.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <unordered_map>

namespace incidentlab {

namespace {

constexpr double kSecondsPerDay = 86400.0;

struct Visit {
  std::size_t sensor;
  std::int64_t first;
  std::int64_t last;
};

std::string read_text(const std::string& path) {
  std::string text;
  for (const auto& l : read_lines(path)) text += l + "\n";
  return text;
}

bool same_value(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

std::string to_string(LabelMode m) { return m == LabelMode::Stride ? "stride" : "window"; }

LabelMode parse_label_mode(const std::string& s) {
  if (s == "stride") return LabelMode::Stride;
  if (s == "window") return LabelMode::Window;
  throw ParseError("unknown label mode '" + s + "' (expected stride or window)");
}

void WindowConfig::validate() const {
  if (window_s != 300 && window_s != 600 && window_s != 900) {
    throw ValidationError("window must be 300, 600 or 900 s, got " + std::to_string(window_s));
  }
  if (stride_s < 1 || stride_s > window_s) throw ValidationError("stride must lie in [1, window]");
  if (staleness_s < 1) throw ValidationError("staleness must be positive");
}

bool FeatureRow::operator==(const FeatureRow& o) const {
  if (window_end_s != o.window_end_s || label_incident != o.label_incident || label_road != o.label_road ||
      label_severity != o.label_severity || features.size() != o.features.size()) {
    return false;
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!same_value(features[i], o.features[i])) return false;
  }
  return true;
}

std::vector<TravelTimeRecord> reidentify_travel_times(const RawDataset& raw, const SensorPairs& pairs,
                                                      std::int64_t staleness_s) {
  const std::size_t ns = raw.sensor_ids.size();
  std::set<std::pair<std::size_t, std::size_t>> wanted;
  for (const auto& [a, b] : pairs) {
    auto ia = std::find(raw.sensor_ids.begin(), raw.sensor_ids.end(), a);
    auto ib = std::find(raw.sensor_ids.begin(), raw.sensor_ids.end(), b);
    if (ia == raw.sensor_ids.end() || ib == raw.sensor_ids.end()) {
      throw PreconditionError("sensor pair (" + a + ", " + b + ") not in the raw dataset");
    }
    wanted.emplace(ia - raw.sensor_ids.begin(), ib - raw.sensor_ids.begin());
  }

  std::map<std::int64_t, std::vector<Visit>> visits;
  for (std::int64_t t = 0; t < raw.horizon_s; ++t) {
    for (std::size_t s = 0; s < ns; ++s) {
      for (auto id : raw.at(t, s).vehicle_ids) {
        auto& vs = visits[id];
        bool extended = false;
        for (auto it = vs.rbegin(); it != vs.rend() && it->last >= t - 1; ++it) {
          if (it->sensor == s && it->last == t - 1) {
            it->last = t;
            extended = true;
            break;
          }
        }
        if (!extended) vs.push_back(Visit{s, t, t});
      }
    }
  }

  std::vector<TravelTimeRecord> out;
  for (auto& [id, vs] : visits) {
    std::stable_sort(vs.begin(), vs.end(), [](const Visit& x, const Visit& y) { return x.first < y.first; });
    for (std::size_t i = 0; i + 1 < vs.size(); ++i) {
      const Visit& from = vs[i];
      const Visit& to = vs[i + 1];
      if (from.sensor == to.sensor || !wanted.count({from.sensor, to.sensor})) continue;
      if (to.first <= from.last || to.first - from.last > staleness_s) continue;
      out.push_back(TravelTimeRecord{raw.sensor_ids[from.sensor], raw.sensor_ids[to.sensor], id, from.last, to.first});
    }
  }
  std::sort(out.begin(), out.end(), [](const TravelTimeRecord& x, const TravelTimeRecord& y) {
    return std::tie(x.arrive, x.vehicle, x.from_sensor) < std::tie(y.arrive, y.vehicle, y.from_sensor);
  });
  return out;
}

std::vector<std::string> feature_columns(const std::vector<std::string>& sensor_ids, const SensorPairs& pairs) {
  std::vector<std::string> cols{"time_of_day"};
  for (const auto& s : sensor_ids) {
    cols.push_back("s" + s + "_count");
    cols.push_back("s" + s + "_speed");
    cols.push_back("s" + s + "_occupancy");
  }
  for (const auto& [a, b] : pairs) cols.push_back("tt_" + a + "_" + b);
  return cols;
}

FeatureTable build_feature_rows(const RawDataset& raw, const std::vector<TravelTimeRecord>& records,
                                const SensorPairs& pairs, const WindowConfig& cfg,
                                const std::vector<IncidentSpec>& incident_log, const RoadNetwork& network) {
  cfg.validate();
  const std::size_t ns = raw.sensor_ids.size();
  FeatureTable table;
  table.feature_names = feature_columns(raw.sensor_ids, pairs);
  table.incidents = incident_log;

  // per pair: (arrive, travel time), sorted by arrive
  std::map<std::pair<std::string, std::string>, std::size_t> pair_index;
  for (std::size_t p = 0; p < pairs.size(); ++p) pair_index[pairs[p]] = p;
  std::vector<std::vector<std::pair<std::int64_t, double>>> per_pair(pairs.size());
  for (const auto& r : records) {
    auto it = pair_index.find({r.from_sensor, r.to_sensor});
    if (it != pair_index.end()) per_pair[it->second].emplace_back(r.arrive, static_cast<double>(r.travel_time()));
  }
  for (auto& v : per_pair) std::stable_sort(v.begin(), v.end(), [](auto& x, auto& y) { return x.first < y.first; });

  std::vector<std::string> roads;
  for (const auto& inc : incident_log) {
    const auto s = network.find_segment(inc.segment_id);
    if (!s) throw ValidationError("incident " + std::to_string(inc.id) + " on unknown segment '" + inc.segment_id + "'");
    roads.push_back(network.segment(*s).road_label);
  }

  const std::int64_t label_span = cfg.label_mode == LabelMode::Stride ? cfg.stride_s : cfg.window_s;
  const double wlen = static_cast<double>(cfg.window_s);
  for (std::int64_t w = cfg.window_s; w <= raw.horizon_s; w += cfg.stride_s) {
    FeatureRow row;
    row.window_end_s = w;
    row.features.reserve(table.feature_names.size());
    row.features.push_back(std::fmod(static_cast<double>(w), kSecondsPerDay) / kSecondsPerDay);
    for (std::size_t s = 0; s < ns; ++s) {
      double count = 0.0, speed = 0.0, occ = 0.0;
      for (std::int64_t t = w - cfg.window_s; t < w; ++t) {
        const auto& r = raw.at(t, s);
        count += r.count;
        speed += r.mean_speed;
        occ += r.occupancy;
      }
      row.features.push_back(count / wlen);
      row.features.push_back(speed / wlen);
      row.features.push_back(occ / wlen);
    }
    for (const auto& recs : per_pair) {
      auto lo = std::lower_bound(recs.begin(), recs.end(), w - cfg.window_s,
                                 [](const auto& x, std::int64_t v) { return x.first < v; });
      double sum = 0.0;
      std::size_t n = 0;
      for (; lo != recs.end() && lo->first < w; ++lo, ++n) sum += lo->second;
      row.features.push_back(n > 0 ? sum / static_cast<double>(n) : kMissing);
    }
    // seconds (w - label_span, w] against [onset, end)
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < incident_log.size(); ++i) {
      const auto& inc = incident_log[i];
      const std::int64_t lo = std::max(w - label_span + 1, inc.onset_s);
      const std::int64_t hi = std::min(w, inc.end_s() - 1);
      if (lo > hi) continue;
      if (!hit || inc.onset_s < incident_log[*hit].onset_s) hit = i;
    }
    if (hit) {
      row.label_incident = true;
      row.label_road = roads[*hit];
      row.label_severity = incident_log[*hit].severity;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void append_table(FeatureTable& into, const FeatureTable& day, std::int64_t offset_s) {
  if (into.feature_names.empty() && into.rows.empty()) into.feature_names = day.feature_names;
  if (into.feature_names != day.feature_names) throw PreconditionError("append_table: feature schemas differ");
  for (auto row : day.rows) {
    row.window_end_s += offset_s;
    into.rows.push_back(std::move(row));
  }
  for (auto inc : day.incidents) {
    inc.onset_s += offset_s;
    into.incidents.push_back(std::move(inc));
  }
}

std::string format_feature_table(const FeatureTable& table) {
  std::string out = "window_end_s";
  for (const auto& c : table.feature_names) out += "," + c;
  out += ",label_incident,label_road,label_severity\n";
  for (const auto& r : table.rows) {
    out += std::to_string(r.window_end_s);
    for (double v : r.features) {
      out += ',';
      if (!is_missing(v)) out += format_double(v);
    }
    out += r.label_incident ? ",1," : ",0,";
    out += r.label_road + ",";
    if (r.label_severity) out += to_string(*r.label_severity);
    out += '\n';
  }
  return out;
}

FeatureTable parse_feature_table(const std::string& text) {
  const auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]).empty()) throw ParseError("feature table is empty");
  const auto header = split(trim(lines[0]), ',');
  const std::size_t nc = header.size();
  if (nc < 4 || header[0] != "window_end_s" || header[nc - 3] != "label_incident" || header[nc - 2] != "label_road" ||
      header[nc - 1] != "label_severity") {
    throw ParseError("feature table header must be window_end_s,...,label_incident,label_road,label_severity");
  }
  FeatureTable table;
  table.feature_names.assign(header.begin() + 1, header.end() - 3);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const std::string line = trim(lines[k]);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != nc) {
      throw ParseError("feature table line " + std::to_string(k + 1) + ": expected " + std::to_string(nc) + " fields");
    }
    FeatureRow r;
    r.window_end_s = parse_int(f[0], "window_end_s");
    for (std::size_t c = 1; c + 3 < nc; ++c) r.features.push_back(f[c].empty() ? kMissing : parse_double(f[c], header[c]));
    r.label_incident = parse_bool(f[nc - 3], "label_incident");
    r.label_road = f[nc - 2];
    if (!f[nc - 1].empty()) r.label_severity = parse_severity(f[nc - 1]);
    table.rows.push_back(std::move(r));
  }
  return table;
}

void write_feature_table(const FeatureTable& table, const std::string& path) {
  write_text(path, format_feature_table(table));
  std::string schema = "window_end_s\n";
  for (const auto& c : table.feature_names) schema += c + "\n";
  schema += "label_incident\nlabel_road\nlabel_severity\n";
  write_text(path + ".schema", schema);
  write_text(path + ".incidents.csv", format_incident_log(table.incidents));
}

FeatureTable load_feature_table(const std::string& path) {
  FeatureTable table;
  try {
    table = parse_feature_table(read_text(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (std::filesystem::exists(path + ".incidents.csv")) table.incidents = load_incident_log(path + ".incidents.csv");
  return table;
}

}  // namespace incidentlab
