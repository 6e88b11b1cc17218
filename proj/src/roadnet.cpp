#include "incidentlab/roadnet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>

#include "incidentlab/common.hpp"

namespace incidentlab {

namespace {

constexpr std::int64_t kDefaultPhaseSeconds = 30;

const std::map<std::string, std::vector<std::string>>& section_headers() {
  static const std::map<std::string, std::vector<std::string>> headers = {
      {"nodes", {"id", "x", "y", "signalized", "sensor_site"}},
      {"segments", {"id", "from", "to", "length_m", "lanes", "speed_limit_mps", "road_label"}},
      {"signals", {"node_id", "phase_index", "permitted_segment_ids", "duration_s"}},
      {"terminals", {"node_id", "entry_weight", "exit_weight"}},
      {"od", {"origin", "destination", "weight"}},
  };
  return headers;
}

std::vector<std::string> split_fields(const std::string& line) {
  auto fields = split(line, ',');
  for (auto& f : fields) f = trim(f);
  return fields;
}

}  // namespace

std::int64_t SignalPlan::cycle_s() const {
  std::int64_t c = 0;
  for (const auto& p : phases) c += p.duration_s;
  return c;
}

std::size_t SignalPlan::phase_at(std::int64_t t) const {
  const std::int64_t cycle = cycle_s();
  std::int64_t pos = ((t % cycle) + cycle) % cycle;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (pos < phases[i].duration_s) return i;
    pos -= phases[i].duration_s;
  }
  return phases.size() - 1;
}

NetworkSpec parse_network_spec(const std::string& text) {
  NetworkSpec spec;
  std::string section;
  bool expect_header = false;
  std::set<std::string> seen;
  // signal rows are collected per node and ordered by phase index afterwards
  std::map<std::string, std::map<std::int64_t, SignalPhase>> phases;
  std::vector<std::string> signal_order;

  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!section_headers().count(section)) {
        throw ParseError(where + ": unknown section [" + section + "]");
      }
      if (!seen.insert(section).second) throw ParseError(where + ": duplicate section [" + section + "]");
      expect_header = true;
      continue;
    }
    if (section.empty()) throw ParseError(where + ": data outside of a section");
    const auto fields = split_fields(line);
    const auto& header = section_headers().at(section);
    if (expect_header) {
      if (fields != header) {
        throw ParseError(where + ": expected header '" + join(header, ",") + "' for [" + section + "]");
      }
      expect_header = false;
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    if (section == "nodes") {
      spec.nodes.push_back(Node{fields[0], parse_double(fields[1], "x"), parse_double(fields[2], "y"),
                                parse_bool(fields[3], "signalized"), parse_bool(fields[4], "sensor_site")});
    } else if (section == "segments") {
      spec.segments.push_back(Segment{fields[0], fields[1], fields[2], parse_double(fields[3], "length_m"),
                                      static_cast<int>(parse_int(fields[4], "lanes")),
                                      parse_double(fields[5], "speed_limit_mps"), fields[6]});
    } else if (section == "signals") {
      const std::int64_t idx = parse_int(fields[1], "phase_index");
      SignalPhase phase;
      for (auto& s : split(fields[2], ';')) {
        auto id = trim(s);
        if (!id.empty()) phase.permitted_segments.push_back(id);
      }
      phase.duration_s = parse_int(fields[3], "duration_s");
      if (!phases.count(fields[0])) signal_order.push_back(fields[0]);
      if (!phases[fields[0]].emplace(idx, std::move(phase)).second) {
        throw ParseError(where + ": duplicate phase " + std::to_string(idx) + " for node " + fields[0]);
      }
    } else if (section == "terminals") {
      spec.terminals.push_back(
          Terminal{fields[0], parse_double(fields[1], "entry_weight"), parse_double(fields[2], "exit_weight")});
    } else if (section == "od") {
      spec.od.push_back(OdFlow{fields[0], fields[1], parse_double(fields[2], "weight")});
    }
  }
  for (const char* required : {"nodes", "segments"}) {
    if (!seen.count(required)) throw ParseError(std::string("missing section [") + required + "]");
  }
  for (const auto& node : signal_order) {
    SignalPlan plan{node, {}};
    std::int64_t expected = 0;
    for (auto& [idx, phase] : phases[node]) {
      if (idx != expected) {
        throw ParseError("signal plan for " + node + ": phase indices must be 0..k-1");
      }
      ++expected;
      plan.phases.push_back(phase);
    }
    spec.signals.push_back(std::move(plan));
  }
  return spec;
}

RoadNetwork::RoadNetwork(NetworkSpec spec) : spec_(std::move(spec)) { resolve(); }

void RoadNetwork::resolve() {
  if (spec_.nodes.empty()) throw ValidationError("network has no nodes");
  for (Index i = 0; i < spec_.nodes.size(); ++i) {
    const auto& n = spec_.nodes[i];
    if (n.id.empty()) throw ValidationError("node with empty id");
    if (!std::isfinite(n.x) || !std::isfinite(n.y)) throw ValidationError("node " + n.id + " has non-finite coordinates");
    if (!node_ids_.emplace(n.id, i).second) throw ValidationError("duplicate node id " + n.id);
  }
  out_.assign(spec_.nodes.size(), {});
  in_.assign(spec_.nodes.size(), {});
  for (Index i = 0; i < spec_.segments.size(); ++i) {
    const auto& s = spec_.segments[i];
    if (!segment_ids_.emplace(s.id, i).second) throw ValidationError("duplicate segment id " + s.id);
    auto f = node_ids_.find(s.from);
    if (f == node_ids_.end()) throw ValidationError("segment " + s.id + " references missing node " + s.from);
    auto t = node_ids_.find(s.to);
    if (t == node_ids_.end()) throw ValidationError("segment " + s.id + " references missing node " + s.to);
    if (f->second == t->second) throw ValidationError("segment " + s.id + " is a self-loop");
    if (!(s.length_m > 0.0)) throw ValidationError("segment " + s.id + " has non-positive length");
    if (s.lanes < 1) throw ValidationError("segment " + s.id + " needs at least one lane");
    if (!(s.speed_limit_mps > 0.0)) throw ValidationError("segment " + s.id + " has non-positive speed limit");
    if (s.road_label.empty()) throw ValidationError("segment " + s.id + " has empty road label");
    const auto& a = spec_.nodes[f->second];
    const auto& b = spec_.nodes[t->second];
    const double euclid = std::hypot(a.x - b.x, a.y - b.y);
    if (std::abs(s.length_m - euclid) > 0.2 * euclid) {
      throw ValidationError("segment " + s.id + " length " + format_double(s.length_m) +
                            " differs from endpoint distance " + format_double(euclid) + " by more than 20%");
    }
    seg_from_.push_back(f->second);
    seg_to_.push_back(t->second);
    out_[f->second].push_back(i);
    in_[t->second].push_back(i);
    max_speed_ = std::max(max_speed_, s.speed_limit_mps);
  }
  if (spec_.segments.empty()) throw ValidationError("network has no segments");

  // Signals: explicit plans first, then defaults for signalized nodes without one.
  plan_of_node_.assign(spec_.nodes.size(), std::nullopt);
  for (std::size_t p = 0; p < spec_.signals.size(); ++p) {
    const auto& plan = spec_.signals[p];
    auto it = node_ids_.find(plan.node_id);
    if (it == node_ids_.end()) throw ValidationError("signal plan references missing node " + plan.node_id);
    if (!spec_.nodes[it->second].signalized) {
      throw ValidationError("signal plan for unsignalized node " + plan.node_id);
    }
    if (plan.phases.empty()) throw ValidationError("signal plan for " + plan.node_id + " has no phases");
    for (const auto& ph : plan.phases) {
      if (ph.duration_s <= 0) throw ValidationError("signal plan for " + plan.node_id + " has non-positive duration");
      for (const auto& sid : ph.permitted_segments) {
        auto s = segment_ids_.find(sid);
        if (s == segment_ids_.end()) throw ValidationError("signal plan references missing segment " + sid);
        if (seg_to_[s->second] != it->second) {
          throw ValidationError("segment " + sid + " does not enter signalized node " + plan.node_id);
        }
      }
    }
    if (plan_of_node_[it->second]) throw ValidationError("duplicate signal plan for " + plan.node_id);
    plan_of_node_[it->second] = p;
  }
  for (Index n = 0; n < spec_.nodes.size(); ++n) {
    if (!spec_.nodes[n].signalized || plan_of_node_[n]) continue;
    SignalPlan plan{spec_.nodes[n].id, {}};
    SignalPhase east_west{{}, kDefaultPhaseSeconds};
    SignalPhase north_south{{}, kDefaultPhaseSeconds};
    for (Index s : in_[n]) {
      const auto& a = spec_.nodes[seg_from_[s]];
      const auto& b = spec_.nodes[n];
      auto& phase = std::abs(b.x - a.x) >= std::abs(b.y - a.y) ? east_west : north_south;
      phase.permitted_segments.push_back(spec_.segments[s].id);
    }
    if (!east_west.permitted_segments.empty()) plan.phases.push_back(east_west);
    if (!north_south.permitted_segments.empty()) plan.phases.push_back(north_south);
    if (plan.phases.empty()) plan.phases.push_back(SignalPhase{{}, 2 * kDefaultPhaseSeconds});
    plan_of_node_[n] = spec_.signals.size();
    spec_.signals.push_back(std::move(plan));
  }
  allowed_.assign(spec_.segments.size(), {});
  for (Index s = 0; s < spec_.segments.size(); ++s) {
    const auto& p = plan_of_node_[seg_to_[s]];
    if (!p) continue;
    const auto& plan = spec_.signals[*p];
    allowed_[s].assign(plan.phases.size(), false);
    for (std::size_t k = 0; k < plan.phases.size(); ++k) {
      const auto& ids = plan.phases[k].permitted_segments;
      allowed_[s][k] = std::find(ids.begin(), ids.end(), spec_.segments[s].id) != ids.end();
    }
  }

  // Terminals.
  std::vector<double> entry_w(spec_.nodes.size(), 0.0);
  std::vector<double> exit_w(spec_.nodes.size(), 0.0);
  if (spec_.terminals.empty()) {
    for (Index n = 0; n < spec_.nodes.size(); ++n) {
      spec_.terminals.push_back(Terminal{spec_.nodes[n].id, out_[n].empty() ? 0.0 : 1.0, in_[n].empty() ? 0.0 : 1.0});
    }
  }
  {
    for (const auto& t : spec_.terminals) {
      auto it = node_ids_.find(t.node_id);
      if (it == node_ids_.end()) throw ValidationError("terminal references missing node " + t.node_id);
      if (!(t.entry_weight >= 0.0) || !(t.exit_weight >= 0.0)) {
        throw ValidationError("terminal " + t.node_id + " has negative weight");
      }
      entry_w[it->second] += t.entry_weight;
      exit_w[it->second] += t.exit_weight;
    }
  }
  for (Index n = 0; n < spec_.nodes.size(); ++n) {
    if (entry_w[n] > 0.0) {
      if (out_[n].empty()) throw ValidationError("entry node " + spec_.nodes[n].id + " has no outgoing segment");
      entries_.push_back(n);
      entry_weights_.push_back(entry_w[n]);
    }
    if (exit_w[n] > 0.0) {
      if (in_[n].empty()) throw ValidationError("exit node " + spec_.nodes[n].id + " has no incoming segment");
      exits_.push_back(n);
      exit_weights_.push_back(exit_w[n]);
    }
  }
  if (entries_.empty()) throw ValidationError("network has no entry nodes");
  if (exits_.empty()) throw ValidationError("network has no exit nodes");
  for (const auto& od : spec_.od) {
    auto o = node_ids_.find(od.origin);
    auto d = node_ids_.find(od.destination);
    if (o == node_ids_.end()) throw ValidationError("od row references missing node " + od.origin);
    if (d == node_ids_.end()) throw ValidationError("od row references missing node " + od.destination);
    if (!(od.weight >= 0.0)) throw ValidationError("od row has negative weight");
    if (o->second == d->second) throw ValidationError("od row with identical origin and destination " + od.origin);
    if (od.weight > 0.0) od_pairs_.push_back(OdPair{o->second, d->second, od.weight});
  }
  validate_connectivity();
}

void RoadNetwork::validate_connectivity() const {
  // weak connectivity via union of both directions
  const std::size_t n = spec_.nodes.size();
  std::vector<bool> seen(n, false);
  std::vector<Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Index u = stack.back();
    stack.pop_back();
    for (Index s : out_[u]) {
      if (!seen[seg_to_[s]]) seen[seg_to_[s]] = true, stack.push_back(seg_to_[s]);
    }
    for (Index s : in_[u]) {
      if (!seen[seg_from_[s]]) seen[seg_from_[s]] = true, stack.push_back(seg_from_[s]);
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (!seen[i]) throw ValidationError("network is disconnected: node " + spec_.nodes[i].id + " unreachable");
  }
  std::vector<bool> is_exit(n, false);
  for (Index e : exits_) is_exit[e] = true;
  for (Index e : entries_) {
    const auto reach = reachable_from(e);
    bool ok = false;
    for (Index x = 0; x < n && !ok; ++x) ok = reach[x] && is_exit[x] && x != e;
    if (!ok) throw ValidationError("entry node " + spec_.nodes[e].id + " reaches no exit node");
  }
  for (const auto& od : od_pairs_) {
    if (!reachable_from(od.origin)[od.destination]) {
      throw ValidationError("od destination " + spec_.nodes[od.destination].id + " unreachable from " +
                            spec_.nodes[od.origin].id);
    }
  }
}

std::vector<bool> RoadNetwork::reachable_from(Index origin) const {
  std::vector<bool> seen(spec_.nodes.size(), false);
  std::vector<Index> stack{origin};
  seen[origin] = true;
  while (!stack.empty()) {
    const Index u = stack.back();
    stack.pop_back();
    for (Index s : out_[u]) {
      const Index v = seg_to_[s];
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

std::optional<Index> RoadNetwork::find_node(const std::string& id) const {
  auto it = node_ids_.find(id);
  if (it == node_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<Index> RoadNetwork::find_segment(const std::string& id) const {
  auto it = segment_ids_.find(id);
  if (it == segment_ids_.end()) return std::nullopt;
  return it->second;
}

Index RoadNetwork::node_index(const std::string& id) const {
  auto n = find_node(id);
  if (!n) throw ValidationError("unknown node " + id);
  return *n;
}

Index RoadNetwork::segment_index(const std::string& id) const {
  auto s = find_segment(id);
  if (!s) throw ValidationError("unknown segment " + id);
  return *s;
}

bool RoadNetwork::permits(Index segment, std::int64_t t) const {
  const auto& allowed = allowed_[segment];
  if (allowed.empty()) return true;
  const auto& plan = spec_.signals[*plan_of_node_[seg_to_[segment]]];
  return allowed[plan.phase_at(t)];
}

const SignalPlan* RoadNetwork::signal_plan(Index node) const {
  const auto& p = plan_of_node_[node];
  return p ? &spec_.signals[*p] : nullptr;
}

std::vector<std::string> RoadNetwork::road_labels() const {
  std::set<std::string> labels;
  for (const auto& s : spec_.segments) labels.insert(s.road_label);
  return {labels.begin(), labels.end()};
}

RoadNetwork parse_network(const std::string& text) { return RoadNetwork(parse_network_spec(text)); }

RoadNetwork load_network(const std::string& path) {
  std::string text;
  for (const auto& l : read_lines(path)) {
    text += l;
    text += '\n';
  }
  try {
    return parse_network(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string serialize_network(const RoadNetwork& network) {
  const auto& spec = network.spec();
  std::string out = "[nodes]\nid,x,y,signalized,sensor_site\n";
  for (const auto& n : spec.nodes) {
    out += n.id + "," + format_double(n.x) + "," + format_double(n.y) + "," + (n.signalized ? "1" : "0") + "," +
           (n.sensor_site ? "1" : "0") + "\n";
  }
  out += "\n[segments]\nid,from,to,length_m,lanes,speed_limit_mps,road_label\n";
  for (const auto& s : spec.segments) {
    out += s.id + "," + s.from + "," + s.to + "," + format_double(s.length_m) + "," + std::to_string(s.lanes) + "," +
           format_double(s.speed_limit_mps) + "," + s.road_label + "\n";
  }
  out += "\n[signals]\nnode_id,phase_index,permitted_segment_ids,duration_s\n";
  for (const auto& p : spec.signals) {
    for (std::size_t k = 0; k < p.phases.size(); ++k) {
      out += p.node_id + "," + std::to_string(k) + "," + join(p.phases[k].permitted_segments, ";") + "," +
             std::to_string(p.phases[k].duration_s) + "\n";
    }
  }
  out += "\n[terminals]\nnode_id,entry_weight,exit_weight\n";
  for (const auto& t : spec.terminals) {
    out += t.node_id + "," + format_double(t.entry_weight) + "," + format_double(t.exit_weight) + "\n";
  }
  if (!spec.od.empty()) {
    out += "\n[od]\norigin,destination,weight\n";
    for (const auto& od : spec.od) out += od.origin + "," + od.destination + "," + format_double(od.weight) + "\n";
  }
  return out;
}

void validate_placement(const RoadNetwork& network, const SensorPlacement& placement) {
  if (placement.sensor_ids.empty()) throw ValidationError("sensor placement is empty");
  if (!(placement.range_m > 0.0)) throw ValidationError("sensor range must be positive");
  std::set<std::string> seen;
  for (const auto& id : placement.sensor_ids) {
    auto n = network.find_node(id);
    if (!n) throw ValidationError("sensor " + id + " is not a network node");
    if (!network.node(*n).sensor_site) throw ValidationError("node " + id + " is not a sensor site");
    if (!seen.insert(id).second) throw ValidationError("duplicate sensor " + id);
  }
}

std::vector<std::pair<std::string, std::string>> contiguous_sensor_pairs(const RoadNetwork& network,
                                                                         const SensorPlacement& placement) {
  validate_placement(network, placement);
  std::vector<bool> is_sensor(network.nodes().size(), false);
  for (const auto& id : placement.sensor_ids) is_sensor[network.node_index(id)] = true;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& id : placement.sensor_ids) {
    const Index a = network.node_index(id);
    std::vector<bool> seen(network.nodes().size(), false);
    std::vector<Index> stack{a};
    seen[a] = true;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index s : network.out_segments(u)) {
        const Index v = network.to_node(s);
        if (seen[v]) continue;
        seen[v] = true;
        if (is_sensor[v]) {
          pairs.emplace_back(id, network.node(v).id);  // do not expand through v
        } else {
          stack.push_back(v);
        }
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

namespace {

bool nearly_equal(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(a, b)); }

bool ids_less(const RoadNetwork& net, const Route& a, const Route& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [&](Index x, Index y) {
    return net.segment(x).id < net.segment(y).id;
  });
}

}  // namespace

Route shortest_route(const RoadNetwork& network, Index origin, Index destination) {
  const std::size_t n = network.nodes().size();
  if (origin >= n || destination >= n) throw PreconditionError("shortest_route: node index out of range");
  if (origin == destination) throw PreconditionError("shortest_route: origin equals destination");
  std::vector<double> cost(n, kInf);
  std::vector<Route> path(n);
  std::vector<bool> done(n, false);
  cost[origin] = 0.0;
  // Small graphs: an O(V^2) selection keeps the tie-breaking explicit.
  for (std::size_t iter = 0; iter < n; ++iter) {
    Index u = kNoIndex;
    for (Index v = 0; v < n; ++v) {
      if (done[v] || cost[v] == kInf) continue;
      if (u == kNoIndex || cost[v] < cost[u] - 1e-9 * std::max(1.0, cost[u]) ||
          (nearly_equal(cost[v], cost[u]) && ids_less(network, path[v], path[u]))) {
        u = v;
      }
    }
    if (u == kNoIndex) break;
    done[u] = true;
    if (u == destination) break;
    for (Index s : network.out_segments(u)) {
      const Index v = network.to_node(s);
      if (done[v]) continue;
      const auto& seg = network.segment(s);
      const double c = cost[u] + seg.length_m / seg.speed_limit_mps;
      Route candidate = path[u];
      candidate.push_back(s);
      if (cost[v] == kInf || (c < cost[v] && !nearly_equal(c, cost[v])) ||
          (nearly_equal(c, cost[v]) && ids_less(network, candidate, path[v]))) {
        cost[v] = c;
        path[v] = std::move(candidate);
      }
    }
  }
  if (cost[destination] == kInf) {
    throw PreconditionError("destination " + network.node(destination).id + " unreachable from " +
                            network.node(origin).id);
  }
  return path[destination];
}

Route shortest_route(const RoadNetwork& network, const std::string& origin, const std::string& destination) {
  return shortest_route(network, network.node_index(origin), network.node_index(destination));
}

double route_free_flow_time(const RoadNetwork& network, const Route& route) {
  double t = 0.0;
  for (Index s : route) t += network.segment(s).length_m / network.segment(s).speed_limit_mps;
  return t;
}

double route_length(const RoadNetwork& network, const Route& route) {
  double l = 0.0;
  for (Index s : route) l += network.segment(s).length_m;
  return l;
}

std::vector<std::string> route_ids(const RoadNetwork& network, const Route& route) {
  std::vector<std::string> ids;
  for (Index s : route) ids.push_back(network.segment(s).id);
  return ids;
}

const Route& RouteTable::route(Index origin, Index destination) {
  auto key = std::make_pair(origin, destination);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(key, shortest_route(*network_, origin, destination)).first->second;
}

namespace {

// Bounded Dijkstra over segment lengths. `forward` follows segment
// direction; otherwise edges are traversed in reverse.
std::vector<double> bounded_distances(const RoadNetwork& net, const std::vector<std::pair<Index, double>>& seeds,
                                      bool forward, double bound) {
  std::vector<double> dist(net.nodes().size(), kInf);
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (auto [n, d] : seeds) {
    if (d < dist[n]) {
      dist[n] = d;
      heap.emplace(d, n);
    }
  }
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u] || d > bound) continue;
    const auto& edges = forward ? net.out_segments(u) : net.in_segments(u);
    for (Index s : edges) {
      const Index v = forward ? net.to_node(s) : net.from_node(s);
      const double nd = d + net.segment(s).length_m;
      if (nd < dist[v]) {
        dist[v] = nd;
        heap.emplace(nd, v);
      }
    }
  }
  return dist;
}

}  // namespace

ProximityMap::ProximityMap(const RoadNetwork& network, Anchor anchor, double radius)
    : network_(&network), anchor_(anchor), radius_(radius) {
  std::vector<std::pair<Index, double>> to_seeds;
  std::vector<std::pair<Index, double>> from_seeds;
  if (anchor.node != kNoIndex) {
    to_seeds.emplace_back(anchor.node, 0.0);
    from_seeds.emplace_back(anchor.node, 0.0);
  } else {
    const auto& seg = network.segment(anchor.segment);
    to_seeds.emplace_back(network.from_node(anchor.segment), anchor.offset);
    from_seeds.emplace_back(network.to_node(anchor.segment), seg.length_m - anchor.offset);
  }
  // distance from node n to the anchor: reverse search from the anchor
  const auto node_to_anchor = bounded_distances(network, to_seeds, false, radius);
  const auto anchor_to_node = bounded_distances(network, from_seeds, true, radius);
  const std::size_t ns = network.segments().size();
  to_anchor_from_end_.assign(ns, kInf);
  from_anchor_to_start_.assign(ns, kInf);
  for (Index s = 0; s < ns; ++s) {
    to_anchor_from_end_[s] = node_to_anchor[network.to_node(s)];
    from_anchor_to_start_[s] = anchor_to_node[network.from_node(s)];
    const double len = network.segment(s).length_m;
    // covered interval(s) on this segment
    std::vector<std::pair<double, double>> iv;
    if (to_anchor_from_end_[s] <= radius) {
      iv.emplace_back(std::max(0.0, len - (radius - to_anchor_from_end_[s])), len);
    }
    if (from_anchor_to_start_[s] <= radius) {
      iv.emplace_back(0.0, std::min(len, radius - from_anchor_to_start_[s]));
    }
    if (s == anchor.segment) {
      iv.emplace_back(std::max(0.0, anchor.offset - radius), std::min(len, anchor.offset + radius));
    }
    if (iv.empty()) continue;
    std::sort(iv.begin(), iv.end());
    double covered = 0.0;
    double cur_lo = iv[0].first;
    double cur_hi = iv[0].second;
    for (std::size_t k = 1; k < iv.size(); ++k) {
      if (iv[k].first > cur_hi) {
        covered += cur_hi - cur_lo;
        cur_lo = iv[k].first;
        cur_hi = iv[k].second;
      } else {
        cur_hi = std::max(cur_hi, iv[k].second);
      }
    }
    covered += cur_hi - cur_lo;
    if (covered > 0.0 || s == anchor.segment) touched_.push_back(s);
    covered_ += covered * network.segment(s).lanes;
  }
}

double ProximityMap::raw_distance(Index segment, double offset) const {
  const double len = network_->segment(segment).length_m;
  double d = std::min(len - offset + to_anchor_from_end_[segment], from_anchor_to_start_[segment] + offset);
  if (segment == anchor_.segment) d = std::min(d, std::abs(offset - anchor_.offset));
  return d;
}

double ProximityMap::distance(Index segment, double offset) const {
  const double d = raw_distance(segment, offset);
  return d <= radius_ ? d : kInf;
}

}  // namespace incidentlab
