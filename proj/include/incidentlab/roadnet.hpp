#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace incidentlab {

using Index = std::size_t;
inline constexpr Index kNoIndex = std::numeric_limits<Index>::max();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  bool signalized = false;
  bool sensor_site = false;

  bool operator==(const Node&) const = default;
};

struct Segment {
  std::string id;
  std::string from;
  std::string to;
  double length_m = 0.0;
  int lanes = 1;
  double speed_limit_mps = 0.0;
  std::string road_label;

  bool operator==(const Segment&) const = default;
};

struct SignalPhase {
  std::vector<std::string> permitted_segments;
  std::int64_t duration_s = 0;

  bool operator==(const SignalPhase&) const = default;
};

struct SignalPlan {
  std::string node_id;
  std::vector<SignalPhase> phases;

  std::int64_t cycle_s() const;
  std::size_t phase_at(std::int64_t t) const;

  bool operator==(const SignalPlan&) const = default;
};

/// Demand weights for a node that generates and/or absorbs trips.
struct Terminal {
  std::string node_id;
  double entry_weight = 0.0;
  double exit_weight = 0.0;

  bool operator==(const Terminal&) const = default;
};

struct OdFlow {
  std::string origin;
  std::string destination;
  double weight = 0.0;

  bool operator==(const OdFlow&) const = default;
};

/// Parsed network file content, before index resolution.
struct NetworkSpec {
  std::vector<Node> nodes;
  std::vector<Segment> segments;
  std::vector<SignalPlan> signals;
  std::vector<Terminal> terminals;
  std::vector<OdFlow> od;

  bool operator==(const NetworkSpec&) const = default;
};

/// Validated, immutable road graph with resolved indices.
///
/// Signalized nodes without an explicit plan receive a fixed two-phase plan
/// (30 s each) splitting approaches into east-west and north-south groups.
/// A file without a [terminals] section treats every node with outgoing
/// segments as an entry and every node with incoming segments as an exit.
class RoadNetwork {
 public:
  explicit RoadNetwork(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<Node>& nodes() const { return spec_.nodes; }
  const std::vector<Segment>& segments() const { return spec_.segments; }
  const Node& node(Index i) const { return spec_.nodes[i]; }
  const Segment& segment(Index i) const { return spec_.segments[i]; }

  std::optional<Index> find_node(const std::string& id) const;
  std::optional<Index> find_segment(const std::string& id) const;
  Index node_index(const std::string& id) const;
  Index segment_index(const std::string& id) const;

  Index from_node(Index segment) const { return seg_from_[segment]; }
  Index to_node(Index segment) const { return seg_to_[segment]; }
  const std::vector<Index>& out_segments(Index node) const { return out_[node]; }
  const std::vector<Index>& in_segments(Index node) const { return in_[node]; }

  /// True when a vehicle on `segment` may cross its downstream node at time t.
  bool permits(Index segment, std::int64_t t) const;
  const SignalPlan* signal_plan(Index node) const;

  const std::vector<Index>& entry_nodes() const { return entries_; }
  const std::vector<double>& entry_weights() const { return entry_weights_; }
  const std::vector<Index>& exit_nodes() const { return exits_; }
  const std::vector<double>& exit_weights() const { return exit_weights_; }

  struct OdPair {
    Index origin;
    Index destination;
    double weight;
  };
  const std::vector<OdPair>& od_pairs() const { return od_pairs_; }

  /// Distinct road labels in lexicographic order.
  std::vector<std::string> road_labels() const;
  double max_speed_limit() const { return max_speed_; }

  /// Nodes reachable from `origin` by directed paths (including origin).
  std::vector<bool> reachable_from(Index origin) const;

 private:
  void resolve();
  void validate_connectivity() const;

  NetworkSpec spec_;
  std::map<std::string, Index> node_ids_;
  std::map<std::string, Index> segment_ids_;
  std::vector<Index> seg_from_;
  std::vector<Index> seg_to_;
  std::vector<std::vector<Index>> out_;
  std::vector<std::vector<Index>> in_;
  std::vector<std::optional<std::size_t>> plan_of_node_;
  // allowed_[segment][phase] for segments entering a signalized node.
  std::vector<std::vector<bool>> allowed_;
  std::vector<Index> entries_;
  std::vector<double> entry_weights_;
  std::vector<Index> exits_;
  std::vector<double> exit_weights_;
  std::vector<OdPair> od_pairs_;
  double max_speed_ = 0.0;
};

NetworkSpec parse_network_spec(const std::string& text);
RoadNetwork parse_network(const std::string& text);
RoadNetwork load_network(const std::string& path);
std::string serialize_network(const RoadNetwork& network);

struct SensorPlacement {
  std::vector<std::string> sensor_ids;
  double range_m = 50.0;

  bool operator==(const SensorPlacement&) const = default;
};

/// Throws ValidationError unless the placement is non-empty and every id is
/// a sensor-site node.
void validate_placement(const RoadNetwork& network, const SensorPlacement& placement);

/// Ordered pairs (a, b), a != b, such that a directed path from a to b exists
/// that passes through no other sensor node. Sorted by (a, b).
std::vector<std::pair<std::string, std::string>> contiguous_sensor_pairs(
    const RoadNetwork& network, const SensorPlacement& placement);

using Route = std::vector<Index>;

/// Minimum free-flow travel-time route. Equal-cost routes are ordered by
/// their segment-id sequence, lexicographically smallest wins.
/// Throws PreconditionError when the destination is unreachable.
Route shortest_route(const RoadNetwork& network, Index origin, Index destination);
Route shortest_route(const RoadNetwork& network, const std::string& origin,
                     const std::string& destination);
double route_free_flow_time(const RoadNetwork& network, const Route& route);
double route_length(const RoadNetwork& network, const Route& route);
std::vector<std::string> route_ids(const RoadNetwork& network, const Route& route);

/// Memoized shortest routes per origin-destination pair.
class RouteTable {
 public:
  explicit RouteTable(const RoadNetwork& network) : network_(&network) {}
  const Route& route(Index origin, Index destination);

 private:
  const RoadNetwork* network_;
  std::map<std::pair<Index, Index>, Route> cache_;
};

/// A location that path distances are measured to: either a node or a point
/// at `offset` metres along `segment`.
struct Anchor {
  Index node = kNoIndex;
  Index segment = kNoIndex;
  double offset = 0.0;

  static Anchor at_node(Index n) { return Anchor{n, kNoIndex, 0.0}; }
  static Anchor at_point(Index s, double off) { return Anchor{kNoIndex, s, off}; }
};

/// Network path distance (in either travel direction) from positions on the
/// road graph to an anchor, truncated at `radius`.
class ProximityMap {
 public:
  ProximityMap(const RoadNetwork& network, Anchor anchor, double radius);

  /// Path distance from (segment, offset) to the anchor, or +inf when it
  /// exceeds the radius.
  double distance(Index segment, double offset) const;
  /// Lane-metres of road whose distance to the anchor is within the radius.
  double covered_lane_length() const { return covered_; }
  /// Segments with at least one point within the radius.
  const std::vector<Index>& segments() const { return touched_; }
  double radius() const { return radius_; }

 private:
  double raw_distance(Index segment, double offset) const;

  const RoadNetwork* network_;
  Anchor anchor_;
  double radius_;
  std::vector<double> to_anchor_from_end_;    // d(to_node(s) -> anchor)
  std::vector<double> from_anchor_to_start_;  // d(anchor -> from_node(s))
  std::vector<Index> touched_;
  double covered_ = 0.0;
};

}  // namespace incidentlab
