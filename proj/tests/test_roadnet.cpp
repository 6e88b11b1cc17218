#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <set>

#include "incidentlab/common.hpp"
#include "incidentlab/roadnet.hpp"
#include "test_support.hpp"

using namespace incidentlab;
using testsupport::chain_text;
using testsupport::grid;

namespace {

// All simple paths (as node index sequences) from a to b.
void enumerate_paths(const RoadNetwork& net, Index at, Index goal, std::vector<Index>& path,
                     std::vector<bool>& on_path, std::vector<std::vector<Index>>& out) {
  if (at == goal) {
    out.push_back(path);
    return;
  }
  for (Index s : net.out_segments(at)) {
    const Index nx = net.to_node(s);
    if (on_path[nx]) continue;
    on_path[nx] = true;
    path.push_back(s);
    enumerate_paths(net, nx, goal, path, on_path, out);
    path.pop_back();
    on_path[nx] = false;
  }
}

std::vector<std::vector<Index>> all_simple_routes(const RoadNetwork& net, Index a, Index b) {
  std::vector<Index> path;
  std::vector<bool> on(net.nodes().size(), false);
  on[a] = true;
  std::vector<std::vector<Index>> out;
  enumerate_paths(net, a, b, path, on, out);
  return out;
}

double cost(const RoadNetwork& net, const std::vector<Index>& route) {
  double c = 0.0;
  for (Index s : route) c += net.segment(s).length_m / net.segment(s).speed_limit_mps;
  return c;
}

// Plain Dijkstra over nodes with free-flow time weights.
double dijkstra(const RoadNetwork& net, Index a, Index b) {
  std::vector<double> d(net.nodes().size(), kInf);
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d[a] = 0.0;
  pq.push({0.0, a});
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (du > d[u]) continue;
    for (const auto& seg : net.segments()) {
      if (net.node_index(seg.from) != u) continue;
      const Index v = net.node_index(seg.to);
      const double nd = du + seg.length_m / seg.speed_limit_mps;
      if (nd < d[v]) {
        d[v] = nd;
        pq.push({nd, v});
      }
    }
  }
  return d[b];
}

// Floyd-Warshall over metres, directed.
std::vector<std::vector<double>> all_pairs_metres(const RoadNetwork& net) {
  const std::size_t n = net.nodes().size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (const auto& s : net.segments()) {
    auto& e = d[net.node_index(s.from)][net.node_index(s.to)];
    e = std::min(e, s.length_m);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

}  // namespace

TEST(RoadNet, MinimalNetwork) {
  const auto net = parse_network(chain_text(2));
  EXPECT_EQ(net.segments().size(), 1u);
  EXPECT_EQ(net.nodes().size(), 2u);
  EXPECT_DOUBLE_EQ(net.segment(0).length_m, 100.0);
}

TEST(RoadNet, MissingNodeIsNamed) {
  std::string text = chain_text(2);
  text += "AX,A,X,100,1,10,main\n";
  try {
    parse_network(text);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("X"), std::string::npos);
  }
}

TEST(RoadNet, MalformedInputs) {
  EXPECT_THROW(parse_network("[nodes]\nid,x,y,signalized,sensor_site\nA,0,0,0,0\n"), ParseError);
  EXPECT_THROW(parse_network("[bogus]\n"), ParseError);
  EXPECT_THROW(parse_network(chain_text(2) + "AB,A,B,100,1,10,main\n"), ValidationError);
  std::string bad_len = chain_text(2);
  bad_len.replace(bad_len.find("100.000000,1"), 10, "500.000000");
  EXPECT_THROW(parse_network(bad_len), ValidationError);
}

TEST(RoadNet, GridFixtureShape) {
  const auto& net = grid();
  EXPECT_EQ(net.nodes().size(), 16u);
  EXPECT_EQ(net.segments().size(), 48u);
  EXPECT_EQ(net.road_labels().size(), 8u);
}

TEST(RoadNet, GridReachabilityMatchesBfs) {
  const auto& net = grid();
  const std::size_t n = net.nodes().size();
  for (Index a = 0; a < n; ++a) {
    // independent breadth-first search over the segment list
    std::vector<bool> seen(n, false);
    std::queue<Index> q;
    q.push(a);
    seen[a] = true;
    while (!q.empty()) {
      const Index u = q.front();
      q.pop();
      for (const auto& s : net.segments()) {
        const Index f = net.node_index(s.from), t = net.node_index(s.to);
        if (f == u && !seen[t]) seen[t] = true, q.push(t);
      }
    }
    EXPECT_EQ(net.reachable_from(a), seen);
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
  }
}

TEST(RoadNet, SerializeRoundTrip) {
  const auto& net = grid();
  const auto again = parse_network(serialize_network(net));
  EXPECT_EQ(again.spec(), net.spec());
  EXPECT_EQ(serialize_network(again), serialize_network(net));
  const auto hw = load_network(testsupport::data_path("highway.net"));
  EXPECT_EQ(parse_network(serialize_network(hw)).spec(), hw.spec());
}

TEST(RoadNet, SignalPhases) {
  const auto& net = grid();
  const Index ew = net.segment_index("n11_n12");  // enters n12 from the west
  const Index ns = net.segment_index("n02_n12");  // enters n12 from the north
  for (std::int64_t t = 0; t < 120; ++t) {
    EXPECT_NE(net.permits(ew, t), net.permits(ns, t)) << t;
    EXPECT_EQ(net.permits(ew, t), (t % 60) < 30) << t;
  }
}

TEST(ContiguousPairs, ChainExamples) {
  const auto net = parse_network(chain_text(3));
  using P = std::pair<std::string, std::string>;
  EXPECT_EQ(contiguous_sensor_pairs(net, {{"A", "C"}, 50.0}), (std::vector<P>{{"A", "C"}}));
  EXPECT_EQ(contiguous_sensor_pairs(net, {{"A", "B", "C"}, 50.0}), (std::vector<P>{{"A", "B"}, {"B", "C"}}));
}

TEST(ContiguousPairs, PlacementValidation) {
  const auto net = parse_network(chain_text(3, 100.0, 10.0, false));
  EXPECT_THROW(validate_placement(net, {{"A"}, 50.0}), ValidationError);
  EXPECT_THROW(validate_placement(grid(), {{}, 50.0}), ValidationError);
  EXPECT_THROW(validate_placement(grid(), {{"nope"}, 50.0}), ValidationError);
}

TEST(ContiguousPairs, GridMatchesPathEnumeration) {
  const auto& net = grid();
  const std::vector<std::vector<std::string>> placements = {
      {"n00", "n03", "n30", "n33"}, {"n11", "n12", "n21", "n22"}, {"n00", "n12", "n21", "n33", "n01"}};
  for (const auto& ids : placements) {
    SensorPlacement pl{ids, 50.0};
    std::set<std::string> sensors(ids.begin(), ids.end());
    std::vector<std::pair<std::string, std::string>> expected;
    for (const auto& a : ids) {
      for (const auto& b : ids) {
        if (a == b) continue;
        bool ok = false;
        for (const auto& route : all_simple_routes(net, net.node_index(a), net.node_index(b))) {
          bool clean = true;
          for (std::size_t k = 0; k + 1 < route.size(); ++k) {
            clean = clean && !sensors.count(net.node(net.to_node(route[k])).id);
          }
          ok = ok || clean;
        }
        if (ok) expected.emplace_back(a, b);
      }
    }
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(contiguous_sensor_pairs(net, pl), expected);
  }
}

TEST(ShortestRoute, SingleSegment) {
  const auto net = parse_network(chain_text(2));
  EXPECT_EQ(route_ids(net, shortest_route(net, "A", "B")), (std::vector<std::string>{"AB"}));
}

TEST(ShortestRoute, TieBreakBySegmentIds) {
  const std::string text =
      "[nodes]\nid,x,y,signalized,sensor_site\nS,0,0,0,0\nP,100,50,0,0\nQ,100,-50,0,0\nT,200,0,0,0\n"
      "[segments]\nid,from,to,length_m,lanes,speed_limit_mps,road_label\n"
      "e2a,S,Q,112,1,10,r\ne2b,Q,T,112,1,10,r\ne1a,S,P,112,1,10,r\ne1b,P,T,112,1,10,r\n";
  const auto net = parse_network(text);
  EXPECT_EQ(route_ids(net, shortest_route(net, "S", "T")), (std::vector<std::string>{"e1a", "e1b"}));
}

TEST(ShortestRoute, UnreachableThrows) {
  const auto net = parse_network(chain_text(3));
  EXPECT_THROW(shortest_route(net, "C", "A"), PreconditionError);
}

TEST(ShortestRoute, GridMatchesDijkstraAndEnumeration) {
  const auto& net = grid();
  Rng rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const Index a = rng.uniform_index(16), b = rng.uniform_index(16);
    if (a == b) continue;
    const auto route = shortest_route(net, a, b);
    ASSERT_FALSE(route.empty());
    EXPECT_EQ(net.from_node(route.front()), a);
    EXPECT_EQ(net.to_node(route.back()), b);
    for (std::size_t k = 0; k + 1 < route.size(); ++k) EXPECT_EQ(net.to_node(route[k]), net.from_node(route[k + 1]));
    const double c = route_free_flow_time(net, route);
    EXPECT_NEAR(c, dijkstra(net, a, b), 1e-9);
    if (trial < 8) {
      for (const auto& alt : all_simple_routes(net, a, b)) EXPECT_LE(c, cost(net, alt) + 1e-9);
    }
  }
}

TEST(Proximity, MatchesFloydWarshallScan) {
  const auto& net = grid();
  const auto d = all_pairs_metres(net);
  for (const std::string id : {"n11", "n00", "n23"}) {
    const Index node = net.node_index(id);
    for (double radius : {50.0, 150.0, 250.0}) {
      ProximityMap pm(net, Anchor::at_node(node), radius);
      double covered = 0.0;
      for (Index s = 0; s < net.segments().size(); ++s) {
        const auto& seg = net.segment(s);
        const Index f = net.from_node(s), t = net.to_node(s);
        // lane metres within radius, integrated on a fine grid
        int inside = 0;
        const int steps = 2000;
        for (int k = 0; k < steps; ++k) {
          const double off = (k + 0.5) * seg.length_m / steps;
          const double oracle = std::min(seg.length_m - off + d[t][node], d[node][f] + off);
          if (oracle <= radius) ++inside;
        }
        covered += seg.length_m * inside / steps * seg.lanes;
        for (double off : {0.0, 12.5, 49.0, 50.0, 51.0, 100.0, 150.0, 199.0, 200.0}) {
          const double oracle = std::min(seg.length_m - off + d[t][node], d[node][f] + off);
          const double got = pm.distance(s, off);
          if (oracle <= radius) {
            EXPECT_NEAR(got, oracle, 1e-9) << seg.id << " " << off;
          } else {
            EXPECT_TRUE(std::isinf(got)) << seg.id << " " << off;
          }
        }
      }
      EXPECT_NEAR(pm.covered_lane_length(), covered, 0.5) << id << " r=" << radius;
    }
  }
}

TEST(Proximity, PointAnchor) {
  const auto net = parse_network(chain_text(3));
  ProximityMap pm(net, Anchor::at_point(net.segment_index("AB"), 80.0), 50.0);
  EXPECT_DOUBLE_EQ(pm.distance(net.segment_index("AB"), 60.0), 20.0);
  EXPECT_DOUBLE_EQ(pm.distance(net.segment_index("BC"), 10.0), 30.0);
  EXPECT_TRUE(std::isinf(pm.distance(net.segment_index("BC"), 31.0)));
  EXPECT_TRUE(std::isinf(pm.distance(net.segment_index("AB"), 29.0)));
  EXPECT_NEAR(pm.covered_lane_length(), 100.0, 1e-9);
}
