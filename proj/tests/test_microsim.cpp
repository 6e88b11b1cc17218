#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "incidentlab/microsim.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace incidentlab;

namespace {

SpawnSchedule single(const RoadNetwork& net, const std::string& from, const std::string& to, std::int64_t horizon) {
  SpawnSchedule s;
  s.horizon_s = horizon;
  s.events.push_back({0, net.node_index(from), net.node_index(to)});
  return s;
}

SimConfig exact() {
  SimConfig c;
  c.driver_imperfection = 0.0;
  return c;
}

FlowModelParams constant_rate(double per_second) {
  FlowModelParams p;
  p.b1 = p.b2 = 1.0;
  p.d = per_second * 900.0;
  return p;
}

}  // namespace

TEST(Microsim, ConfigValidation) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  c.decel = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.driver_imperfection = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Microsim, FirstStepKinematics) {
  const auto net = parse_network(testsupport::chain_text(2, 1000.0, 10.0));
  Simulator sim(net, single(net, "A", "B", 200), {}, exact());
  ASSERT_EQ(sim.state().vehicles.size(), 1u);
  EXPECT_EQ(sim.state().vehicles[0].speed, 0.0);
  EXPECT_EQ(sim.state().vehicles[0].offset, 0.0);
  sim.step();
  EXPECT_DOUBLE_EQ(sim.state().vehicles[0].speed, 2.6);
}

TEST(Microsim, ArrivalMatchesClosedForm) {
  const auto net = parse_network(testsupport::chain_text(2, 1000.0, 10.0));
  Simulator sim(net, single(net, "A", "B", 300), {}, exact());
  std::int64_t arrival = -1;
  while (sim.state().time < 300 && arrival < 0) {
    sim.step();
    if (!sim.state().last_arrivals.empty()) arrival = sim.state().time;
  }
  // accelerate at 2.6 m/s^2 to 10 m/s, then cruise
  const double t_acc = 10.0 / 2.6;
  const double closed = t_acc + (1000.0 - 0.5 * 2.6 * t_acc * t_acc) / 10.0;
  ASSERT_GE(arrival, 0);
  EXPECT_LE(std::abs(static_cast<double>(arrival) - closed), 1.0);
}

TEST(Microsim, FollowerStopsBehindHaltedLeader) {
  const auto net = parse_network(testsupport::chain_text(3, 300.0, 13.9));
  SpawnSchedule s;
  s.horizon_s = 200;
  s.events = {{0, 0, 2}, {5, 0, 2}};
  IncidentSpec halt;
  halt.id = 0;
  halt.duration_s = 150;
  halt.segment_id = "AB";
  halt.offset_m = 40.0;
  halt.radius_m = 0.0;
  halt.trigger_vehicle = 0;
  Simulator sim(net, s, {halt}, exact());
  double min_gap_seen = kInf;
  while (sim.state().time < 190) {
    sim.step();
    const auto& vs = sim.state().vehicles;
    if (vs.size() == 2 && vs[0].segment() == vs[1].segment()) {
      const auto& lead = vs[0].offset > vs[1].offset ? vs[0] : vs[1];
      const auto& foll = vs[0].offset > vs[1].offset ? vs[1] : vs[0];
      const double gap = lead.offset - 5.0 - foll.offset;
      min_gap_seen = std::min(min_gap_seen, gap);
      EXPECT_GE(gap, 0.0);
      if (foll.speed > 0.0) EXPECT_GE(gap, 2.5 - 1e-9);
    }
  }
  EXPECT_LT(min_gap_seen, 10.0);  // the follower did close in on the leader
}

TEST(Microsim, EmptyScheduleGivesZeroReadings) {
  const auto& net = testsupport::grid();
  SpawnSchedule s;
  s.horizon_s = 120;
  const auto r = run(net, s, {}, {{"n11", "n22"}, 50.0}, SimConfig{});
  ASSERT_EQ(r.raw.readings.size(), 240u);
  for (const auto& rd : r.raw.readings) {
    EXPECT_EQ(rd.count, 0);
    EXPECT_EQ(rd.mean_speed, 0.0);
    EXPECT_EQ(rd.occupancy, 0.0);
  }
  EXPECT_EQ(r.spawned, 0);
}

TEST(Microsim, GridAuditsHold) {
  const auto& net = testsupport::grid();
  const auto sched = spawn_schedule(constant_rate(0.2), net, 7200, 11);
  EXPECT_NEAR(static_cast<double>(sched.events.size()), 1440.0, 150.0);
  SimConfig cfg;
  cfg.seed = 5;
  const auto a = oracles::audit_run(net, sched, cfg);
  EXPECT_EQ(a.steps, 7200);
  EXPECT_EQ(a.conservation, 0);
  EXPECT_EQ(a.collisions, 0);
  EXPECT_EQ(a.close_moving, 0);
  EXPECT_EQ(a.speed, 0);
  EXPECT_EQ(a.signal, 0);
  EXPECT_GT(a.crossings, 1000);
}

TEST(Microsim, RunConservesAndIsDeterministic) {
  const auto& net = testsupport::grid();
  const auto sched = spawn_schedule(constant_rate(0.2), net, 3600, 3);
  SimConfig cfg;
  cfg.seed = 8;
  const SensorPlacement pl{{"n11", "n12", "n21", "n22"}, 50.0};
  const auto r1 = run(net, sched, {}, pl, cfg);
  const auto r2 = run(net, sched, {}, pl, cfg);
  EXPECT_EQ(r1.raw, r2.raw);
  EXPECT_EQ(r1.spawned, r1.arrived + r1.active_at_end + r1.pending_at_end);
  EXPECT_EQ(r1.spawned, static_cast<std::int64_t>(sched.events.size()));
  EXPECT_GT(r1.arrived, 0);
  cfg.seed = 9;
  EXPECT_NE(run(net, sched, {}, pl, cfg).raw, r1.raw);
}

TEST(Microsim, EntriesFileRoundTrip) {
  const auto& net = testsupport::grid();
  const auto sched = spawn_schedule(constant_rate(0.1), net, 1800, 3);
  const auto r = run(net, sched, {}, {{"n11"}, 50.0}, SimConfig{});
  const auto dir = testsupport::temp_dir("entries");
  write_text(dir + "/entries.csv", format_entries(net, r.entries));
  const auto times = load_entry_times(dir + "/entries.csv");
  ASSERT_EQ(times.size(), r.entries.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_EQ(times[i], r.entries[i].entry_time);
    EXPECT_GE(r.entries[i].entry_time, sched.events[static_cast<std::size_t>(r.entries[i].vehicle)].time_s);
  }
}

TEST(Microsim, RejectsBadSchedule) {
  const auto net = parse_network(testsupport::chain_text(2));
  SpawnSchedule s;
  s.horizon_s = 10;
  s.events = {{20, 0, 1}};
  EXPECT_THROW(Simulator(net, s, {}, SimConfig{}), ValidationError);
}
