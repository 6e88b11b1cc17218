#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "incidentlab/validate.hpp"
#include "test_support.hpp"

using namespace incidentlab;

namespace {

// sup |F_a - F_b| evaluated at every sample point, O(nm).
double brute_ks(const std::vector<double>& a, const std::vector<double>& b) {
  double best = 0.0;
  auto ecdf = [](const std::vector<double>& s, double x) {
    double c = 0;
    for (double v : s) c += v <= x;
    return c / static_cast<double>(s.size());
  };
  for (const auto* s : {&a, &b}) {
    for (double x : *s) best = std::max(best, std::abs(ecdf(a, x) - ecdf(b, x)));
  }
  return best;
}

std::vector<double> normals(Rng& r, int n, double mu = 0.0) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = r.normal(mu, 1.0);
  return v;
}

}  // namespace

TEST(Ks, IdenticalSamples) {
  Rng r(1);
  for (int n : {5, 12, 100}) {
    const auto a = normals(r, n);
    const auto res = ks_two_sample(a, a);
    EXPECT_EQ(res.statistic, 0.0);
    EXPECT_EQ(res.p_value, 1.0);
    EXPECT_TRUE(res.pass);
    EXPECT_EQ(res.permutation, n < 30);
  }
}

TEST(Ks, DisjointSupports) {
  Rng r(2);
  std::vector<double> a(100), b(100);
  for (std::size_t i = 0; i < 100; ++i) {
    a[i] = r.uniform();
    b[i] = a[i] + 10.0;
  }
  const auto res = ks_two_sample(a, b);
  EXPECT_EQ(res.statistic, 1.0);
  EXPECT_LT(res.p_value, 1e-6);
  EXPECT_FALSE(res.pass);
}

TEST(Ks, StatisticMatchesBruteForce) {
  Rng r(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5 + static_cast<int>(r.uniform_index(200));
    const int m = 5 + static_cast<int>(r.uniform_index(200));
    auto a = normals(r, n), b = normals(r, m, 0.3);
    // integer-valued samples exercise ties
    if (trial % 3 == 0) {
      for (auto& x : a) x = std::round(2 * x);
      for (auto& x : b) x = std::round(2 * x);
    }
    EXPECT_EQ(ks_statistic(a, b), brute_ks(a, b)) << trial;
    EXPECT_EQ(ks_statistic(a, b), ks_statistic(b, a));
    // strictly increasing transform of both samples
    std::vector<double> ea, eb;
    for (double x : a) ea.push_back(std::exp(x / 3.0) * 7.0 + 1.0);
    for (double x : b) eb.push_back(std::exp(x / 3.0) * 7.0 + 1.0);
    EXPECT_EQ(ks_statistic(ea, eb), ks_statistic(a, b));
  }
}

TEST(Ks, AsymptoticPValueMatchesPermutationOracle) {
  Rng r(4);
  for (int trial = 0; trial < 3; ++trial) {
    const auto a = normals(r, 200), b = normals(r, 200, trial * 0.1);
    const auto res = ks_two_sample(a, b);
    ASSERT_FALSE(res.permutation);
    EXPECT_EQ(res.statistic, brute_ks(a, b));
    // independent permutation test
    std::vector<double> pool = a;
    pool.insert(pool.end(), b.begin(), b.end());
    Rng pr(99 + trial);
    int extreme = 0;
    const int perms = 10000;
    for (int p = 0; p < perms; ++p) {
      for (std::size_t i = pool.size() - 1; i > 0; --i) std::swap(pool[i], pool[pr.uniform_index(i + 1)]);
      std::vector<double> pa(pool.begin(), pool.begin() + 200), pb(pool.begin() + 200, pool.end());
      extreme += ks_statistic(pa, pb) >= res.statistic - 1e-12;
    }
    const double oracle = (1.0 + extreme) / (1.0 + perms);
    EXPECT_NEAR(res.p_value, oracle, 0.02) << "D=" << res.statistic;
  }
}

TEST(Ks, SmallSamplesUsePermutations) {
  Rng r(5);
  const auto a = normals(r, 8), b = normals(r, 40, 3.0);
  const auto res = ks_two_sample(a, b, 7, 2000);
  EXPECT_TRUE(res.permutation);
  EXPECT_LT(res.p_value, 0.01);
  EXPECT_GE(res.p_value, 1.0 / 2001.0);
  EXPECT_EQ(ks_two_sample(a, b, 7, 2000).p_value, res.p_value);
  EXPECT_THROW(ks_two_sample({1, 2, 3, 4}, b), PreconditionError);
  EXPECT_THROW(ks_two_sample({1, 2, 3, 4, NAN}, b), PreconditionError);
}

TEST(Ks, SameDistributionPassRate) {
  Rng r(6);
  int passes = 0;
  for (int trial = 0; trial < 100; ++trial) passes += ks_two_sample(normals(r, 96), normals(r, 96)).pass;
  EXPECT_GE(passes, 90);
}

TEST(KolmogorovQ, KnownValues) {
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
  EXPECT_NEAR(kolmogorov_q(1.36), 0.0494, 5e-4);
  EXPECT_NEAR(kolmogorov_q(1.0), 0.2700, 5e-4);
  EXPECT_LT(kolmogorov_q(5.0), 1e-20);
}

TEST(Aggregate, OnePerSecond) {
  std::vector<std::int64_t> t(86400);
  for (std::int64_t i = 0; i < 86400; ++i) t[static_cast<std::size_t>(i)] = i;
  const auto s = aggregate_bins(t, 86400, 900);
  ASSERT_EQ(s.counts.size(), 96u);
  for (double c : s.counts) EXPECT_EQ(c, 900.0);
  const auto empty = aggregate_bins({}, 3600, 900);
  EXPECT_EQ(empty.counts, std::vector<double>(4, 0.0));
}

TEST(Aggregate, MatchesDirectBucketing) {
  FlowModelParams p;
  p.a1 = 100, p.b1 = 2 * M_PI / 86400, p.b2 = 1, p.d = 200;
  const auto sched = spawn_schedule(p, testsupport::grid(), 86400, 8);
  std::vector<std::int64_t> times;
  for (const auto& e : sched.events) times.push_back(e.time_s);
  const auto s = aggregate_bins(times, 86400, 900);
  std::vector<double> oracle(96, 0.0);
  for (auto t : times) oracle[static_cast<std::size_t>(t / 900)] += 1;
  EXPECT_EQ(s.counts, oracle);
}

TEST(Aggregate, RawFirstSightings) {
  RawDataset ds;
  ds.sensor_ids = {"a", "b"};
  ds.horizon_s = 4;
  for (std::int64_t t = 0; t < 4; ++t) {
    for (const auto& id : ds.sensor_ids) ds.readings.push_back(SensorReading{id, t, {}, 0, 0.0, 0.0});
  }
  ds.readings[0].vehicle_ids = {1};
  ds.readings[3].vehicle_ids = {1, 2};
  ds.readings[6].vehicle_ids = {3};
  const auto s = aggregate_bins(ds, 2);
  EXPECT_EQ(s.counts, (std::vector<double>{2, 1}));
}

TEST(ValidationReport, Format) {
  KsResult r;
  r.statistic = 0.25;
  r.p_value = 0.5;
  const auto text = format_validation_report({{"day_000", r}});
  EXPECT_EQ(text, "day,ks_statistic,p_value,pass\nday_000,0.25,0.5,true\n");
}
