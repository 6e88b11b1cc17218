#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "incidentlab/demand.hpp"
#include "incidentlab/sensors.hpp"

namespace incidentlab {

inline constexpr double kKsSignificance = 0.05;

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::size_t m = 0;
  bool pass = true;
  bool permutation = false;  // p-value from the permutation fallback
};

/// sup_x |F_a(x) - F_b(x)| over the two empirical CDFs.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Kolmogorov survival function Q(lambda) = 2 sum_k (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// Two-sample KS test. The p-value is asymptotic with effective size
/// nm/(n+m); when min(n, m) < 30 it comes from `permutations` seeded label
/// shuffles instead. Requires n, m >= 5.
KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b, std::uint64_t seed = 0,
                       int permutations = 10000);

/// Per-bin counts of entry events over [0, horizon).
MacroCountSeries aggregate_bins(const std::vector<std::int64_t>& entry_times, std::int64_t horizon_s,
                                std::int64_t bin_s);
/// Per-bin counts of unique vehicles by the second they are first seen by any sensor.
MacroCountSeries aggregate_bins(const RawDataset& raw, std::int64_t bin_s);

struct ValidationRow {
  std::string day;
  KsResult ks;
};

/// `day,ks_statistic,p_value,pass`
std::string format_validation_report(const std::vector<ValidationRow>& rows);

}  // namespace incidentlab
