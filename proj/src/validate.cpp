#include "incidentlab/validate.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace incidentlab {

namespace {

constexpr std::size_t kMinSample = 5;
constexpr std::size_t kAsymptoticMin = 30;

// D over sorted inputs.
double sorted_statistic(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

}  // namespace

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw PreconditionError("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return sorted_statistic(a, b);
}

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;  // series converges slowly there; Q is 1 to double precision
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b, std::uint64_t seed,
                       int permutations) {
  if (a.size() < kMinSample || b.size() < kMinSample) {
    throw PreconditionError("ks_two_sample: both samples need at least 5 values");
  }
  for (double v : a) {
    if (!std::isfinite(v)) throw PreconditionError("ks_two_sample: non-finite value");
  }
  for (double v : b) {
    if (!std::isfinite(v)) throw PreconditionError("ks_two_sample: non-finite value");
  }
  KsResult r;
  r.n = a.size();
  r.m = b.size();
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  r.statistic = sorted_statistic(sa, sb);

  if (std::min(r.n, r.m) < kAsymptoticMin) {
    if (permutations < 1) throw PreconditionError("ks_two_sample: permutations must be positive");
    r.permutation = true;
    std::vector<double> pool = a;
    pool.insert(pool.end(), b.begin(), b.end());
    Rng rng(seed);
    int extreme = 0;
    std::vector<double> pa(r.n), pb(r.m);
    for (int p = 0; p < permutations; ++p) {
      for (std::size_t i = pool.size() - 1; i > 0; --i) std::swap(pool[i], pool[rng.uniform_index(i + 1)]);
      std::copy(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(r.n), pa.begin());
      std::copy(pool.begin() + static_cast<std::ptrdiff_t>(r.n), pool.end(), pb.begin());
      std::sort(pa.begin(), pa.end());
      std::sort(pb.begin(), pb.end());
      if (sorted_statistic(pa, pb) >= r.statistic - 1e-12) ++extreme;
    }
    r.p_value = (1.0 + extreme) / (1.0 + permutations);
  } else {
    const double ne = static_cast<double>(r.n) * static_cast<double>(r.m) / static_cast<double>(r.n + r.m);
    r.p_value = kolmogorov_q(std::sqrt(ne) * r.statistic);
  }
  r.pass = r.p_value >= kKsSignificance;
  return r;
}

MacroCountSeries aggregate_bins(const std::vector<std::int64_t>& entry_times, std::int64_t horizon_s,
                                std::int64_t bin_s) {
  if (bin_s <= 0 || horizon_s <= 0 || horizon_s % bin_s != 0) {
    throw PreconditionError("aggregate_bins: bin (" + std::to_string(bin_s) + " s) must divide the horizon (" +
                            std::to_string(horizon_s) + " s)");
  }
  MacroCountSeries s;
  s.bin_s = static_cast<double>(bin_s);
  s.start_time_s = 0.0;
  s.counts.assign(static_cast<std::size_t>(horizon_s / bin_s), 0.0);
  for (auto t : entry_times) {
    if (t < 0 || t >= horizon_s) throw PreconditionError("aggregate_bins: event time outside [0, horizon)");
    s.counts[static_cast<std::size_t>(t / bin_s)] += 1.0;
  }
  return s;
}

MacroCountSeries aggregate_bins(const RawDataset& raw, std::int64_t bin_s) {
  std::unordered_set<std::int64_t> seen;
  std::vector<std::int64_t> first;
  for (const auto& r : raw.readings) {
    for (auto id : r.vehicle_ids) {
      if (seen.insert(id).second) first.push_back(r.time_s);
    }
  }
  return aggregate_bins(first, raw.horizon_s, bin_s);
}

std::string format_validation_report(const std::vector<ValidationRow>& rows) {
  std::string out = "day,ks_statistic,p_value,pass\n";
  for (const auto& r : rows) {
    out += r.day + "," + format_double(r.ks.statistic) + "," + format_double(r.ks.p_value) + "," +
           (r.ks.pass ? "true" : "false") + "\n";
  }
  return out;
}

}  // namespace incidentlab
