#include "incidentlab/demand.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <map>

#include "incidentlab/keyvalue.hpp"

namespace incidentlab {

namespace {

constexpr std::size_t kMinSeriesLength = 8;
constexpr int kDivergenceLimit = 10;
constexpr int kMaxBacktracks = 30;

void check_series(const MacroCountSeries& s) {
  if (s.counts.size() < kMinSeriesLength) {
    throw PreconditionError("count series needs at least " + std::to_string(kMinSeriesLength) + " bins, got " +
                            std::to_string(s.counts.size()));
  }
  if (!(s.bin_s > 0.0)) throw PreconditionError("bin duration must be positive");
  for (double c : s.counts) {
    if (!std::isfinite(c) || c < 0.0) throw PreconditionError("counts must be finite and non-negative");
  }
}

double wrap_phase(double c) {
  c = std::remainder(c, 2.0 * M_PI);
  return c <= -M_PI ? c + 2.0 * M_PI : c;
}

// Canonical form: a >= 0, b > 0, phase in (-pi, pi].
void canonicalize(double& a, double& b, double& c) {
  if (b < 0.0) {
    b = -b;
    c = M_PI - c;
  }
  if (a < 0.0) {
    a = -a;
    c += M_PI;
  }
  c = wrap_phase(c);
}

double model_value(const FlowModelParams& p, double t) {
  return p.a1 * std::sin(p.b1 * t + p.c1) + p.a2 * std::sin(p.b2 * t + p.c2) + p.d;
}

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;

// Parameters in scaled time tau = t / span so that the frequency columns of
// the Jacobian have the same magnitude as the amplitude columns.
Vec7 to_scaled(const FlowModelParams& p, double span) {
  Vec7 v;
  v << p.a1, p.b1 * span, p.c1, p.a2, p.b2 * span, p.c2, p.d;
  return v;
}

FlowModelParams from_scaled(const Vec7& v, double span, const FlowModelParams& like) {
  FlowModelParams p = like;
  p.a1 = v[0];
  p.b1 = v[1] / span;
  p.c1 = v[2];
  p.a2 = v[3];
  p.b2 = v[4] / span;
  p.c2 = v[5];
  p.d = v[6];
  return p;
}

double scaled_rmse(const Vec7& v, const std::vector<double>& tau, const std::vector<double>& y) {
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double f = v[0] * std::sin(v[1] * tau[i] + v[2]) + v[3] * std::sin(v[4] * tau[i] + v[5]) + v[6];
    ss += (y[i] - f) * (y[i] - f);
  }
  return std::sqrt(ss / static_cast<double>(y.size()));
}

}  // namespace

MacroCountSeries average_counts(const std::vector<MacroCountSeries>& series) {
  if (series.empty()) throw PreconditionError("average_counts: no series");
  MacroCountSeries out = series.front();
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i].counts.size() != out.counts.size()) {
      throw PreconditionError("average_counts: series lengths differ");
    }
    if (series[i].bin_s != out.bin_s) throw PreconditionError("average_counts: bin durations differ");
    for (std::size_t k = 0; k < out.counts.size(); ++k) out.counts[k] += series[i].counts[k];
  }
  for (double& c : out.counts) c /= static_cast<double>(series.size());
  return out;
}

FlowModelParams fft_init_params(const MacroCountSeries& series) {
  check_series(series);
  const int n = static_cast<int>(series.counts.size());
  std::vector<double> in(series.counts);
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  double mean = 0.0;
  for (double c : series.counts) mean += c;
  mean /= n;

  // two largest non-DC bins, lower frequency first on ties
  int best = -1;
  int second = -1;
  for (int k = 1; k <= n / 2; ++k) {
    const double m = std::abs(out[k]);
    if (best < 0 || m > std::abs(out[best])) {
      second = best;
      best = k;
    } else if (second < 0 || m > std::abs(out[second])) {
      second = k;
    }
  }
  double scale = 0.0;
  for (double c : series.counts) scale = std::max(scale, std::abs(c));
  if (best < 0 || std::abs(out[best]) <= 1e-9 * std::max(1.0, scale * n)) {
    throw PreconditionError("fft_init_params: series has no non-DC frequency peak");
  }

  const double span = n * series.bin_s;
  auto amplitude = [&](int k) {
    const double m = std::abs(out[k]);
    return (n % 2 == 0 && k == n / 2) ? m / n : 2.0 * m / n;
  };
  FlowModelParams p;
  p.bin_s = series.bin_s;
  p.a1 = amplitude(best);
  p.b1 = 2.0 * M_PI * best / span;
  p.c1 = wrap_phase(std::arg(out[best]) + M_PI / 2.0);
  if (second > 0) {
    p.a2 = amplitude(second);
    p.b2 = 2.0 * M_PI * second / span;
    p.c2 = wrap_phase(std::arg(out[second]) + M_PI / 2.0);
  }
  p.d = mean;
  p.alpha_sigma = 0.0;
  p.fit_rmse = flow_rmse(p, series);
  return p;
}

double flow_rmse(const FlowModelParams& params, const MacroCountSeries& series) {
  double ss = 0.0;
  for (std::size_t k = 0; k < series.counts.size(); ++k) {
    const double r = series.counts[k] - model_value(params, static_cast<double>(k) * series.bin_s);
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(series.counts.size()));
}

FlowModelParams lm_fit(const MacroCountSeries& series, const FlowModelParams& init, const LmConfig& cfg,
                       LmTrace* trace) {
  check_series(series);
  if (!(cfg.lambda > 0.0)) throw PreconditionError("lm_fit: lambda must be positive");
  if (cfg.max_iters < 1) throw PreconditionError("lm_fit: max_iters must be at least 1");
  for (double v : {init.a1, init.b1, init.c1, init.a2, init.b2, init.c2, init.d}) {
    if (!std::isfinite(v)) throw PreconditionError("lm_fit: initial parameters must be finite");
  }
  if (!(init.b1 > 0.0) || !(init.b2 > 0.0)) throw PreconditionError("lm_fit: frequencies b1, b2 must be positive");

  const std::size_t n = series.counts.size();
  const double span = static_cast<double>(n) * series.bin_s;
  std::vector<double> tau(n);
  for (std::size_t k = 0; k < n; ++k) tau[k] = static_cast<double>(k) / static_cast<double>(n);
  const std::vector<double>& y = series.counts;

  Vec7 theta = to_scaled(init, span);
  double rmse = scaled_rmse(theta, tau, y);
  LmTrace local;
  int growth_streak = 0;

  for (int iter = 0; iter < cfg.max_iters && rmse > 0.0; ++iter) {
    ++local.iterations;
    Mat7 jtj = Mat7::Zero();
    Vec7 jtr = Vec7::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const double p1 = theta[1] * tau[i] + theta[2];
      const double p2 = theta[4] * tau[i] + theta[5];
      Vec7 row;
      row << std::sin(p1), theta[0] * tau[i] * std::cos(p1), theta[0] * std::cos(p1), std::sin(p2),
          theta[3] * tau[i] * std::cos(p2), theta[3] * std::cos(p2), 1.0;
      const double f = theta[0] * std::sin(p1) + theta[3] * std::sin(p2) + theta[6];
      jtj.noalias() += row * row.transpose();
      jtr.noalias() += row * (y[i] - f);
    }
    const Mat7 lhs = jtj + cfg.lambda * Mat7::Identity();
    Eigen::LLT<Mat7> llt(lhs);
    if (llt.info() != Eigen::Success) throw NumericalError("lm_fit: normal equations are singular");
    const Vec7 delta = llt.solve(jtr);
    if (!delta.allFinite()) throw NumericalError("lm_fit: normal equations are singular");

    double step = 1.0;
    double trial_rmse = scaled_rmse(theta + delta, tau, y);
    if (!(trial_rmse < rmse)) {
      ++local.rejected_full_steps;
      if (++growth_streak >= kDivergenceLimit) {
        throw NumericalError("lm_fit: diverged (RMSE grew for " + std::to_string(kDivergenceLimit) +
                             " consecutive iterations)");
      }
      int k = 0;
      for (; k < kMaxBacktracks; ++k) {
        step *= 0.5;
        trial_rmse = scaled_rmse(theta + step * delta, tau, y);
        if (trial_rmse < rmse) break;
      }
      if (k == kMaxBacktracks) {
        local.converged = true;  // no descent left along the damped direction
        break;
      }
    } else {
      growth_streak = 0;
    }
    theta += step * delta;
    const double improvement = (rmse - trial_rmse) / rmse;
    rmse = trial_rmse;
    local.accepted_rmse.push_back(rmse);
    if (improvement < cfg.tol) {
      local.converged = true;
      break;
    }
  }
  if (rmse == 0.0) local.converged = true;

  FlowModelParams out = from_scaled(theta, span, init);
  canonicalize(out.a1, out.b1, out.c1);
  canonicalize(out.a2, out.b2, out.c2);
  out.bin_s = series.bin_s;
  out.fit_rmse = flow_rmse(out, series);

  double mean_r = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean_r += y[k] - model_value(out, static_cast<double>(k) * series.bin_s);
  mean_r /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = y[k] - model_value(out, static_cast<double>(k) * series.bin_s) - mean_r;
    var += r * r;
  }
  out.alpha_sigma = std::sqrt(var / static_cast<double>(n));
  if (trace) *trace = std::move(local);
  return out;
}

double eval_flow(const FlowModelParams& params, double t, Rng* rng) {
  double v = model_value(params, t);
  if (rng) v += rng->normal(0.0, params.alpha_sigma);
  return std::max(0.0, v);
}

SpawnSchedule spawn_schedule(const FlowModelParams& params, const RoadNetwork& network, std::int64_t horizon_s,
                             std::uint64_t seed, const SpawnOptions& options) {
  if (horizon_s <= 0) throw PreconditionError("spawn_schedule: horizon must be positive");
  if (!(params.bin_s > 0.0)) throw PreconditionError("spawn_schedule: bin duration must be positive");
  Rng rng(seed);
  SpawnSchedule schedule;
  schedule.horizon_s = horizon_s;

  const auto& od = network.od_pairs();
  std::vector<double> od_weights;
  for (const auto& p : od) od_weights.push_back(p.weight);

  const auto& entries = network.entry_nodes();
  // exit weights conditioned on the entry: reachable and distinct
  std::vector<std::vector<double>> exit_weights(entries.size());
  if (od.empty()) {
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const auto reach = network.reachable_from(entries[e]);
      auto& w = exit_weights[e];
      for (std::size_t x = 0; x < network.exit_nodes().size(); ++x) {
        const Index node = network.exit_nodes()[x];
        w.push_back(reach[node] && node != entries[e] ? network.exit_weights()[x] : 0.0);
      }
    }
  }

  std::int64_t current_bin = -1;
  double deviation = 0.0;
  for (std::int64_t s = 0; s < horizon_s; ++s) {
    const auto bin = static_cast<std::int64_t>(std::floor(static_cast<double>(s) / params.bin_s));
    if (bin != current_bin) {
      current_bin = bin;
      deviation = options.apply_deviation && params.alpha_sigma > 0.0 ? rng.normal(0.0, params.alpha_sigma) : 0.0;
    }
    const double per_bin = std::max(0.0, model_value(params, static_cast<double>(s)) + deviation);
    const double rate = per_bin * options.demand_scale / params.bin_s;
    const std::int64_t count = rng.poisson(rate);
    for (std::int64_t i = 0; i < count; ++i) {
      SpawnEvent ev;
      ev.time_s = s;
      if (!od.empty()) {
        const auto& pair = od[rng.weighted_index(od_weights)];
        ev.entry = pair.origin;
        ev.exit = pair.destination;
      } else {
        const std::size_t e = rng.weighted_index(network.entry_weights());
        ev.entry = entries[e];
        ev.exit = network.exit_nodes()[rng.weighted_index(exit_weights[e])];
      }
      schedule.events.push_back(ev);
    }
  }
  return schedule;
}

std::vector<std::pair<std::string, MacroCountSeries>> parse_counts(const std::string& text) {
  const auto lines = split(text, '\n');
  std::size_t i = 0;
  while (i < lines.size() && trim(lines[i]).empty()) ++i;
  if (i == lines.size() || trim(lines[i]) != "road_label,start_time_s,bin_s,count") {
    throw ParseError("counts file must start with header 'road_label,start_time_s,bin_s,count'");
  }
  struct Row {
    double start;
    double bin;
    double count;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> rows;
  for (++i; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, ',');
    if (f.size() != 4) throw ParseError("counts line " + std::to_string(i + 1) + ": expected 4 fields");
    const std::string road = trim(f[0]);
    if (!rows.count(road)) order.push_back(road);
    rows[road].push_back(Row{parse_double(f[1], "start_time_s"), parse_double(f[2], "bin_s"),
                             parse_double(f[3], "count")});
  }
  std::vector<std::pair<std::string, MacroCountSeries>> out;
  for (const auto& road : order) {
    auto& r = rows[road];
    std::sort(r.begin(), r.end(), [](const Row& a, const Row& b) { return a.start < b.start; });
    MacroCountSeries s;
    s.bin_s = r.front().bin;
    s.start_time_s = r.front().start;
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (r[k].bin != s.bin_s) throw ParseError("road " + road + ": inconsistent bin widths");
      if (std::abs(r[k].start - (s.start_time_s + static_cast<double>(k) * s.bin_s)) > 1e-6) {
        throw ParseError("road " + road + ": bins are not contiguous");
      }
      if (!std::isfinite(r[k].count) || r[k].count < 0.0) throw ParseError("road " + road + ": negative count");
      s.counts.push_back(r[k].count);
    }
    out.emplace_back(road, std::move(s));
  }
  if (out.empty()) throw ParseError("counts file has no rows");
  return out;
}

std::vector<std::pair<std::string, MacroCountSeries>> load_counts(const std::string& path) {
  std::string text;
  for (const auto& l : read_lines(path)) {
    text += l;
    text += '\n';
  }
  try {
    return parse_counts(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string format_counts(const std::vector<std::pair<std::string, MacroCountSeries>>& series) {
  std::string out = "road_label,start_time_s,bin_s,count\n";
  for (const auto& [road, s] : series) {
    for (std::size_t k = 0; k < s.counts.size(); ++k) {
      out += road + "," + format_double(s.start_time_s + static_cast<double>(k) * s.bin_s) + "," +
             format_double(s.bin_s) + "," + format_double(s.counts[k]) + "\n";
    }
  }
  return out;
}

void save_params(const FlowModelParams& p, const std::string& path) {
  KeyValueDoc doc;
  doc.set("format", std::string("flow-params/1"));
  doc.set("a1", p.a1);
  doc.set("b1", p.b1);
  doc.set("c1", p.c1);
  doc.set("a2", p.a2);
  doc.set("b2", p.b2);
  doc.set("c2", p.c2);
  doc.set("d", p.d);
  doc.set("alpha_sigma", p.alpha_sigma);
  doc.set("fit_rmse", p.fit_rmse);
  doc.set("bin_s", p.bin_s);
  doc.save(path);
}

FlowModelParams load_params(const std::string& path) {
  const auto doc = KeyValueDoc::load(path);
  if (doc.get_or("format", "") != "flow-params/1") throw ParseError(path + ": not a flow-params/1 document");
  FlowModelParams p;
  p.a1 = doc.get_double("a1");
  p.b1 = doc.get_double("b1");
  p.c1 = doc.get_double("c1");
  p.a2 = doc.get_double("a2");
  p.b2 = doc.get_double("b2");
  p.c2 = doc.get_double("c2");
  p.d = doc.get_double("d");
  p.alpha_sigma = doc.get_double("alpha_sigma");
  p.fit_rmse = doc.get_double("fit_rmse");
  p.bin_s = doc.get_double("bin_s");
  return p;
}

std::string format_schedule(const RoadNetwork& network, const SpawnSchedule& schedule) {
  std::string out = "time_s,entry_node,exit_node\n";
  for (const auto& e : schedule.events) {
    out += std::to_string(e.time_s) + "," + network.node(e.entry).id + "," + network.node(e.exit).id + "\n";
  }
  return out;
}

}  // namespace incidentlab
