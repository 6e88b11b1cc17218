#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "incidentlab/common.hpp"
#include "incidentlab/roadnet.hpp"

namespace incidentlab {

/// Aggregated vehicle counts at a fixed bin width (900 s for 15-minute data).
struct MacroCountSeries {
  double bin_s = 900.0;
  double start_time_s = 0.0;
  std::vector<double> counts;
};

/// Two-sinusoid flow model
///   f(t) = a1 sin(b1 t + c1) + a2 sin(b2 t + c2) + d + alpha,
/// with t in seconds since the start of the fitted series and f in vehicles
/// per bin. alpha is a zero-mean Gaussian deviation with std-dev alpha_sigma.
struct FlowModelParams {
  double a1 = 0.0, b1 = 0.0, c1 = 0.0;
  double a2 = 0.0, b2 = 0.0, c2 = 0.0;
  double d = 0.0;
  double alpha_sigma = 0.0;
  double fit_rmse = 0.0;
  double bin_s = 900.0;
};

struct LmConfig {
  double lambda = 0.01;
  int max_iters = 200;
  double tol = 1e-8;
};

/// Per-iteration diagnostics of an lm_fit run.
struct LmTrace {
  std::vector<double> accepted_rmse;  // RMSE after each accepted iteration
  int iterations = 0;
  int rejected_full_steps = 0;
  bool converged = false;
};

struct SpawnEvent {
  std::int64_t time_s = 0;
  Index entry = kNoIndex;
  Index exit = kNoIndex;

  bool operator==(const SpawnEvent&) const = default;
};

struct SpawnSchedule {
  std::vector<SpawnEvent> events;
  std::int64_t horizon_s = 0;

  bool operator==(const SpawnSchedule&) const = default;
};

struct SpawnOptions {
  /// Multiplier applied to the model rate (desk-scale demand).
  double demand_scale = 1.0;
  /// Draw one alpha deviation per bin from Normal(0, alpha_sigma).
  bool apply_deviation = true;
};

MacroCountSeries average_counts(const std::vector<MacroCountSeries>& series);

FlowModelParams fft_init_params(const MacroCountSeries& series);

FlowModelParams lm_fit(const MacroCountSeries& series, const FlowModelParams& init, const LmConfig& cfg = {},
                       LmTrace* trace = nullptr);

/// Model value at t, plus a Normal(0, alpha_sigma) deviation when rng is
/// given; clamped at zero from below.
double eval_flow(const FlowModelParams& params, double t, Rng* rng = nullptr);

/// Root-mean-square residual of the deterministic model against a series.
double flow_rmse(const FlowModelParams& params, const MacroCountSeries& series);

/// Inhomogeneous Poisson arrivals at 1 s resolution with rate
/// eval_flow(t) / bin_s vehicles per second. Entry/exit assignment follows
/// the network's OD rows when present, otherwise entry weights then exit
/// weights among reachable exits.
SpawnSchedule spawn_schedule(const FlowModelParams& params, const RoadNetwork& network, std::int64_t horizon_s,
                             std::uint64_t seed, const SpawnOptions& options = {});

/// Reads `road_label,start_time_s,bin_s,count` rows into one series per
/// road, in order of first appearance.
std::vector<std::pair<std::string, MacroCountSeries>> load_counts(const std::string& path);
std::vector<std::pair<std::string, MacroCountSeries>> parse_counts(const std::string& text);
std::string format_counts(const std::vector<std::pair<std::string, MacroCountSeries>>& series);

void save_params(const FlowModelParams& params, const std::string& path);
FlowModelParams load_params(const std::string& path);

std::string format_schedule(const RoadNetwork& network, const SpawnSchedule& schedule);

}  // namespace incidentlab
