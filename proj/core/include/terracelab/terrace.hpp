#pragma once

#include <optional>
#include <string>
#include <vector>

#include "terracelab/waves.hpp"

namespace terracelab {

/// One monitored probe level's outcome across both directions.
struct LevelProbe {
  double alpha = 0.0;
  int gap = -1;       // terrace step the level sits in, -1 if unassigned
  int direction = 0;  // +1 / -1 for the qualifying series, 0 if none
  GapBehavior behavior = GapBehavior::Unresolved;
  bool zero_speed = false; // absent or diverging on both sides
  std::optional<SpeedEstimate> speed;
  CrossingSeries series; // the qualifying direction's series
  int right_sites = 0, left_sites = 0;
  std::string note;
};

struct TerraceStep {
  int upper_platform = 0, lower_platform = 0; // indices into platform_rungs order
  std::vector<std::size_t> probes;            // indices into Terrace::probes
  std::size_t primary_probe = 0;              // valid when speed is set
  std::optional<SpeedEstimate> speed;
  bool zero_speed = false;
  bool level_consistent = true; // probe speeds agree within combined intervals
  std::vector<PulsatingWave> waves; // [0] is the primary extraction
  std::optional<ZeroSpeedLabel> zero_probe;
  std::vector<std::string> notes;
};

struct TerraceVerification {
  bool platforms_ordered = false;
  double min_platform_margin = 0.0;
  bool speeds_ordered = false; // c_k <= c_{k+1} within combined intervals
  bool waves_accepted = false;
  bool steepness_ok = false;
  int steepness_pairs = 0;
  std::vector<std::string> notes;
};

struct NumericsInfo {
  double dx = 0.0, dt = 0.0, horizon = 0.0, theta_scheme = 1.0;
  int periods_left = 0, periods_right = 0;
};

struct Terrace {
  double period_L = 0.0;
  NumericsInfo numerics;
  EquilibriaLadder ladder;
  AssumptionReport assumptions;
  std::vector<int> platform_rungs; // ladder indices, decreasing value order
  std::vector<LevelProbe> probes;
  std::vector<TerraceStep> steps;
  bool zero_speed_flag = false; // some step has no numeric speed
  bool extraction_ok = false;
  TerraceVerification verification;
  std::vector<std::string> notes;

  const StationarySolution& platform(int k) const {
    return ladder.rungs[static_cast<std::size_t>(platform_rungs[static_cast<std::size_t>(k)])];
  }
  int step_count() const { return static_cast<int>(steps.size()); }
};

struct ExtractOptions {
  double dx = 0.02;
  double dt = 0.0; // 0: largest stable-and-monotone step for this reaction
  double horizon = 100.0;
  int periods_left = 0, periods_right = 0; // 0: sized from the linear spreading bound
  double datum_x0 = 0.0;
  double datum_exp_lambda = 0.0; // > 0: exponentially decaying datum instead
  double theta_scheme = 1.0;
  int guard_periods = 5;
  int max_snapshots = 200;
  int threads = 1;
  LadderOptions ladder;
  AssumptionOptions assumptions;
  PlatformOptions platforms;
  WaveOptions waves;
  double platform_tol = 1e-6; // pointwise separation of distinct platforms
  double gap_spread_tol = 0.10;
  bool with_pilot = true; // half-resolution companion widens speed intervals
  bool with_waves = true;
  int waves_per_gap = 2;
  std::vector<double> probe_fractions = {0.5, 0.25}; // per rung gap
};

struct TerraceExtraction {
  Terrace terrace;
  Run survey; // the main-resolution run the terrace was read off
  PlatformReport platform_report;
};

/// Full pipeline: equilibria ladder and stability witnesses, Heaviside (or
/// decaying) datum evolution with crossing monitors at every period site,
/// platform detection, per-gap speed estimation with the gap dichotomy, a
/// frame-capture companion run for the wave profiles, and the assembled
/// verification. `top` is one period of the upper state at any resolution
/// (its size sets the ladder resolution).
TerraceExtraction extract_terrace(const PeriodicCoefficient& a, const Nonlinearity& nl,
                                  const std::vector<double>& top,
                                  const ExtractOptions& opts = {});

struct DriftSeries {
  std::vector<double> t;
  std::vector<double> value;
  double tail_slope = 0.0; // least-squares slope over the last half
  double net_change = 0.0; // last - first
};

struct ConvergenceDiagnostics {
  bool zero_speed_limited = false;
  std::vector<DriftSeries> m_of_t;          // per step: crossing-time drift m_k(t)
  std::vector<DriftSeries> front_gaps;      // per adjacent step pair
  std::vector<int> gap_violations;          // decreases beyond slack, per pair
  std::vector<DriftSeries> frame_residuals; // per step with a wave
  std::vector<double> plateau_growth;       // zero-speed fallback, per window
  std::vector<std::string> notes;
};

/// Drift report: m_k(t) = tau-interpolant(c_k t / L) - t must be sublinear,
/// inter-front gaps must keep growing, and the solution must approach the
/// extracted wave in each moving frame.
ConvergenceDiagnostics convergence_diagnostics(const Run& run, const Terrace& terrace,
                                               const PlatformReport* platforms = nullptr,
                                               double gap_slack = 1e-9);

struct MinimalityReport {
  bool platforms_subset = true;
  bool steepness_ok = true;
  std::vector<std::string> violations;
};

/// Detected platforms must embed in every alternate decomposition's rung set,
/// and the stored per-wave steepness certificates must all hold.
MinimalityReport check_minimality(const Terrace& terrace,
                                  const std::vector<EquilibriaLadder>& alternates,
                                  double tol = 1e-6);

/// Periodic stationary values sampled on a wave's window nodes (the window is
/// period-aligned at its anchor, so the phase is determined by the offsets).
std::vector<double> rung_on_window(const StationarySolution& rung,
                                   const PulsatingWave& wave);

/// Wave frames extended by their platform values onto a wider anchor-relative
/// node range [lo_node, hi_node] * dx, for cross-gap comparisons.
SampledFamily extended_wave_family(const PulsatingWave& wave,
                                   const StationarySolution& upper,
                                   const StationarySolution& lower,
                                   std::ptrdiff_t lo_node, std::ptrdiff_t hi_node);

} // namespace terracelab
