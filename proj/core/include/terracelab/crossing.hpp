#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "terracelab/evolve.hpp"
#include "terracelab/stationary.hpp"

namespace terracelab {

/// First-hitting times of one level at equally spaced period sites on one
/// side of the datum interface. Site k of the series sits at
/// direction * (n_min + k) * site_spacing.
struct CrossingSeries {
  double alpha = 0.0;
  double site_spacing = 0.0; // L
  int direction = +1;        // +1: sites at +nL, -1: sites at -nL
  int n_min = 1;
  std::vector<double> taus;  // contiguous reached prefix, strictly increasing
  std::string note;

  int site(std::size_t k) const { return n_min + static_cast<int>(k); }
  double position(std::size_t k) const { return direction * site(k) * site_spacing; }
};

enum class GapBehavior { Converging, Diverging, Unresolved };

struct GapStats {
  GapBehavior behavior = GapBehavior::Unresolved;
  int gap_count = 0;
  double last_quartile_mean = 0.0;
  double relative_spread = 0.0; // (max-min)/mean over the last quartile
  bool monotone_growth = false; // nondecreasing with net growth over the last quartile
};

/// Gap dichotomy: consecutive hitting-time gaps either settle (relative
/// spread of the last quartile at most spread_tol) or grow monotonically.
GapStats classify_gaps(const CrossingSeries& series, double spread_tol = 0.10);

struct SpeedEstimate {
  double c = 0.0;              // signed; negative for leftward series
  double ci = 0.0;             // half-width of the confidence interval
  double fit_se = 0.0;         // standard error of the regression slope
  double cross_estimate = 0.0; // signed L / mean(last-quartile gaps)
  int sites_used = 0;          // points in the regression window
  double alpha = 0.0;          // probe level the estimate came from
};

inline constexpr int kMinSeriesSites = 8;

/// Least-squares speed over the last half of the series, cross-checked by the
/// mean-gap estimator. extra_ci widens the interval by an externally measured
/// discretization allowance (e.g. a coarse companion run). Throws
/// std::logic_error if the series is short or its gaps are not classified
/// converging, and std::runtime_error("unresolved speed...") when the two
/// estimators disagree beyond three interval widths.
SpeedEstimate estimate_speed(const CrossingSeries& series, double extra_ci = 0.0,
                             double spread_tol = 0.10);

/// Node bookkeeping for period-site crossing monitors: one node per period on
/// each side of x = 0, skipping the margin closest to the domain ends.
struct MonitorLayout {
  std::vector<int> site_nodes; // for CrossingRecorder, rightward block first
  int right_count = 0;         // site_nodes[0 .. right_count) -> x = +nL, n = 1..
  int left_count = 0;          // site_nodes[right_count ..]   -> x = -nL, n = 1..
  int n_min = 1;

  std::size_t index_of(int direction, int n) const;
};

MonitorLayout make_monitor_layout(const Grid& grid, int margin_periods);

/// Assemble the contiguous reached prefix for one level and one direction.
/// Truncates at the first unreached site and at any monotonicity break
/// (diffusive pre-front hits), noting the truncation.
CrossingSeries series_from_recorder(const CrossingRecorder& recorder,
                                    const MonitorLayout& layout,
                                    std::size_t level_index, int direction,
                                    double site_spacing);

/// An L-periodic stationary state resampled onto the nodes of a full grid.
std::vector<double> rung_on_grid(const StationarySolution& rung, const Grid& grid);

struct PlatformWindow {
  int rung = -1; // ladder index
  double x_lo = 0.0, x_hi = 0.0;
  double width_final = 0.0, width_earlier = 0.0;
  bool boundary_anchored = false;
};

struct PlatformReport {
  std::vector<int> platform_rungs; // ladder indices, decreasing value order
  std::vector<PlatformWindow> windows;
  std::vector<std::string> notes;
};

struct PlatformOptions {
  double plateau_tol = 1e-2;
  int min_periods = 10;
  /// The growth filter compares the final snapshot against the stored
  /// snapshot closest to this fraction of the run.
  double earlier_fraction = 0.95;
};

/// A plateau wide enough to count as a platform but matching no ladder rung:
/// the ladder is incomplete and the caller should re-enumerate it finer.
class UnidentifiedPlatformError : public std::runtime_error {
public:
  UnidentifiedPlatformError(double x_lo, double x_hi, double level);
  double x_lo, x_hi, level;
};

/// Scan late-time snapshots for windows at least min_periods wide where the
/// solution matches a ladder rung to plateau_tol. Interior windows must have
/// grown since the earlier snapshot (transient plateaus filtered); windows
/// anchored at a clamped boundary are exempt, since the advancing front
/// legitimately eats the window ahead of it.
PlatformReport detect_platforms(const Run& run, const EquilibriaLadder& ladder,
                                const PlatformOptions& opts = {});

/// Interpolated position of the (unique, by spatial ordering) downward
/// crossing of the level in each stored snapshot. Used for inter-front gap
/// tracking.
std::vector<std::pair<double, double>> level_position_series(const Run& run,
                                                             double level);

} // namespace terracelab
