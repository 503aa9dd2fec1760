#include "terracelab/crossing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace terracelab {

GapStats classify_gaps(const CrossingSeries& series, double spread_tol) {
  GapStats stats;
  if (series.taus.size() < 2) return stats;
  std::vector<double> gaps(series.taus.size() - 1);
  for (std::size_t i = 0; i + 1 < series.taus.size(); ++i)
    gaps[i] = series.taus[i + 1] - series.taus[i];
  stats.gap_count = static_cast<int>(gaps.size());

  const std::size_t q = std::max<std::size_t>(2, gaps.size() / 4);
  if (gaps.size() < q) return stats;
  const auto tail = gaps.end() - static_cast<std::ptrdiff_t>(q);
  const double mean = std::accumulate(tail, gaps.end(), 0.0) / static_cast<double>(q);
  const double lo = *std::min_element(tail, gaps.end());
  const double hi = *std::max_element(tail, gaps.end());
  stats.last_quartile_mean = mean;
  stats.relative_spread = mean > 0.0 ? (hi - lo) / mean : std::numeric_limits<double>::infinity();

  bool nondecreasing = true;
  for (auto it = tail; it + 1 != gaps.end(); ++it)
    if (*(it + 1) < *it) nondecreasing = false;
  stats.monotone_growth = nondecreasing && gaps.back() > *tail;

  if (mean > 0.0 && stats.relative_spread <= spread_tol)
    stats.behavior = GapBehavior::Converging;
  else if (stats.monotone_growth)
    stats.behavior = GapBehavior::Diverging;
  else
    stats.behavior = GapBehavior::Unresolved;
  return stats;
}

namespace {

struct SlopeFit {
  double slope = 0.0;
  double se = 0.0;
  int points = 0;
};

SlopeFit fit_slope(const std::vector<double>& t, const std::vector<double>& y) {
  SlopeFit fit;
  const std::size_t n = t.size();
  fit.points = static_cast<int>(n);
  const double tm = std::accumulate(t.begin(), t.end(), 0.0) / n;
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    stt += (t[i] - tm) * (t[i] - tm);
    sty += (t[i] - tm) * (y[i] - ym);
  }
  if (!(stt > 0.0)) throw std::logic_error("speed fit: degenerate abscissae");
  fit.slope = sty / stt;
  if (n > 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - ym - fit.slope * (t[i] - tm);
      ss += r * r;
    }
    fit.se = std::sqrt(ss / static_cast<double>(n - 2) / stt);
  }
  return fit;
}

} // namespace

SpeedEstimate estimate_speed(const CrossingSeries& series, double extra_ci,
                             double spread_tol) {
  if (series.taus.size() < static_cast<std::size_t>(kMinSeriesSites))
    throw std::logic_error("estimate_speed: series too short");
  const GapStats stats = classify_gaps(series, spread_tol);
  if (stats.behavior != GapBehavior::Converging)
    throw std::logic_error("estimate_speed: gaps not classified converging");

  const std::size_t start = series.taus.size() / 2;
  std::vector<double> t(series.taus.begin() + static_cast<std::ptrdiff_t>(start),
                        series.taus.end());
  std::vector<double> pos(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) pos[k] = series.position(start + k);

  const SlopeFit fit = fit_slope(t, pos);
  SpeedEstimate est;
  est.alpha = series.alpha;
  est.c = fit.slope;
  est.fit_se = fit.se;
  est.sites_used = fit.points;
  est.cross_estimate = series.direction * series.site_spacing / stats.last_quartile_mean;
  est.ci = 2.0 * fit.se + extra_ci;

  const double scale = std::max({est.ci, 1e-9 * std::max(1.0, std::abs(est.c)), 1e-12});
  const double disagree = std::abs(est.c - est.cross_estimate);
  if (disagree > 3.0 * scale) {
    std::ostringstream msg;
    msg << "unresolved speed at level " << series.alpha << ": slope " << est.c
        << " vs mean-gap " << est.cross_estimate << " beyond 3x interval " << scale;
    throw std::runtime_error(msg.str());
  }
  est.ci = std::max(est.ci, disagree); // honest widening inside the allowed band
  return est;
}

std::size_t MonitorLayout::index_of(int direction, int n) const {
  const int k = n - n_min;
  if (k < 0) throw std::out_of_range("monitor layout: site below n_min");
  if (direction > 0) {
    if (k >= right_count) throw std::out_of_range("monitor layout: right site out of range");
    return static_cast<std::size_t>(k);
  }
  if (k >= left_count) throw std::out_of_range("monitor layout: left site out of range");
  return static_cast<std::size_t>(right_count + k);
}

MonitorLayout make_monitor_layout(const Grid& grid, int margin_periods) {
  MonitorLayout layout;
  const int cells = grid.cells_per_period;
  layout.right_count = std::max(0, grid.periods_right - margin_periods);
  layout.left_count = std::max(0, grid.periods_left - margin_periods);
  for (int n = 1; n <= layout.right_count; ++n)
    layout.site_nodes.push_back((grid.periods_left + n) * cells);
  for (int n = 1; n <= layout.left_count; ++n)
    layout.site_nodes.push_back((grid.periods_left - n) * cells);
  return layout;
}

CrossingSeries series_from_recorder(const CrossingRecorder& recorder,
                                    const MonitorLayout& layout,
                                    std::size_t level_index, int direction,
                                    double site_spacing) {
  CrossingSeries series;
  series.alpha = recorder.levels().at(level_index);
  series.site_spacing = site_spacing;
  series.direction = direction;
  const int count = direction > 0 ? layout.right_count : layout.left_count;

  int n = layout.n_min;
  // Skip sites that never reach the level (e.g. sites starting on the far
  // side of it under a decaying datum).
  for (; n < layout.n_min + count; ++n) {
    if (recorder.tau(level_index, layout.index_of(direction, n))) break;
  }
  if (n > layout.n_min) series.note = "leading unreached sites skipped";
  series.n_min = n;
  for (; n < layout.n_min + count; ++n) {
    const auto tau = recorder.tau(level_index, layout.index_of(direction, n));
    if (!tau) break;
    if (!series.taus.empty() && !(*tau > series.taus.back())) {
      series.note = "truncated at a hitting-time monotonicity break";
      break;
    }
    series.taus.push_back(*tau);
  }
  return series;
}

std::vector<double> rung_on_grid(const StationarySolution& rung, const Grid& grid) {
  const int m = static_cast<int>(rung.values.size());
  if (m < 1) throw std::invalid_argument("rung_on_grid: empty rung");
  const int n = grid.node_count();
  std::vector<double> out(n);
  if (m == grid.cells_per_period) {
    for (int i = 0; i < n; ++i) out[i] = rung.values[grid.period_index(i)];
    return out;
  }
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(grid.period_index(i)) * m /
                     static_cast<double>(grid.cells_per_period);
    const int j = static_cast<int>(s) % m;
    const double frac = s - std::floor(s);
    out[i] = (1.0 - frac) * rung.values[j] + frac * rung.values[(j + 1) % m];
  }
  return out;
}

UnidentifiedPlatformError::UnidentifiedPlatformError(double lo, double hi, double lvl)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "unidentified platform near level " << lvl << " on [" << lo << ", "
            << hi << "]: no ladder rung matches; re-enumerate the ladder finer";
        return msg.str();
      }()),
      x_lo(lo), x_hi(hi), level(lvl) {}

namespace {

struct NodeWindow {
  int lo = 0, hi = 0; // inclusive node range
  int length() const { return hi - lo + 1; }
};

std::vector<NodeWindow> mask_runs(const std::vector<char>& mask, int min_len) {
  std::vector<NodeWindow> runs;
  const int n = static_cast<int>(mask.size());
  int i = 0;
  while (i < n) {
    if (!mask[i]) { ++i; continue; }
    int j = i;
    while (j + 1 < n && mask[j + 1]) ++j;
    if (j - i + 1 >= min_len) runs.push_back({i, j});
    i = j + 1;
  }
  return runs;
}

std::vector<NodeWindow> rung_windows(const std::vector<double>& u,
                                     const std::vector<double>& rung, double tol,
                                     int min_len) {
  std::vector<char> mask(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    mask[i] = std::abs(u[i] - rung[i]) <= tol ? 1 : 0;
  return mask_runs(mask, min_len);
}

} // namespace

PlatformReport detect_platforms(const Run& run, const EquilibriaLadder& ladder,
                                const PlatformOptions& opts) {
  if (run.snapshots.size() < 2)
    throw std::invalid_argument("detect_platforms: need at least two snapshots");
  if (ladder.rungs.empty())
    throw std::invalid_argument("detect_platforms: empty ladder");

  const Grid& grid = run.grid;
  const int cells = grid.cells_per_period;
  const int min_len = opts.min_periods * cells + 1;
  const Profile& last = run.snapshots.back();

  const double t0 = run.snapshots.front().time;
  const double target = t0 + opts.earlier_fraction * (last.time - t0);
  std::size_t earlier_idx = 0;
  for (std::size_t k = 0; k + 1 < run.snapshots.size(); ++k)
    if (std::abs(run.snapshots[k].time - target) <
        std::abs(run.snapshots[earlier_idx].time - target))
      earlier_idx = k;
  const Profile& earlier = run.snapshots[earlier_idx];

  PlatformReport report;
  std::vector<char> covered(last.values.size(), 0);

  for (std::size_t r = 0; r < ladder.rungs.size(); ++r) {
    const std::vector<double> rung = rung_on_grid(ladder.rungs[r], grid);
    const auto final_wins = rung_windows(last.values, rung, opts.plateau_tol, min_len);
    const auto early_wins = rung_windows(earlier.values, rung, opts.plateau_tol, min_len);
    bool kept_any = false;
    for (const NodeWindow& w : final_wins) {
      for (int i = w.lo; i <= w.hi; ++i) covered[i] = 1;
      PlatformWindow pw;
      pw.rung = static_cast<int>(r);
      pw.x_lo = grid.x(w.lo);
      pw.x_hi = grid.x(w.hi);
      pw.width_final = pw.x_hi - pw.x_lo;
      pw.boundary_anchored =
          w.lo <= cells || w.hi >= grid.node_count() - 1 - cells;
      for (const NodeWindow& e : early_wins)
        if (e.lo <= w.hi && w.lo <= e.hi)
          pw.width_earlier = std::max(pw.width_earlier, (e.hi - e.lo) * grid.dx());
      const bool grew = pw.width_final >= pw.width_earlier + 0.5 * grid.dx();
      if (pw.boundary_anchored || grew) {
        report.windows.push_back(pw);
        kept_any = true;
      } else {
        std::ostringstream note;
        note << "transient plateau of rung " << r << " on [" << pw.x_lo << ", "
             << pw.x_hi << "] filtered (width did not grow)";
        report.notes.push_back(note.str());
      }
    }
    if (kept_any) report.platform_rungs.push_back(static_cast<int>(r));
  }

  // A wide L-periodic window the ladder cannot account for means the ladder
  // is missing a state.
  const int n = static_cast<int>(last.values.size());
  if (n > cells) {
    std::vector<char> periodic(n - cells);
    for (int i = 0; i + cells < n; ++i)
      periodic[i] =
          std::abs(last.values[i + cells] - last.values[i]) <= opts.plateau_tol ? 1 : 0;
    for (const NodeWindow& w : mask_runs(periodic, min_len)) {
      const int span_hi = w.hi + cells; // nodes [w.lo, span_hi] are one period-block
      int covered_count = 0;
      for (int i = w.lo; i <= span_hi; ++i) covered_count += covered[i];
      if (covered_count * 2 >= span_hi - w.lo + 1) continue;
      const int mid = (w.lo + span_hi) / 2;
      double level = 0.0;
      for (int i = mid; i < mid + cells && i < n; ++i) level += last.values[i];
      level /= cells;
      // Exponential tails are period-flat long before they hug their
      // platform pointwise; a flat run whose level agrees with some rung's
      // mean is accounted for. Only a level no rung explains is an
      // unidentified platform.
      bool matched = false;
      for (const StationarySolution& rung : ladder.rungs) {
        double rung_mean = 0.0;
        for (double v : rung.values) rung_mean += v;
        rung_mean /= static_cast<double>(rung.values.size());
        if (std::abs(level - rung_mean) <= opts.plateau_tol) {
          matched = true;
          break;
        }
      }
      if (matched) continue;
      throw UnidentifiedPlatformError(grid.x(w.lo), grid.x(span_hi), level);
    }
  }
  return report;
}

std::vector<std::pair<double, double>> level_position_series(const Run& run,
                                                             double level) {
  std::vector<std::pair<double, double>> out;
  for (const Profile& snap : run.snapshots) {
    const auto pos = rightmost_level_position(snap, level);
    if (pos) out.emplace_back(snap.time, *pos);
  }
  return out;
}

} // namespace terracelab
