#include "terracelab/waves.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace terracelab {

namespace {

// Distance from the front position to where the profile stays within
// tol of the reference state, scanning away from the front. Returns the
// domain edge distance if it never settles.
double tail_reach(const Profile& snap, const std::vector<double>& ref,
                  int front_node, int step, double tol, int cells) {
  const int n = static_cast<int>(snap.values.size());
  int i = front_node;
  while (i + step * cells >= 0 && i + step * cells < n) {
    bool settled = true;
    for (int k = 0; k != step * (cells + 1); k += step) {
      const int j = i + k;
      if (j < 0 || j >= n || std::abs(snap.values[j] - ref[j]) > tol) {
        settled = false;
        break;
      }
    }
    if (settled) break;
    i += step;
  }
  return std::abs(i - front_node) * snap.grid.dx();
}

double golden_minimize(const std::function<double(double)>& f, double lo, double hi,
                       int iters) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int k = 0; k < iters; ++k) {
    if (f1 <= f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

} // namespace

WavePlan plan_wave_capture(const CrossingSeries& series, const SpeedEstimate& speed,
                           const Grid& grid, double horizon, double dt,
                           const Profile& late_snapshot,
                           const std::vector<double>& upper_vals,
                           const std::vector<double>& lower_vals,
                           int upper_rung, int lower_rung,
                           double allow_lo, double allow_hi,
                           const WaveOptions& opts) {
  WavePlan plan;
  plan.alpha = series.alpha;
  plan.direction = series.direction;
  plan.speed = speed;
  plan.upper_platform = upper_rung;
  plan.lower_platform = lower_rung;
  plan.cells_per_period = grid.cells_per_period;
  const double L = series.site_spacing;
  const double dx = grid.dx();
  const int cells = grid.cells_per_period;

  if (!(std::abs(speed.c) > 0.0)) {
    plan.note = "zero speed: no period-crossing frame exists";
    return plan;
  }
  plan.period_time = L / std::abs(speed.c);
  const double margin_t = std::max(2.0 * dt, 0.02 * plan.period_time);

  if (static_cast<int>(series.taus.size()) < opts.cauchy_back + 1) {
    plan.note = "series too short for the Cauchy comparison";
    return plan;
  }

  // Tail reach measured on the late survey snapshot.
  const auto front_x = rightmost_level_position(late_snapshot, series.alpha);
  if (!front_x) {
    plan.note = "probe level absent from the late snapshot";
    return plan;
  }
  const int front_node =
      static_cast<int>(std::lround((*front_x - grid.x_min()) / dx));
  const double dL = tail_reach(late_snapshot, upper_vals, front_node, -1,
                               0.5 * opts.asym_tol, cells);
  const double dR = tail_reach(late_snapshot, lower_vals, front_node, +1,
                               0.5 * opts.asym_tol, cells);

  // The front slides one period during the s-window; budget it on the side
  // it moves toward. Outer-20% bands must sit inside the settled tails:
  //   0.8 WL - 0.2 WR >= needL,   0.8 WR - 0.2 WL >= needR.
  const double needL = dL + (speed.c < 0.0 ? L : 0.0);
  const double needR = dR + (speed.c > 0.0 ? L : 0.0);
  const double total = (needL + needR) / 0.6;
  double WL = opts.window_slack * (needL + 0.2 * total);
  double WR = opts.window_slack * (needR + 0.2 * total);
  WL = std::max(WL, opts.min_window_periods * L);
  WR = std::max(WR, opts.min_window_periods * L);
  const int wl_nodes = static_cast<int>(std::ceil(WL / dx));
  const int wr_nodes = static_cast<int>(std::ceil(WR / dx));

  const int lo_allow =
      std::max(0, static_cast<int>(std::ceil((allow_lo - grid.x_min()) / dx)));
  const int hi_allow = std::min(grid.node_count() - 1,
                                static_cast<int>(std::floor((allow_hi - grid.x_min()) / dx)));

  // Choose the latest anchor site whose full capture fits the horizon and
  // whose three congruent windows fit the allowed node range.
  const int back = opts.cauchy_back;
  for (int k = static_cast<int>(series.taus.size()) - 1; k >= back; --k) {
    const int n_star = series.n_min + k;
    const double tau_star = series.taus[static_cast<std::size_t>(k)];
    if (tau_star + plan.period_time + margin_t + dt > horizon) continue;
    const int anchor_node = (grid.periods_left + series.direction * n_star) * cells;
    const int far_node = anchor_node - series.direction * back * cells;
    const int span_lo = std::min(anchor_node, far_node) - wl_nodes;
    const int span_hi = std::max(anchor_node, far_node) + wr_nodes;
    if (span_lo < lo_allow || span_hi > hi_allow) continue;

    plan.sites = {n_star - back, n_star - 1, n_star};
    for (int a = 0; a < 3; ++a) {
      const int site = plan.sites[static_cast<std::size_t>(a)];
      const double tau = series.taus[static_cast<std::size_t>(site - series.n_min)];
      plan.taus[static_cast<std::size_t>(a)] = tau;
      FrameRecorder::Window w;
      const int node = (grid.periods_left + series.direction * site) * cells;
      w.node_lo = node - wl_nodes;
      w.node_hi = node + wr_nodes;
      w.t_begin = tau - margin_t;
      w.t_end = tau + plan.period_time + margin_t;
      plan.windows[static_cast<std::size_t>(a)] = w;
    }
    plan.feasible = true;
    return plan;
  }
  plan.note = "no anchor site fits the horizon and the allowed window range";
  return plan;
}

namespace {

// Linear time interpolation of recorded frames at target times tau + s_j.
std::vector<std::vector<double>> resample_frames(const FrameRecorder::Frames& fr,
                                                 double tau,
                                                 const std::vector<double>& s) {
  if (fr.times.size() < 2)
    throw std::logic_error("wave capture window recorded fewer than two frames");
  std::vector<std::vector<double>> out;
  out.reserve(s.size());
  for (double sj : s) {
    const double t = tau + sj;
    std::size_t k = 0;
    while (k + 2 < fr.times.size() && fr.times[k + 1] < t) ++k;
    const double t0 = fr.times[k], t1 = fr.times[k + 1];
    const double w = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    const std::vector<double>& a = fr.values[k];
    const std::vector<double>& b = fr.values[k + 1];
    std::vector<double> frame(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      frame[i] = (1.0 - w) * a[i] + w * b[i];
    out.push_back(std::move(frame));
  }
  return out;
}

double max_abs_diff(const std::vector<std::vector<double>>& a,
                    const std::vector<std::vector<double>>& b) {
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    for (std::size_t i = 0; i < a[j].size(); ++i)
      worst = std::max(worst, std::abs(a[j][i] - b[j][i]));
  return worst;
}

} // namespace

PulsatingWave extract_wave(const WavePlan& plan, const FrameRecorder& recorder,
                           std::size_t first_window_index, const Grid& grid,
                           const std::vector<double>& upper_vals,
                           const std::vector<double>& lower_vals,
                           const WaveOptions& opts) {
  if (!plan.feasible)
    throw std::logic_error("extract_wave: infeasible plan: " + plan.note);

  PulsatingWave wave;
  wave.speed = plan.speed;
  wave.direction = plan.direction;
  wave.alpha = plan.alpha;
  wave.period_time = plan.period_time;
  wave.anchor_site = plan.sites[2];
  wave.anchor_tau = plan.taus[2];
  wave.upper_platform = plan.upper_platform;
  wave.lower_platform = plan.lower_platform;
  wave.cells_per_period = plan.cells_per_period;

  wave.s.resize(static_cast<std::size_t>(opts.s_samples));
  for (int j = 0; j < opts.s_samples; ++j)
    wave.s[static_cast<std::size_t>(j)] = plan.period_time * j / opts.s_samples;

  std::array<std::vector<std::vector<double>>, 3> fam;
  for (int a = 0; a < 3; ++a)
    fam[static_cast<std::size_t>(a)] =
        resample_frames(recorder.frames(first_window_index + static_cast<std::size_t>(a)),
                        plan.taus[static_cast<std::size_t>(a)], wave.s);

  const FrameRecorder::Window& w = plan.windows[2];
  const int anchor_node =
      (grid.periods_left + plan.direction * plan.sites[2]) * plan.cells_per_period;
  wave.x.resize(static_cast<std::size_t>(w.node_hi - w.node_lo) + 1);
  for (int i = w.node_lo; i <= w.node_hi; ++i)
    wave.x[static_cast<std::size_t>(i - w.node_lo)] = (i - anchor_node) * grid.dx();
  wave.frames = fam[2];

  wave.pulsating_residual = max_abs_diff(fam[2], fam[1]);
  wave.cauchy_residual = max_abs_diff(fam[2], fam[0]);

  const std::size_t len = wave.x.size();
  const std::size_t outer = std::max<std::size_t>(1, len / 5);
  double up_res = 0.0, lo_res = 0.0, mono = 0.0;
  for (std::size_t j = 0; j < wave.frames.size(); ++j) {
    const std::vector<double>& u = wave.frames[j];
    for (std::size_t i = 0; i < outer; ++i)
      up_res = std::max(up_res,
                        std::abs(u[i] - upper_vals[static_cast<std::size_t>(w.node_lo) + i]));
    for (std::size_t i = len - outer; i < len; ++i)
      lo_res = std::max(lo_res,
                        std::abs(u[i] - lower_vals[static_cast<std::size_t>(w.node_lo) + i]));
    const double band = 2.0 * opts.asym_tol;
    for (std::size_t i = 0; i + 1 < len; ++i) {
      const std::size_t g0 = static_cast<std::size_t>(w.node_lo) + i;
      const bool core = u[i] < upper_vals[g0] - band && u[i] > lower_vals[g0] + band &&
                        u[i + 1] < upper_vals[g0 + 1] - band &&
                        u[i + 1] > lower_vals[g0 + 1] + band;
      if (core) mono = std::max(mono, u[i + 1] - u[i]);
    }
  }
  wave.upper_asym_residual = up_res;
  wave.lower_asym_residual = lo_res;
  wave.monotone_violation = mono;

  wave.accepted = true;
  if (wave.pulsating_residual > opts.wave_tol) {
    wave.accepted = false;
    wave.notes.push_back("pulsating residual above tolerance");
  }
  if (wave.cauchy_residual > opts.wave_tol) {
    wave.accepted = false;
    wave.notes.push_back("recentred families not Cauchy at tolerance");
  }
  if (up_res > opts.asym_tol || lo_res > opts.asym_tol) {
    wave.accepted = false;
    wave.notes.push_back("tail asymptotics above tolerance");
  }
  if (mono > opts.monotone_tol) {
    wave.accepted = false;
    wave.notes.push_back("profile not monotone between the asymptotic bands");
  }
  return wave;
}

SampledFamily wave_family(const PulsatingWave& wave) {
  SampledFamily fam;
  fam.x = wave.x;
  fam.times = wave.s;
  fam.profiles = wave.frames;
  return fam;
}

namespace {

// Evaluate the wave at (s, node index into its window), using the pulsating
// wrap B(s + T, xi) = B(s, xi - direction*L) and linear interpolation in s.
// Returns false if the wrap-shifted index leaves the window.
bool wave_eval(const PulsatingWave& w, double s, std::ptrdiff_t node, double& out) {
  const double T = w.period_time;
  double wrap = std::floor(s / T);
  double s0 = s - wrap * T;
  // Guard the s0 == T edge from roundoff.
  if (s0 >= T) { s0 -= T; wrap += 1.0; }
  const std::ptrdiff_t shift =
      static_cast<std::ptrdiff_t>(wrap) * w.direction * w.cells_per_period;

  const double ds = T / static_cast<double>(w.s.size());
  const std::size_t j0 = std::min<std::size_t>(static_cast<std::size_t>(s0 / ds),
                                               w.s.size() - 1);
  const double frac = (s0 - w.s[j0]) / ds;

  const std::ptrdiff_t i0 = node - shift;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(w.x.size());
  if (i0 < 0 || i0 >= n) return false;
  const double v0 = w.frames[j0][static_cast<std::size_t>(i0)];
  double v1;
  if (j0 + 1 < w.s.size()) {
    v1 = w.frames[j0 + 1][static_cast<std::size_t>(i0)];
  } else {
    // Next sample wraps to frame 0 one spatial period over.
    const std::ptrdiff_t iw = i0 - w.direction * w.cells_per_period;
    if (iw < 0 || iw >= n) return false;
    v1 = w.frames[0][static_cast<std::size_t>(iw)];
  }
  out = (1.0 - frac) * v0 + frac * v1;
  return true;
}

} // namespace

std::optional<double> wave_value(const PulsatingWave& wave, double s,
                                 std::ptrdiff_t window_node) {
  double v;
  if (!wave_eval(wave, s, window_node, v)) return std::nullopt;
  return v;
}

double wave_shift_distance(const PulsatingWave& a, const PulsatingWave& b,
                           double sigma) {
  const double dx = a.dx();
  if (!(dx > 0.0) || std::abs(dx - b.dx()) > 1e-12 * dx)
    throw std::invalid_argument("wave_shift_distance: incompatible window grids");
  const std::ptrdiff_t offset =
      static_cast<std::ptrdiff_t>(std::llround((a.x.front() - b.x.front()) / dx));

  double worst = 0.0;
  bool any = false;
  for (std::size_t j = 0; j < a.s.size(); ++j) {
    for (std::size_t i = 0; i < a.x.size(); ++i) {
      double v;
      if (!wave_eval(b, a.s[j] + sigma, static_cast<std::ptrdiff_t>(i) + offset, v))
        continue;
      any = true;
      worst = std::max(worst, std::abs(a.frames[j][i] - v));
    }
  }
  if (!any)
    throw std::invalid_argument("wave_shift_distance: windows do not overlap");
  return worst;
}

ShiftAlignment optimal_time_shift(const PulsatingWave& a, const PulsatingWave& b) {
  const double T = std::min(a.period_time, b.period_time);
  const auto f = [&](double sigma) { return wave_shift_distance(a, b, sigma); };

  // Coarse bracket first: the sup-distance need not be unimodal globally.
  double best_sigma = 0.0, best = f(0.0);
  const int coarse = 24;
  for (int k = -coarse; k <= coarse; ++k) {
    const double sigma = 0.5 * T * k / coarse;
    const double d = f(sigma);
    if (d < best) { best = d; best_sigma = sigma; }
  }
  const double step = 0.5 * T / coarse;
  const double refined =
      golden_minimize(f, best_sigma - step, best_sigma + step, 48);
  ShiftAlignment out;
  const double fr = f(refined);
  out.sigma = fr <= best ? refined : best_sigma;
  out.distance = std::min(fr, best);
  return out;
}

double pure_translate_defect(const PulsatingWave& wave) {
  const double dx = wave.dx();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(wave.x.size());
  double defect = 0.0;
  for (std::size_t j = 1; j < wave.s.size(); ++j) {
    const double center = wave.speed.c * wave.s[j];
    const auto dist = [&](double shift) {
      // sup over the overlap of |frame_j(xi) - frame_0(xi - shift)|.
      double worst = 0.0;
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double pos = wave.x[static_cast<std::size_t>(i)] - shift;
        const double fi = (pos - wave.x.front()) / dx;
        const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(std::floor(fi));
        if (k < 0 || k + 1 >= n) continue;
        const double frac = fi - static_cast<double>(k);
        const double v = (1.0 - frac) * wave.frames[0][static_cast<std::size_t>(k)] +
                         frac * wave.frames[0][static_cast<std::size_t>(k + 1)];
        worst = std::max(worst, std::abs(wave.frames[j][static_cast<std::size_t>(i)] - v));
      }
      return worst;
    };
    const double L = wave.cells_per_period * dx;
    const double best_shift = golden_minimize(dist, center - 0.6 * L, center + 0.6 * L, 48);
    defect = std::max(defect, dist(best_shift));
  }
  return defect;
}

SpeedSteepnessVerdict speed_steepness_test(const PulsatingWave& w1,
                                           const PulsatingWave& w2,
                                           const RungAssessment& shared_top,
                                           const SteepnessResult& w1_steeper_than_w2,
                                           double wave_tol) {
  SpeedSteepnessVerdict verdict;
  if (shared_top.stability != StabilityLabel::Stable ||
      shared_top.band_witness != WitnessStatus::Certified) {
    verdict.status = VerdictStatus::Skipped;
    verdict.detail = "hypothesis unmet: shared upper state lacks a stability witness";
    return verdict;
  }
  if (!w1_steeper_than_w2.steeper) {
    verdict.status = VerdictStatus::Skipped;
    verdict.detail = "hypothesis unmet: no steepness certificate for the first wave";
    return verdict;
  }

  verdict.slack = w1.speed.ci + w2.speed.ci + 1e-9;
  verdict.speeds_ordered = w1.speed.c <= w2.speed.c + verdict.slack;
  if (!verdict.speeds_ordered) {
    verdict.status = VerdictStatus::Failed;
    std::ostringstream msg;
    msg << "steeper wave is faster: " << w1.speed.c << " > " << w2.speed.c
        << " beyond slack " << verdict.slack;
    verdict.detail = msg.str();
    return verdict;
  }

  verdict.equal_speed_case =
      std::abs(w1.speed.c - w2.speed.c) <= verdict.slack &&
      std::abs(w1.speed.c) > 0.0 && std::abs(w2.speed.c) > 0.0;
  if (verdict.equal_speed_case) {
    verdict.alignment = optimal_time_shift(w1, w2);
    verdict.profiles_identical = verdict.alignment.distance <= 2.0 * wave_tol;
    if (!verdict.profiles_identical) {
      verdict.status = VerdictStatus::Failed;
      std::ostringstream msg;
      msg << "equal speeds but profiles differ by " << verdict.alignment.distance
          << " after the optimal time shift";
      verdict.detail = msg.str();
      return verdict;
    }
  }
  verdict.status = VerdictStatus::Passed;
  verdict.detail = verdict.equal_speed_case
                       ? "speeds ordered; equal-speed profiles identical up to time shift"
                       : "speeds ordered";
  return verdict;
}

ZeroSpeedLabel zero_speed_probe(const Run& run, double level) {
  const auto series = level_position_series(run, level);
  if (series.size() < 4) return ZeroSpeedLabel::Unresolved;
  const std::size_t half = series.size() / 2;
  const double dx = run.grid.dx();

  const double disp = series.back().second - series[half].second;
  if (std::abs(disp) < dx) return ZeroSpeedLabel::StationaryLike;

  const double jitter = 0.01 * dx;
  const int dir = disp > 0.0 ? 1 : -1;
  for (std::size_t k = half; k + 1 < series.size(); ++k) {
    const double inc = series[k + 1].second - series[k].second;
    if (dir * inc < -jitter) return ZeroSpeedLabel::Unresolved;
  }
  return ZeroSpeedLabel::Moving;
}

const char* to_string(ZeroSpeedLabel label) {
  switch (label) {
    case ZeroSpeedLabel::Moving: return "moving";
    case ZeroSpeedLabel::StationaryLike: return "stationary-like";
    case ZeroSpeedLabel::Unresolved: return "unresolved";
  }
  return "unresolved";
}

const char* to_string(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::Passed: return "passed";
    case VerdictStatus::Failed: return "failed";
    case VerdictStatus::Skipped: return "skipped";
  }
  return "skipped";
}

} // namespace terracelab
