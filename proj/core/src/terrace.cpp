#include "terracelab/terrace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "terracelab/pool.hpp"

namespace terracelab {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<double> resample_period(const std::vector<double>& vals, int out_n) {
  const int m = static_cast<int>(vals.size());
  if (m == out_n) return vals;
  std::vector<double> out(static_cast<std::size_t>(out_n));
  for (int i = 0; i < out_n; ++i) {
    const double s = static_cast<double>(i) * m / out_n;
    const int j = static_cast<int>(s) % m;
    const double frac = s - std::floor(s);
    out[static_cast<std::size_t>(i)] =
        (1.0 - frac) * vals[static_cast<std::size_t>(j)] +
        frac * vals[static_cast<std::size_t>((j + 1) % m)];
  }
  return out;
}

double rung_distance(const std::vector<double>& a, const std::vector<double>& b) {
  const int n = static_cast<int>(std::max(a.size(), b.size()));
  const std::vector<double> ra = resample_period(a, n);
  const std::vector<double> rb = resample_period(b, n);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    worst = std::max(worst, std::abs(ra[static_cast<std::size_t>(i)] -
                                     rb[static_cast<std::size_t>(i)]));
  return worst;
}

/// The top state on the run grid's per-period nodes, Newton-polished when the
/// ladder resolution differs from the grid's.
std::vector<double> top_on_cells(const PeriodicCoefficient& a, const Nonlinearity& nl,
                                 const std::vector<double>& top, int cells,
                                 std::vector<std::string>& notes) {
  std::vector<double> guess = resample_period(top, cells);
  if (static_cast<int>(top.size()) == cells) return guess;
  NewtonOptions nopts;
  nopts.range_hi = *std::max_element(top.begin(), top.end()) + 0.1;
  const NewtonResult res = solve_stationary(a, nl, guess, nopts);
  if (res.status == NewtonStatus::Converged &&
      rung_distance(res.solution->values, guess) < 1e-2)
    return res.solution->values;
  notes.push_back("top state used at interpolated resolution (refinement declined)");
  return guess;
}

std::vector<double> build_probe_levels(const EquilibriaLadder& ladder,
                                       const std::vector<double>& fractions) {
  std::vector<double> levels;
  for (std::size_t i = 0; i + 1 < ladder.rungs.size(); ++i) {
    const double hi = ladder.rungs[i].value_at0();
    const double lo = ladder.rungs[i + 1].value_at0();
    for (double f : fractions) levels.push_back(lo + f * (hi - lo));
  }
  return levels;
}

struct PlanSlot {
  int step = 0;
  std::size_t probe = 0;
  WavePlan plan;
  std::size_t first_window = 0;
};

} // namespace

std::vector<double> rung_on_window(const StationarySolution& rung,
                                   const PulsatingWave& wave) {
  const int cells = wave.cells_per_period;
  const double dx = wave.dx();
  const std::vector<double> table = resample_period(rung.values, cells);
  std::vector<double> out(wave.x.size());
  for (std::size_t i = 0; i < wave.x.size(); ++i) {
    const int rel = static_cast<int>(std::llround(wave.x[i] / dx));
    const int phase = ((rel % cells) + cells) % cells;
    out[i] = table[static_cast<std::size_t>(phase)];
  }
  return out;
}

SampledFamily extended_wave_family(const PulsatingWave& wave,
                                   const StationarySolution& upper,
                                   const StationarySolution& lower,
                                   std::ptrdiff_t lo_node, std::ptrdiff_t hi_node) {
  const int cells = wave.cells_per_period;
  const double dx = wave.dx();
  const std::vector<double> up = resample_period(upper.values, cells);
  const std::vector<double> lo = resample_period(lower.values, cells);
  const std::ptrdiff_t w_lo = static_cast<std::ptrdiff_t>(std::llround(wave.x.front() / dx));
  const std::ptrdiff_t w_hi = static_cast<std::ptrdiff_t>(std::llround(wave.x.back() / dx));

  SampledFamily fam;
  fam.times = wave.s;
  for (std::ptrdiff_t n = lo_node; n <= hi_node; ++n)
    fam.x.push_back(static_cast<double>(n) * dx);
  fam.profiles.assign(wave.frames.size(), {});
  for (std::size_t j = 0; j < wave.frames.size(); ++j) {
    fam.profiles[j].reserve(fam.x.size());
    for (std::ptrdiff_t n = lo_node; n <= hi_node; ++n) {
      const int phase = static_cast<int>(((n % cells) + cells) % cells);
      double v;
      if (n < w_lo)
        v = up[static_cast<std::size_t>(phase)];
      else if (n > w_hi)
        v = lo[static_cast<std::size_t>(phase)];
      else
        v = wave.frames[j][static_cast<std::size_t>(n - w_lo)];
      fam.profiles[j].push_back(v);
    }
  }
  return fam;
}

TerraceExtraction extract_terrace(const PeriodicCoefficient& a, const Nonlinearity& nl,
                                  const std::vector<double>& top,
                                  const ExtractOptions& opts) {
  TerraceExtraction out;
  Terrace& T = out.terrace;
  const double L = a.period();
  T.period_L = L;

  // --- ladder and stability witnesses -----------------------------------
  T.ladder = enumerate_equilibria(a, nl, top, opts.ladder);
  if (T.ladder.continuum_suspected) {
    T.notes.push_back("continuum of stationary states suspected: no terrace extracted");
    for (const std::string& n : T.ladder.notes) T.notes.push_back(n);
    return out;
  }
  if (T.ladder.rungs.size() < 2) {
    T.notes.push_back("ladder lacks its endpoints: no terrace extracted");
    return out;
  }
  T.assumptions = check_assumptions(a, nl, T.ladder, opts.assumptions);

  // --- numerics ----------------------------------------------------------
  const int cells = std::max(16, static_cast<int>(std::lround(L / opts.dx)));
  if (std::abs(cells * opts.dx - L) > 1e-9 * std::max(1.0, L))
    T.notes.push_back("dx snapped to period/" + std::to_string(cells));
  const double top_max = *std::max_element(top.begin(), top.end());
  const double range_lo = -0.1, range_hi = top_max + 0.1;

  int pl = opts.periods_left, pr = opts.periods_right;
  if (pl <= 0 || pr <= 0) {
    const double lip = nl.lipschitz_bound(range_lo, range_hi);
    const double c_bound = 2.0 * std::sqrt(std::max(a.max_value() * lip, 1e-12));
    const int need = static_cast<int>(std::ceil(c_bound * opts.horizon / L));
    const int pad = opts.guard_periods + opts.platforms.min_periods + 3;
    if (pl <= 0) pl = need + pad;
    if (pr <= 0) pr = need + pad;
    T.notes.push_back("domain sized from the linear spreading bound: " +
                      std::to_string(pl) + "+" + std::to_string(pr) + " periods");
  }
  const Grid grid(L, cells, pl, pr);
  const double dx = grid.dx();
  const double dt = opts.dt > 0.0 ? opts.dt : lipschitz_dt(nl, dx, range_lo, range_hi);
  T.numerics = {dx, dt, opts.horizon, opts.theta_scheme, pl, pr};

  StepperConfig scfg;
  scfg.dt = dt;
  scfg.theta_scheme = opts.theta_scheme;
  scfg.boundary = BoundaryMode::Clamped;
  scfg.guard_periods = opts.guard_periods;
  scfg.range_lo = range_lo;
  scfg.range_hi = range_hi;

  const std::vector<double> p_cells = top_on_cells(a, nl, top, cells, T.notes);
  const Stepper stepper = Stepper::clamped(grid, a, nl, p_cells, scfg);
  const Profile u0 = opts.datum_exp_lambda > 0.0
                         ? make_exponential(grid, p_cells, opts.datum_exp_lambda,
                                            opts.datum_x0)
                         : make_heaviside(grid, p_cells, opts.datum_x0);

  // --- survey run with crossing monitors at every period site ------------
  const std::vector<double> levels = build_probe_levels(T.ladder, opts.probe_fractions);
  const MonitorLayout layout = make_monitor_layout(grid, opts.guard_periods);
  CrossingRecorder recorder(layout.site_nodes, levels);

  EvolveOptions eopts;
  eopts.horizon = opts.horizon;
  eopts.max_snapshots = opts.max_snapshots;
  eopts.on_step = [&recorder](const StepContext& ctx) { recorder.observe(ctx); };
  out.survey = evolve_until(stepper, u0, eopts);

  if (out.survey.status == RunStatus::AbortedRangeEscape) {
    T.notes.push_back("evolution escaped the admissible range; extraction aborted");
    return out;
  }
  if (out.survey.status == RunStatus::TruncatedByGuard)
    T.notes.push_back("run truncated by the boundary guard at t = " +
                      fmt(out.survey.end_time));

  // --- half-resolution companion: discretization allowance for the CIs ---
  std::map<std::pair<std::size_t, int>, double> coarse_speed;
  if (opts.with_pilot) {
    if (cells % 2 == 0 && cells / 2 >= 16) {
      const Grid cgrid(L, cells / 2, pl, pr);
      StepperConfig ccfg = scfg;
      ccfg.dt = std::min(2.0 * dt, lipschitz_dt(nl, cgrid.dx(), range_lo, range_hi));
      const std::vector<double> p_coarse = resample_period(p_cells, cells / 2);
      const Stepper cstep = Stepper::clamped(cgrid, a, nl, p_coarse, ccfg);
      const Profile cu0 = opts.datum_exp_lambda > 0.0
                              ? make_exponential(cgrid, p_coarse,
                                                 opts.datum_exp_lambda, opts.datum_x0)
                              : make_heaviside(cgrid, p_coarse, opts.datum_x0);
      const MonitorLayout clayout = make_monitor_layout(cgrid, opts.guard_periods);
      CrossingRecorder crec(clayout.site_nodes, levels);
      EvolveOptions ceopts;
      ceopts.horizon = opts.horizon;
      ceopts.max_snapshots = 2;
      ceopts.on_step = [&crec](const StepContext& ctx) { crec.observe(ctx); };
      evolve_until(cstep, cu0, ceopts);
      for (std::size_t l = 0; l < levels.size(); ++l) {
        for (int dir : {+1, -1}) {
          const CrossingSeries cs = series_from_recorder(crec, clayout, l, dir, L);
          if (cs.taus.size() < static_cast<std::size_t>(kMinSeriesSites)) continue;
          if (classify_gaps(cs, opts.gap_spread_tol).behavior != GapBehavior::Converging)
            continue;
          try {
            coarse_speed[{l, dir}] = estimate_speed(cs, 0.0, opts.gap_spread_tol).c;
          } catch (const std::runtime_error&) {
            // Unresolved coarse estimate: no allowance from this level.
          }
        }
      }
    } else {
      T.notes.push_back("pilot skipped: grid too coarse to halve");
    }
  }

  // --- per-level probes ---------------------------------------------------
  T.probes.resize(levels.size());
  bool any_unresolved = false;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    LevelProbe& probe = T.probes[l];
    probe.alpha = levels[l];
    CrossingSeries right = series_from_recorder(recorder, layout, l, +1, L);
    CrossingSeries left = series_from_recorder(recorder, layout, l, -1, L);
    probe.right_sites = static_cast<int>(right.taus.size());
    probe.left_sites = static_cast<int>(left.taus.size());
    const GapStats rs = classify_gaps(right, opts.gap_spread_tol);
    const GapStats ls = classify_gaps(left, opts.gap_spread_tol);
    const bool rq = probe.right_sites >= kMinSeriesSites &&
                    rs.behavior == GapBehavior::Converging;
    const bool lq = probe.left_sites >= kMinSeriesSites &&
                    ls.behavior == GapBehavior::Converging;

    if (rq && (!lq || probe.right_sites >= probe.left_sites)) {
      probe.direction = +1;
      probe.series = std::move(right);
      probe.behavior = rs.behavior;
    } else if (lq) {
      probe.direction = -1;
      probe.series = std::move(left);
      probe.behavior = ls.behavior;
    } else {
      const bool r_unresolved =
          probe.right_sites >= kMinSeriesSites && rs.behavior == GapBehavior::Unresolved;
      const bool l_unresolved =
          probe.left_sites >= kMinSeriesSites && ls.behavior == GapBehavior::Unresolved;
      if (r_unresolved || l_unresolved) {
        probe.note = "gap dichotomy unresolved";
        probe.behavior = GapBehavior::Unresolved;
        any_unresolved = true;
      } else {
        probe.zero_speed = true;
        probe.behavior = GapBehavior::Diverging;
        probe.note = probe.right_sites + probe.left_sites == 0
                         ? "level never crossed beyond the interface"
                         : "too few sites or diverging gaps on both sides";
      }
      continue;
    }

    const GapStats chosen = classify_gaps(probe.series, opts.gap_spread_tol);
    double extra = 0.0;
    const auto it = coarse_speed.find({l, probe.direction});
    if (it != coarse_speed.end()) {
      const double proxy =
          probe.direction * L / chosen.last_quartile_mean; // cheap fine-grid proxy
      extra = std::abs(it->second - proxy);
    }
    try {
      probe.speed = estimate_speed(probe.series, extra, opts.gap_spread_tol);
    } catch (const std::runtime_error& e) {
      probe.note = e.what();
      any_unresolved = true;
    }
    if (!probe.note.empty() && !probe.series.note.empty())
      probe.note += "; " + probe.series.note;
    else if (probe.note.empty())
      probe.note = probe.series.note;
  }

  // --- platforms ----------------------------------------------------------
  try {
    out.platform_report = detect_platforms(out.survey, T.ladder, opts.platforms);
  } catch (const UnidentifiedPlatformError& e) {
    T.notes.push_back(std::string(e.what()) + "; re-enumerating the ladder finer");
    LadderOptions finer = opts.ladder;
    finer.resolution *= 4;
    T.ladder = enumerate_equilibria(a, nl, top, finer);
    T.assumptions = check_assumptions(a, nl, T.ladder, opts.assumptions);
    T.notes.push_back("probe levels predate the ladder refinement");
    out.platform_report = detect_platforms(out.survey, T.ladder, opts.platforms);
  }
  T.platform_rungs = out.platform_report.platform_rungs;
  for (const std::string& n : out.platform_report.notes) T.notes.push_back(n);

  bool ok = true;
  if (T.platform_rungs.empty() || T.platform_rungs.front() != 0) {
    T.notes.push_back("top platform not detected; extend the horizon or domain");
    ok = false;
  }
  if (T.platform_rungs.empty() ||
      T.platform_rungs.back() != static_cast<int>(T.ladder.rungs.size()) - 1) {
    T.notes.push_back("bottom platform not detected; extend the horizon or domain");
    ok = false;
  }

  // --- steps --------------------------------------------------------------
  const std::size_t nplat = T.platform_rungs.size();
  for (std::size_t k = 0; k + 1 < nplat; ++k) {
    TerraceStep step;
    step.upper_platform = static_cast<int>(k);
    step.lower_platform = static_cast<int>(k + 1);
    const double hi = T.ladder.rungs[static_cast<std::size_t>(T.platform_rungs[k])].value_at0();
    const double lo =
        T.ladder.rungs[static_cast<std::size_t>(T.platform_rungs[k + 1])].value_at0();
    const double mid = 0.5 * (lo + hi);

    for (std::size_t p = 0; p < T.probes.size(); ++p) {
      if (T.probes[p].alpha > lo && T.probes[p].alpha < hi) {
        T.probes[p].gap = static_cast<int>(k);
        step.probes.push_back(p);
      }
    }
    if (step.probes.empty()) {
      step.notes.push_back("no probe level falls inside this gap");
      step.zero_speed = true;
      ok = false;
      T.steps.push_back(std::move(step));
      continue;
    }

    std::vector<std::size_t> with_speed;
    bool all_zero = true;
    for (std::size_t p : step.probes) {
      if (T.probes[p].speed) with_speed.push_back(p);
      if (!T.probes[p].zero_speed) all_zero = false;
    }
    std::sort(with_speed.begin(), with_speed.end(), [&](std::size_t x, std::size_t y) {
      return std::abs(T.probes[x].alpha - mid) < std::abs(T.probes[y].alpha - mid);
    });

    if (with_speed.empty()) {
      if (all_zero) {
        step.zero_speed = true;
        std::size_t nearest = step.probes.front();
        for (std::size_t p : step.probes)
          if (std::abs(T.probes[p].alpha - mid) < std::abs(T.probes[nearest].alpha - mid))
            nearest = p;
        step.zero_probe = zero_speed_probe(out.survey, T.probes[nearest].alpha);
        step.notes.push_back(std::string("zero-speed flag; sub-period probe: ") +
                             to_string(*step.zero_probe));
      } else {
        step.notes.push_back("probes present but no resolved speed in this gap");
        ok = false;
      }
      T.steps.push_back(std::move(step));
      continue;
    }

    step.primary_probe = with_speed.front();
    step.speed = T.probes[step.primary_probe].speed;
    for (std::size_t i = 0; i < with_speed.size(); ++i) {
      for (std::size_t j = i + 1; j < with_speed.size(); ++j) {
        const SpeedEstimate& si = *T.probes[with_speed[i]].speed;
        const SpeedEstimate& sj = *T.probes[with_speed[j]].speed;
        if (std::abs(si.c - sj.c) > si.ci + sj.ci + 1e-12) {
          step.level_consistent = false;
          step.notes.push_back("probe speeds at " + fmt(si.alpha) + " and " +
                               fmt(sj.alpha) + " disagree beyond combined intervals");
        }
        if (T.probes[with_speed[i]].direction != T.probes[with_speed[j]].direction) {
          step.level_consistent = false;
          step.notes.push_back("probe directions disagree inside one gap");
          ok = false;
        }
      }
    }
    T.steps.push_back(std::move(step));
  }
  if (any_unresolved) {
    T.notes.push_back("at least one probe level has an unresolved speed");
    ok = false;
  }

  // --- wave capture -------------------------------------------------------
  if (opts.with_waves && !T.steps.empty()) {
    const Profile& late = out.survey.snapshots.back();
    std::vector<std::optional<double>> front_pos(T.steps.size());
    for (std::size_t k = 0; k < T.steps.size(); ++k) {
      if (T.steps[k].probes.empty()) continue;
      std::size_t pp = T.steps[k].speed ? T.steps[k].primary_probe
                                        : T.steps[k].probes.front();
      front_pos[k] = rightmost_level_position(late, T.probes[pp].alpha);
    }

    std::vector<PlanSlot> slots;
    std::vector<FrameRecorder::Window> windows;
    for (std::size_t k = 0; k < T.steps.size(); ++k) {
      TerraceStep& step = T.steps[k];
      if (step.zero_speed || !step.speed) continue;
      double allow_lo = grid.x_min() + opts.guard_periods * L;
      double allow_hi = grid.x_max() - opts.guard_periods * L;
      if (front_pos[k]) {
        if (k > 0 && front_pos[k - 1])
          allow_lo = *front_pos[k] - 0.45 * (*front_pos[k] - *front_pos[k - 1]);
        if (k + 1 < T.steps.size() && front_pos[k + 1])
          allow_hi = *front_pos[k] + 0.45 * (*front_pos[k + 1] - *front_pos[k]);
      }

      std::vector<std::size_t> candidates;
      for (std::size_t p : step.probes)
        if (T.probes[p].speed) candidates.push_back(p);
      const double hi = T.ladder.rungs[static_cast<std::size_t>(T.platform_rungs[k])].value_at0();
      const double lo =
          T.ladder.rungs[static_cast<std::size_t>(T.platform_rungs[k + 1])].value_at0();
      const double mid = 0.5 * (lo + hi);
      std::sort(candidates.begin(), candidates.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(T.probes[x].alpha - mid) < std::abs(T.probes[y].alpha - mid);
      });
      if (candidates.size() > static_cast<std::size_t>(opts.waves_per_gap))
        candidates.resize(static_cast<std::size_t>(opts.waves_per_gap));

      const int up_rung = T.platform_rungs[k];
      const int lo_rung = T.platform_rungs[k + 1];
      const std::vector<double> up_vals =
          rung_on_grid(T.ladder.rungs[static_cast<std::size_t>(up_rung)], grid);
      const std::vector<double> lo_vals =
          rung_on_grid(T.ladder.rungs[static_cast<std::size_t>(lo_rung)], grid);
      for (std::size_t p : candidates) {
        WavePlan plan = plan_wave_capture(T.probes[p].series, *T.probes[p].speed, grid,
                                          opts.horizon, dt, late, up_vals, lo_vals,
                                          up_rung, lo_rung, allow_lo, allow_hi,
                                          opts.waves);
        if (!plan.feasible) {
          step.notes.push_back("wave capture at level " + fmt(T.probes[p].alpha) +
                               " infeasible: " + plan.note);
          continue;
        }
        PlanSlot slot;
        slot.step = static_cast<int>(k);
        slot.probe = p;
        slot.first_window = windows.size();
        for (const auto& w : plan.windows) windows.push_back(w);
        slot.plan = std::move(plan);
        slots.push_back(std::move(slot));
      }
    }

    if (!slots.empty()) {
      double capture_end = 0.0;
      for (const auto& w : windows) capture_end = std::max(capture_end, w.t_end);
      FrameRecorder frames(windows);
      EvolveOptions copts;
      copts.horizon = std::min(opts.horizon, capture_end + 2.0 * dt);
      copts.max_snapshots = 2;
      copts.on_step = [&frames](const StepContext& ctx) { frames.observe(ctx); };
      evolve_until(stepper, u0, copts);

      std::vector<PulsatingWave> waves(slots.size());
      parallel_for(slots.size(), opts.threads, [&](std::size_t i) {
        const PlanSlot& slot = slots[i];
        const std::vector<double> up_vals = rung_on_grid(
            T.ladder.rungs[static_cast<std::size_t>(slot.plan.upper_platform)], grid);
        const std::vector<double> lo_vals = rung_on_grid(
            T.ladder.rungs[static_cast<std::size_t>(slot.plan.lower_platform)], grid);
        waves[i] = extract_wave(slot.plan, frames, slot.first_window, grid, up_vals,
                                lo_vals, opts.waves);
      });
      for (std::size_t i = 0; i < slots.size(); ++i)
        T.steps[static_cast<std::size_t>(slots[i].step)].waves.push_back(
            std::move(waves[i]));
    }
  }

  // --- verification -------------------------------------------------------
  TerraceVerification& V = T.verification;
  if (nplat >= 2) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < nplat; ++k) {
      const auto& hi = T.ladder.rungs[static_cast<std::size_t>(T.platform_rungs[k])].values;
      const auto& lo =
          T.ladder.rungs[static_cast<std::size_t>(T.platform_rungs[k + 1])].values;
      const int n = static_cast<int>(std::max(hi.size(), lo.size()));
      const std::vector<double> rh = resample_period(hi, n);
      const std::vector<double> rl = resample_period(lo, n);
      for (int i = 0; i < n; ++i)
        margin = std::min(margin, rh[static_cast<std::size_t>(i)] -
                                      rl[static_cast<std::size_t>(i)]);
    }
    V.min_platform_margin = margin;
    V.platforms_ordered = margin > opts.platform_tol;
  }

  V.speeds_ordered = true;
  for (std::size_t k = 0; k + 1 < T.steps.size(); ++k) {
    if (!T.steps[k].speed || !T.steps[k + 1].speed) continue;
    const SpeedEstimate& s0 = *T.steps[k].speed;
    const SpeedEstimate& s1 = *T.steps[k + 1].speed;
    if (s0.c > s1.c + s0.ci + s1.ci + 1e-12) {
      V.speeds_ordered = false;
      V.notes.push_back("speed ordering violated between steps " + std::to_string(k) +
                        " and " + std::to_string(k + 1));
    }
  }

  V.waves_accepted = true;
  if (opts.with_waves) {
    for (const TerraceStep& step : T.steps) {
      if (step.zero_speed) continue;
      if (step.waves.empty()) {
        V.waves_accepted = false;
        V.notes.push_back("a non-stationary step has no extracted wave");
        continue;
      }
      for (const PulsatingWave& w : step.waves)
        if (!w.accepted) {
          V.waves_accepted = false;
          for (const std::string& n : w.notes)
            V.notes.push_back("wave at level " + fmt(w.alpha) + ": " + n);
        }
    }
  } else {
    V.waves_accepted = false;
  }

  // Steepness certificates: same-gap wave pairs (mutual, plus identity up to
  // time shift), each wave against swallowed interior rungs, and stacked
  // cross-gap pairs. Tie bands absorb the accepted wave/tail residuals.
  V.steepness_ok = true;
  const double tie_same = 1e-3, tol_same = 3e-3;
  const double tie_cross = 2e-3, tol_cross = 4e-3;
  for (std::size_t k = 0; k < T.steps.size(); ++k) {
    const TerraceStep& step = T.steps[k];
    if (step.waves.empty()) continue;
    const SampledFamily primary = wave_family(step.waves.front());
    for (std::size_t wj = 1; wj < step.waves.size(); ++wj) {
      const SampledFamily other = wave_family(step.waves[wj]);
      ++V.steepness_pairs;
      const ShiftAlignment align =
          optimal_time_shift(step.waves.front(), step.waves[wj]);
      if (align.distance > 2.0 * opts.waves.wave_tol) {
        V.steepness_ok = false;
        V.notes.push_back("same-gap waves differ by " + fmt(align.distance) +
                          " after the optimal time shift");
      }
    }
    const double hi = T.ladder.rungs[static_cast<std::size_t>(T.platform_rungs[k])].value_at0();
    const double lo =
        T.ladder.rungs[static_cast<std::size_t>(T.platform_rungs[k + 1])].value_at0();
    for (std::size_t r = 0; r < T.ladder.rungs.size(); ++r) {
      const double v = T.ladder.rungs[r].value_at0();
      if (!(v > lo + opts.platform_tol && v < hi - opts.platform_tol)) continue;
      SampledFamily rung_fam;
      rung_fam.x = primary.x;
      rung_fam.times = {0.0};
      rung_fam.profiles = {rung_on_window(T.ladder.rungs[r], step.waves.front())};
      ++V.steepness_pairs;
      const SteepnessResult cert = is_steeper(primary, rung_fam, tol_same, tie_same);
      if (!cert.steeper) {
        V.steepness_ok = false;
        V.notes.push_back("wave in gap " + std::to_string(k) +
                          " is not steeper than the swallowed state at u(0)=" + fmt(v));
      }
    }
    for (std::size_t l = k + 1; l < T.steps.size(); ++l) {
      if (T.steps[l].waves.empty()) continue;
      const PulsatingWave& wk = step.waves.front();
      const PulsatingWave& wl = T.steps[l].waves.front();
      const double dxw = wk.dx();
      const std::ptrdiff_t lo_node = std::min(
          static_cast<std::ptrdiff_t>(std::llround(wk.x.front() / dxw)),
          static_cast<std::ptrdiff_t>(std::llround(wl.x.front() / dxw)));
      const std::ptrdiff_t hi_node = std::max(
          static_cast<std::ptrdiff_t>(std::llround(wk.x.back() / dxw)),
          static_cast<std::ptrdiff_t>(std::llround(wl.x.back() / dxw)));
      const auto rung = [&](int platform) -> const StationarySolution& {
        return T.ladder.rungs[static_cast<std::size_t>(T.platform_rungs
                                                           [static_cast<std::size_t>(platform)])];
      };
      const SampledFamily fk = extended_wave_family(
          wk, rung(step.upper_platform), rung(step.lower_platform), lo_node, hi_node);
      const SampledFamily fl = extended_wave_family(
          wl, rung(T.steps[l].upper_platform), rung(T.steps[l].lower_platform),
          lo_node, hi_node);
      ++V.steepness_pairs;
      if (!is_steeper(fk, fl, tol_cross, tie_cross).steeper) {
        V.steepness_ok = false;
        V.notes.push_back("cross-gap steepness failed between steps " +
                          std::to_string(k) + " and " + std::to_string(l));
      }
    }
  }

  for (const TerraceStep& s : T.steps)
    if (s.zero_speed) T.zero_speed_flag = true;
  if (T.zero_speed_flag)
    T.notes.push_back("zero-speed flag set: uniqueness cross-checks disabled");

  T.extraction_ok = ok;
  return out;
}

ConvergenceDiagnostics convergence_diagnostics(const Run& run, const Terrace& terrace,
                                               const PlatformReport* platforms,
                                               double gap_slack) {
  ConvergenceDiagnostics diag;
  const double L = terrace.period_L;
  bool any_speed = false;
  for (const TerraceStep& s : terrace.steps)
    if (s.speed) any_speed = true;
  diag.zero_speed_limited = !any_speed;

  if (diag.zero_speed_limited) {
    if (platforms)
      for (const PlatformWindow& w : platforms->windows)
        diag.plateau_growth.push_back(w.width_final - w.width_earlier);
    else
      diag.notes.push_back("zero-speed terrace and no platform report supplied");
    return diag;
  }

  const auto tail_fit = [](DriftSeries& s) {
    const std::size_t n = s.t.size();
    if (n < 4) return;
    const std::size_t start = n / 2;
    double tm = 0.0, vm = 0.0;
    for (std::size_t i = start; i < n; ++i) { tm += s.t[i]; vm += s.value[i]; }
    const double cnt = static_cast<double>(n - start);
    tm /= cnt; vm /= cnt;
    double stt = 0.0, stv = 0.0;
    for (std::size_t i = start; i < n; ++i) {
      stt += (s.t[i] - tm) * (s.t[i] - tm);
      stv += (s.t[i] - tm) * (s.value[i] - vm);
    }
    if (stt > 0.0) s.tail_slope = stv / stt;
    s.net_change = s.value.back() - s.value.front();
  };

  // m_k(t): crossing-time drift along each front's own schedule.
  for (std::size_t k = 0; k < terrace.steps.size(); ++k) {
    DriftSeries m;
    const TerraceStep& step = terrace.steps[k];
    if (step.speed) {
      const LevelProbe& probe = terrace.probes[step.primary_probe];
      const double c = std::abs(step.speed->c);
      const int n_lo = probe.series.n_min;
      const int n_hi = probe.series.n_min + static_cast<int>(probe.series.taus.size()) - 1;
      for (const Profile& snap : run.snapshots) {
        const double j = c * snap.time / L;
        if (j < n_lo || j > n_hi) continue;
        const int j0 = std::min(n_hi - 1, std::max(n_lo, static_cast<int>(j)));
        const double frac = j - j0;
        const double tau =
            (1.0 - frac) * probe.series.taus[static_cast<std::size_t>(j0 - n_lo)] +
            frac * probe.series.taus[static_cast<std::size_t>(j0 - n_lo + 1)];
        m.t.push_back(snap.time);
        m.value.push_back(tau - snap.time);
      }
      if (m.t.size() < 4)
        diag.notes.push_back("step " + std::to_string(k) +
                             ": too few samples for the crossing-time drift");
      tail_fit(m);
    }
    diag.m_of_t.push_back(std::move(m));
  }

  // Inter-front gaps over the second half of the run.
  const double t_half = 0.5 * run.end_time;
  for (std::size_t k = 0; k + 1 < terrace.steps.size(); ++k) {
    DriftSeries gap;
    int violations = 0;
    if (terrace.steps[k].speed && terrace.steps[k + 1].speed) {
      const double a_up = terrace.probes[terrace.steps[k].primary_probe].alpha;
      const double a_lo = terrace.probes[terrace.steps[k + 1].primary_probe].alpha;
      for (const Profile& snap : run.snapshots) {
        if (snap.time < t_half) continue;
        const auto pu = rightmost_level_position(snap, a_up);
        const auto pd = rightmost_level_position(snap, a_lo);
        if (!pu || !pd) continue;
        gap.t.push_back(snap.time);
        gap.value.push_back(*pd - *pu);
      }
      for (std::size_t i = 0; i + 1 < gap.value.size(); ++i)
        if (gap.value[i + 1] < gap.value[i] - gap_slack) ++violations;
      tail_fit(gap);
    }
    diag.front_gaps.push_back(std::move(gap));
    diag.gap_violations.push_back(violations);
  }

  // Moving-frame residual against each extracted wave.
  for (std::size_t k = 0; k < terrace.steps.size(); ++k) {
    DriftSeries res;
    const TerraceStep& step = terrace.steps[k];
    if (!step.waves.empty()) {
      const PulsatingWave& w = step.waves.front();
      const Grid& grid = run.grid;
      const int cells = grid.cells_per_period;
      const int anchor_node =
          (grid.periods_left + w.direction * w.anchor_site) * cells;
      const int win_lo =
          anchor_node + static_cast<int>(std::llround(w.x.front() / grid.dx()));
      std::vector<const Profile*> picks;
      for (const Profile& snap : run.snapshots)
        if (snap.time >= t_half) picks.push_back(&snap);
      const std::size_t stride = std::max<std::size_t>(1, picks.size() / 8);
      for (std::size_t i = 0; i < picks.size(); i += stride) {
        const Profile& snap = *picks[i];
        double worst = 0.0;
        bool any = false;
        for (std::size_t j = 0; j < w.x.size(); ++j) {
          const auto v = wave_value(w, snap.time - w.anchor_tau,
                                    static_cast<std::ptrdiff_t>(j));
          if (!v) continue;
          const int g = win_lo + static_cast<int>(j);
          if (g < 0 || g >= grid.node_count()) continue;
          any = true;
          worst = std::max(worst, std::abs(snap.values[static_cast<std::size_t>(g)] - *v));
        }
        if (any) {
          res.t.push_back(snap.time);
          res.value.push_back(worst);
        }
      }
      tail_fit(res);
    }
    diag.frame_residuals.push_back(std::move(res));
  }

  if (platforms)
    for (const PlatformWindow& w : platforms->windows)
      diag.plateau_growth.push_back(w.width_final - w.width_earlier);
  return diag;
}

MinimalityReport check_minimality(const Terrace& terrace,
                                  const std::vector<EquilibriaLadder>& alternates,
                                  double tol) {
  MinimalityReport report;
  for (std::size_t a = 0; a < alternates.size(); ++a) {
    for (int k : terrace.platform_rungs) {
      const StationarySolution& p = terrace.ladder.rungs[static_cast<std::size_t>(k)];
      bool found = false;
      for (const StationarySolution& q : alternates[a].rungs)
        if (rung_distance(p.values, q.values) <= tol) { found = true; break; }
      if (!found) {
        report.platforms_subset = false;
        std::ostringstream msg;
        msg << "platform with u(0) = " << p.value_at0()
            << " missing from alternate decomposition " << a;
        report.violations.push_back(msg.str());
      }
    }
  }
  report.steepness_ok = terrace.verification.steepness_ok;
  if (!report.steepness_ok)
    report.violations.push_back("a stored steepness certificate failed");
  return report;
}

} // namespace terracelab
