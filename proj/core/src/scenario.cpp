#include "terracelab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <stdexcept>

#include "report_detail.hpp"
#include "terracelab/pool.hpp"
#include "terracelab/report.hpp"

namespace terracelab {

namespace {

ShapeInterval bistable_block(double lo, double hi, double theta, double amp) {
  ShapeInterval iv;
  iv.lo = lo;
  iv.hi = hi;
  iv.theta = theta;
  iv.amp = amp;
  iv.monostable = false;
  return iv;
}

ShapeInterval monostable_block(double lo, double hi, double rate) {
  ShapeInterval iv;
  iv.lo = lo;
  iv.hi = hi;
  iv.rate = rate;
  iv.monostable = true;
  return iv;
}

SpeedTarget near(double value, double tol = 0.01) {
  SpeedTarget t;
  t.value = value;
  t.tol = tol;
  return t;
}

SpeedTarget within(double lo, double hi, bool ci_strict = false) {
  SpeedTarget t;
  t.window = true;
  t.lo = lo;
  t.hi = hi;
  t.ci_strict = ci_strict;
  return t;
}

void set_numerics(ExtractOptions& o, double horizon, int pl, int pr) {
  o.dx = 0.02;
  o.horizon = horizon;
  o.periods_left = pl;
  o.periods_right = pr;
}

} // namespace

std::vector<std::string> scenario_names() {
  return {"bistable",  "bistable-periodic",    "kpp",
          "mono-bi-ordered", "mono-bi-merged", "tristable",
          "quadristable-ordered", "quadristable-collapse", "flat-f"};
}

Scenario make_scenario(const std::string& name) {
  Scenario s;
  s.name = name;
  if (name == "bistable") {
    s.description = "homogeneous cubic threshold 0.25: a single front at the "
                    "closed-form speed";
    s.nl = make_cubic_bistable(0.25);
    set_numerics(s.options, 100.0, 20, 200);
    s.expect.step_count = 1;
    s.expect.speeds = {near(bistable_interval_speed(bistable_block(0, 1, 0.25, 1)))};
    s.expect.require_verification = true;
  } else if (name == "bistable-periodic") {
    s.description = "cubic threshold 0.25 under a 20% periodic modulation: a "
                    "pulsating front";
    s.nl = make_cubic_bistable(0.25, 1.0, 0.2);
    set_numerics(s.options, 60.0, 15, 45);
    s.expect.step_count = 1;
    s.expect.speeds = {within(0.2, 0.5)};
    s.expect.pulsating_residual_max = 1e-3;
    s.expect.require_level_consistency = true;
    s.expect.require_verification = true;
  } else if (name == "kpp") {
    s.description = "logistic growth: pulled front at the linearization "
                    "speed, approached from below";
    s.nl = make_logistic();
    set_numerics(s.options, 100.0, 20, 220);
    s.expect.step_count = 1;
    s.expect.speeds = {within(1.90, 2.00)};
    s.expect.require_verification = true;
  } else if (name == "mono-bi-ordered") {
    s.description = "monostable below a bistable block with the lower front "
                    "faster: a two-step staircase";
    const ShapeInterval lower = monostable_block(0.0, 0.5, 1.0);
    const ShapeInterval upper = bistable_block(0.5, 1.0, 0.3, 16.0);
    s.nl = make_multistable({lower, upper});
    set_numerics(s.options, 60.0, 15, 140);
    s.expect.step_count = 1 + 1;
    s.expect.interior_platforms = {{0.5, 1e-3}};
    s.expect.speeds = {near(bistable_interval_speed(upper)),
                       within(1.88, 2.02)};
    s.expect.speeds_strictly_increasing = true;
    s.expect.require_verification = true;
  } else if (name == "mono-bi-merged") {
    s.description = "monostable below a faster bistable block: the staircase "
                    "collapses to one front between the two component speeds";
    const ShapeInterval lower = monostable_block(0.0, 0.5, 0.25);
    const ShapeInterval upper = bistable_block(0.5, 1.0, 0.2, 64.0);
    s.nl = make_multistable({lower, upper});
    set_numerics(s.options, 60.0, 15, 125);
    s.expect.step_count = 1;
    s.expect.speeds = {within(monostable_interval_speed(lower),
                              bistable_interval_speed(upper), true)};
    s.expect.require_verification = true;
  } else if (name == "tristable") {
    s.description = "two bistable blocks with the upper front faster: fronts "
                    "merge into a single one with an intermediate speed";
    const ShapeInterval lower = bistable_block(0.0, 0.5, 0.35, 16.0);
    const ShapeInterval upper = bistable_block(0.5, 1.0, 0.25, 64.0);
    s.nl = make_multistable({lower, upper});
    set_numerics(s.options, 60.0, 15, 110);
    s.expect.step_count = 1;
    s.expect.speeds = {within(bistable_interval_speed(lower),
                              bistable_interval_speed(upper), true)};
    s.expect.require_verification = true;
  } else if (name == "quadristable-ordered") {
    s.description = "three stacked bistable blocks with speeds increasing "
                    "downward: a three-step staircase";
    const ShapeInterval bottom = bistable_block(0.0, 1.0 / 3.0, 0.2, 16.0);
    const ShapeInterval middle =
        bistable_block(1.0 / 3.0, 2.0 / 3.0, 0.35, 16.0);
    const ShapeInterval top = bistable_block(2.0 / 3.0, 1.0, 0.45, 16.0);
    s.nl = make_multistable({bottom, middle, top});
    set_numerics(s.options, 150.0, 20, 105);
    s.expect.step_count = 3;
    s.expect.interior_platforms = {{2.0 / 3.0, 1e-3}, {1.0 / 3.0, 1e-3}};
    s.expect.speeds = {near(bistable_interval_speed(top)),
                       near(bistable_interval_speed(middle)),
                       near(bistable_interval_speed(bottom))};
    s.expect.speeds_strictly_increasing = true;
    s.expect.require_verification = true;
  } else if (name == "quadristable-collapse") {
    s.description = "three stacked bistable blocks with speeds increasing "
                    "upward: the cascade collapses to a single front";
    const ShapeInterval bottom = bistable_block(0.0, 1.0 / 3.0, 0.45, 16.0);
    const ShapeInterval middle =
        bistable_block(1.0 / 3.0, 2.0 / 3.0, 0.35, 16.0);
    const ShapeInterval top = bistable_block(2.0 / 3.0, 1.0, 0.2, 16.0);
    s.nl = make_multistable({bottom, middle, top});
    set_numerics(s.options, 150.0, 20, 105);
    s.expect.step_count = 1;
    s.expect.speeds = {within(bistable_interval_speed(bottom),
                              bistable_interval_speed(top), true)};
    s.expect.require_verification = true;
  } else if (name == "flat-f") {
    s.description = "vanishing reaction: every constant is stationary, no "
                    "terrace exists";
    PiecewiseShape flat;
    flat.pieces = {Poly{{0.0}}};
    s.nl = Nonlinearity(flat, TrigSeries::constant(1.0), "flat");
    set_numerics(s.options, 10.0, 8, 8);
    s.expect.expect_continuum = true;
  } else {
    throw std::invalid_argument("unknown scenario: " + name);
  }
  return s;
}

namespace {

void add_check(ScenarioOutcome& out, const std::string& name, bool passed,
               const std::string& expected, const std::string& actual) {
  out.checks.push_back({name, passed, expected, actual});
}

std::string fd(double v) { return format_double(v); }

void evaluate_expectations(const Scenario& s, ScenarioOutcome& out) {
  const Terrace& T = out.extraction.terrace;
  const ScenarioExpectation& e = s.expect;

  if (e.expect_continuum) {
    add_check(out, "continuum-suspected", T.ladder.continuum_suspected, "true",
              T.ladder.continuum_suspected ? "true" : "false");
    add_check(out, "no-terrace", T.steps.empty() && !T.extraction_ok,
              "no steps, extraction declined",
              std::to_string(T.steps.size()) + " steps, extraction_ok=" +
                  (T.extraction_ok ? "true" : "false"));
    return;
  }

  add_check(out, "extraction-ok", T.extraction_ok, "true",
            T.extraction_ok ? "true" : "false");

  if (e.step_count >= 0)
    add_check(out, "step-count",
              static_cast<int>(T.steps.size()) == e.step_count,
              std::to_string(e.step_count), std::to_string(T.steps.size()));

  std::vector<double> interior;
  for (std::size_t k = 1; k + 1 < T.platform_rungs.size(); ++k)
    interior.push_back(
        T.ladder.rungs[static_cast<std::size_t>(T.platform_rungs[k])].value_at0());
  if (!e.interior_platforms.empty() || e.step_count >= 0) {
    std::string actual = "{";
    for (double v : interior) actual += fd(v) + ",";
    actual += "}";
    bool ok = interior.size() == e.interior_platforms.size();
    std::string expected = "{";
    for (const auto& [v, tol] : e.interior_platforms) expected += fd(v) + ",";
    expected += "}";
    if (ok)
      for (std::size_t i = 0; i < interior.size(); ++i)
        if (std::abs(interior[i] - e.interior_platforms[i].first) >
            e.interior_platforms[i].second)
          ok = false;
    add_check(out, "interior-platforms", ok, expected, actual);
  }

  for (std::size_t k = 0; k < e.speeds.size(); ++k) {
    const std::string label = "speed-step-" + std::to_string(k);
    if (k >= T.steps.size()) {
      add_check(out, label, false, "a measured speed", "missing step");
      continue;
    }
    const SpeedTarget& t = e.speeds[k];
    if (!T.steps[k].speed) {
      add_check(out, label, false,
                t.window ? "in [" + fd(t.lo) + ", " + fd(t.hi) + "]"
                         : fd(t.value) + " +/- " + fd(t.tol),
                "no resolved speed");
      continue;
    }
    const SpeedEstimate& est = *T.steps[k].speed;
    bool ok;
    std::string expected;
    if (t.window) {
      const double pad = t.ci_strict ? est.ci : 0.0;
      ok = est.c - pad > t.lo && est.c + pad < t.hi;
      expected = std::string(t.ci_strict ? "strictly " : "") + "in [" +
                 fd(t.lo) + ", " + fd(t.hi) + "]";
    } else {
      ok = std::abs(est.c - t.value) <= t.tol;
      expected = fd(t.value) + " +/- " + fd(t.tol);
    }
    add_check(out, label, ok, expected, fd(est.c) + " (ci " + fd(est.ci) + ")");
  }

  if (e.speeds_strictly_increasing) {
    bool ok = true;
    std::string actual = "{";
    for (std::size_t k = 0; k < T.steps.size(); ++k) {
      if (!T.steps[k].speed) {
        ok = false;
        continue;
      }
      actual += fd(T.steps[k].speed->c) + ",";
      if (k > 0 && T.steps[k - 1].speed) {
        const SpeedEstimate& a = *T.steps[k - 1].speed;
        const SpeedEstimate& b = *T.steps[k].speed;
        if (!(b.c > a.c + a.ci + b.ci)) ok = false;
      }
    }
    actual += "}";
    add_check(out, "speeds-strictly-increasing", ok,
              "each speed above the previous beyond combined intervals", actual);
  }

  if (e.pulsating_residual_max > 0.0) {
    double worst = 0.0;
    bool any = false;
    for (const TerraceStep& st : T.steps)
      for (const PulsatingWave& w : st.waves) {
        any = true;
        worst = std::max(worst, w.pulsating_residual);
      }
    add_check(out, "pulsating-residual", any && worst <= e.pulsating_residual_max,
              "<= " + fd(e.pulsating_residual_max),
              any ? fd(worst) : "no waves");
  }

  if (e.require_level_consistency) {
    bool ok = !T.steps.empty();
    for (const TerraceStep& st : T.steps)
      if (!st.level_consistent) ok = false;
    add_check(out, "probe-level-consistency", ok,
              "speed independent of the probe level", ok ? "consistent"
                                                         : "inconsistent");
  }

  if (e.require_verification) {
    const TerraceVerification& V = T.verification;
    const bool ok = V.platforms_ordered && V.speeds_ordered && V.waves_accepted &&
                    V.steepness_ok;
    std::string actual;
    actual += V.platforms_ordered ? "" : "platforms unordered; ";
    actual += V.speeds_ordered ? "" : "speeds unordered; ";
    actual += V.waves_accepted ? "" : "waves rejected; ";
    actual += V.steepness_ok ? "" : "steepness failed; ";
    if (actual.empty()) actual = "all gates hold";
    add_check(out, "verification-gates", ok,
              "platforms ordered, speeds ordered, waves accepted, steepness",
              actual);
  }
}

} // namespace

ScenarioOutcome run_scenario(const std::string& name, int threads) {
  Scenario s = make_scenario(name);
  s.options.threads = std::max(1, threads);
  ScenarioOutcome out;
  out.name = name;
  out.extraction = extract_terrace(s.a, s.nl, s.top, s.options);
  if (!s.expect.expect_continuum &&
      !out.extraction.survey.snapshots.empty())
    out.diagnostics = convergence_diagnostics(
        out.extraction.survey, out.extraction.terrace,
        &out.extraction.platform_report);
  evaluate_expectations(s, out);
  out.passed = std::all_of(out.checks.begin(), out.checks.end(),
                           [](const ExpectationCheck& c) { return c.passed; });
  return out;
}

std::string scenario_report(const ScenarioOutcome& outcome) {
  detail::ojson j;
  j["scenario"] = outcome.name;
  j["passed"] = outcome.passed;
  detail::ojson checks = detail::ojson::array();
  detail::ojson diff = detail::ojson::array();
  for (const ExpectationCheck& c : outcome.checks) {
    detail::ojson cj;
    cj["name"] = c.name;
    cj["passed"] = c.passed;
    cj["expected"] = c.expected;
    cj["actual"] = c.actual;
    checks.push_back(cj);
    if (!c.passed) diff.push_back(cj);
  }
  j["checks"] = checks;
  j["expectation_diff"] = diff;
  j["terrace"] = detail::terrace_json(outcome.extraction.terrace);
  j["diagnostics"] = detail::diagnostics_json(outcome.diagnostics);
  return detail::dump(j);
}

void write_scenario_bundle(const ScenarioOutcome& outcome,
                           const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string prefix = out_dir + "/" + outcome.name;
  write_text_file(prefix + "-report.json", scenario_report(outcome));

  const Run& survey = outcome.extraction.survey;
  if (!survey.final_state.values.empty())
    write_profile_csv(prefix + "-final.csv", survey.final_state);

  const Terrace& T = outcome.extraction.terrace;
  for (std::size_t k = 0; k < T.steps.size(); ++k) {
    const TerraceStep& step = T.steps[k];
    if (step.speed)
      write_crossing_csv(prefix + "-tau-step" + std::to_string(k) + ".csv",
                         T.probes[step.primary_probe].series);
    if (!step.waves.empty())
      write_profile_csv(prefix + "-wave-step" + std::to_string(k) + ".csv",
                        step.waves.front().x, step.waves.front().frames.front());
  }
}

// --- batch verification ------------------------------------------------------

VerifyConfig verify_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config must be an object");
  VerifyConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "seed")
      cfg.seed = value.get<std::uint64_t>();
    else if (key == "threads")
      cfg.threads = value.get<int>();
    else if (key == "pairs_per_preset")
      cfg.pairs_per_preset = value.get<int>();
    else if (key == "crossing_pairs_per_preset")
      cfg.crossing_pairs_per_preset = value.get<int>();
    else if (key == "comparison_tol")
      cfg.comparison_tol = value.get<double>();
    else if (key == "presets")
      cfg.presets = value.get<std::vector<std::string>>();
    else if (key == "include_refinement")
      cfg.include_refinement = value.get<bool>();
    else if (key == "include_negative_controls")
      cfg.include_negative_controls = value.get<bool>();
    else
      throw std::invalid_argument("unknown config key: " + key);
  }
  if (cfg.threads < 1 || cfg.pairs_per_preset < 1 ||
      cfg.crossing_pairs_per_preset < 0 || cfg.comparison_tol <= 0.0)
    throw std::invalid_argument("config values out of range");
  return cfg;
}

namespace {

/// Random one-period node field: a low-order trigonometric sum clipped into
/// (0, 1). Any node data is admissible for the comparison principle; the
/// construction just keeps states within the admitted range.
std::vector<double> random_field(std::mt19937_64& rng, int cells) {
  std::uniform_real_distribution<double> amp(-0.4, 0.4);
  std::vector<double> u(static_cast<std::size_t>(cells), 0.5);
  for (int k = 1; k <= 3; ++k) {
    const double a = amp(rng) / k;
    const double b = amp(rng) / k;
    for (int i = 0; i < cells; ++i) {
      const double x = 2.0 * 3.14159265358979323846 * k * i / cells;
      u[static_cast<std::size_t>(i)] += a * std::sin(x) + b * std::cos(x);
    }
  }
  for (double& v : u) v = std::min(0.98, std::max(0.02, v));
  return u;
}

struct SuiteAccumulator {
  int checks = 0;
  std::vector<SuiteFailure> failures;
  std::string summary;
};

void merge(VerifyReport& report, const std::string& suite, SuiteAccumulator acc) {
  report.checks_run += acc.checks;
  for (SuiteFailure& f : acc.failures) report.failures.push_back(std::move(f));
  report.suites.emplace_back(suite, std::move(acc.summary));
}

} // namespace

VerifyReport verify_all(const VerifyConfig& cfg) {
  VerifyReport report;
  const std::vector<std::string> presets =
      cfg.presets.empty() ? scenario_names() : cfg.presets;
  const int threads = std::max(1, cfg.threads);

  // --- comparison-principle fuzz ----------------------------------------
  {
    struct PresetResult {
      int checks = 0;
      double worst = 1.0; // most negative min(v - u) seen
      std::vector<SuiteFailure> failures;
    };
    std::vector<PresetResult> results(presets.size());
    parallel_for(presets.size(), threads, [&](std::size_t pi) {
      PresetResult& r = results[pi];
      const Scenario sc = make_scenario(presets[pi]);
      const double L = sc.nl.period();
      const int cells = 32;
      StepperConfig scfg;
      scfg.dt = lipschitz_dt(sc.nl, L / cells);
      const Stepper st = Stepper::periodic(sc.a, sc.nl, cells, scfg);
      const int steps =
          static_cast<int>(std::ceil(sc.options.horizon / scfg.dt));
      std::mt19937_64 rng(cfg.seed * 1000003ULL + 17ULL * pi + 1ULL);
      for (int pair = 0; pair < cfg.pairs_per_preset; ++pair) {
        const std::vector<double> f = random_field(rng, cells);
        const std::vector<double> g = random_field(rng, cells);
        std::vector<double> u(f.size()), v(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) {
          u[i] = std::min(f[i], g[i]);
          v[i] = std::max(f[i], g[i]);
        }
        ++r.checks;
        bool violated = false;
        for (int n = 0; n < steps && !violated; ++n) {
          st.step_inplace(u);
          st.step_inplace(v);
          double margin = 1.0;
          for (std::size_t i = 0; i < u.size(); ++i)
            margin = std::min(margin, v[i] - u[i]);
          r.worst = std::min(r.worst, margin);
          if (margin < -cfg.comparison_tol) {
            violated = true;
            std::ostringstream w;
            w << "preset=" << presets[pi] << " pair=" << pair
              << " t=" << (n + 1) * scfg.dt << " min(v-u)=" << margin;
            r.failures.push_back({"comparison-principle",
                                  "ordered data stay ordered", w.str()});
          }
        }
      }
    });
    SuiteAccumulator acc;
    double worst = 1.0;
    for (const auto& r : results) {
      acc.checks += r.checks;
      worst = std::min(worst, r.worst);
      for (const SuiteFailure& f : r.failures) acc.failures.push_back(f);
    }
    std::ostringstream s;
    s << presets.size() << " presets x " << cfg.pairs_per_preset
      << " ordered pairs, full horizon each; worst margin " << worst;
    acc.summary = s.str();
    merge(report, "comparison-principle", std::move(acc));
  }

  // --- sign-change monitors ----------------------------------------------
  if (cfg.crossing_pairs_per_preset > 0) {
    struct PresetResult {
      int checks = 0;
      std::vector<SuiteFailure> failures;
    };
    std::vector<PresetResult> results(presets.size());
    parallel_for(presets.size(), threads, [&](std::size_t pi) {
      PresetResult& r = results[pi];
      const Scenario sc = make_scenario(presets[pi]);
      const double L = sc.nl.period();
      const int cells = 32;
      const Grid grid(L, cells, 2, 2);
      StepperConfig scfg;
      scfg.dt = lipschitz_dt(sc.nl, grid.dx());
      const std::vector<double> p(static_cast<std::size_t>(cells), 1.0);
      const Stepper st = Stepper::clamped(grid, sc.a, sc.nl, p, scfg);
      std::mt19937_64 rng(cfg.seed * 1000003ULL + 31ULL * pi + 2ULL);
      EvolveOptions eopts;
      eopts.horizon = std::min(20.0, sc.options.horizon);
      eopts.max_snapshots = 40;
      for (int pair = 0; pair < cfg.crossing_pairs_per_preset; ++pair) {
        ++r.checks;
        Profile u0{grid, 0.0, tile_periodic(grid, random_field(rng, cells))};
        Profile v0{grid, 0.0, tile_periodic(grid, random_field(rng, cells))};
        const Run ru = evolve_until(st, u0, eopts);
        const Run rv = evolve_until(st, v0, eopts);
        const ZeroNumberReport zn = zero_number_monitor(ru, rv);
        if (!zn.nonincreasing()) {
          std::ostringstream w;
          w << "preset=" << presets[pi] << " pair=" << pair
            << " first increase at step " << zn.violation_steps.front();
          r.failures.push_back(
              {"zero-number", "sign changes never increase", w.str()});
        }
      }
    });
    SuiteAccumulator acc;
    for (const auto& r : results) {
      acc.checks += r.checks;
      for (const SuiteFailure& f : r.failures) acc.failures.push_back(f);
    }
    std::ostringstream s;
    s << presets.size() << " presets x " << cfg.crossing_pairs_per_preset
      << " crossing pairs monitored";
    acc.summary = s.str();
    merge(report, "zero-number", std::move(acc));
  }

  // --- negative controls --------------------------------------------------
  if (cfg.include_negative_controls) {
    SuiteAccumulator acc;

    // An over-long reaction step must be rejected at construction.
    {
      ++acc.checks;
      const Nonlinearity nl = make_cubic_bistable(0.25);
      bool threw = false;
      try {
        StepperConfig bad;
        bad.dt = 1.5 / nl.lipschitz_bound(-0.1, 1.1);
        (void)Stepper::periodic(PeriodicCoefficient::constant(1.0), nl, 32, bad);
      } catch (const std::invalid_argument&) {
        threw = true;
      }
      if (!threw)
        acc.failures.push_back({"negative-controls",
                                "stability guard rejects dt beyond the bound",
                                "construction succeeded"});
    }

    // With the guard skipped, the non-monotone update must create sign
    // changes that the monitor then catches.
    {
      ++acc.checks;
      const Nonlinearity nl =
          make_multistable({bistable_block(0.0, 1.0, 0.25, 16.0)});
      const Grid grid(1.0, 32, 2, 2);
      StepperConfig bad;
      bad.dt = 3.5 / nl.lipschitz_bound(-0.1, 1.1);
      bad.skip_stability_validation = true;
      bad.range_lo = -3.0;
      bad.range_hi = 4.0;
      const std::vector<double> p(32, 1.0);
      const Stepper st =
          Stepper::clamped(grid, PeriodicCoefficient::constant(1.0), nl, p, bad);
      std::vector<double> pu(32), pv(32);
      for (int i = 0; i < 32; ++i) {
        const double x = static_cast<double>(i) / 32.0;
        pu[static_cast<std::size_t>(i)] =
            0.5 + 0.45 * std::sin(2.0 * 3.14159265358979323846 * x);
        pv[static_cast<std::size_t>(i)] =
            0.5 + 0.45 * std::cos(2.0 * 3.14159265358979323846 * x);
      }
      EvolveOptions eopts;
      eopts.horizon = 12.0;
      eopts.max_snapshots = 40;
      eopts.enforce_range = false;
      const Run ru = evolve_until(st, {grid, 0.0, tile_periodic(grid, pu)}, eopts);
      const Run rv = evolve_until(st, {grid, 0.0, tile_periodic(grid, pv)}, eopts);
      const ZeroNumberReport zn = zero_number_monitor(ru, rv);
      if (zn.nonincreasing())
        acc.failures.push_back({"negative-controls",
                                "broken time step must trip the monitor",
                                "no sign-change increase detected"});
    }

    acc.summary = "stability-guard rejection and broken-dt monitor trip";
    merge(report, "negative-controls", std::move(acc));
  }

  // --- eigenvalue oracles --------------------------------------------------
  {
    SuiteAccumulator acc;
    const PeriodicCoefficient a13 = PeriodicCoefficient::constant(1.3);
    for (double g0 : {0.7, -0.4}) {
      ++acc.checks;
      const EigenResult res =
          principal_eigenvalue(a13, std::vector<double>(64, g0));
      const double err = std::abs(res.mu - g0);
      const bool positive =
          *std::min_element(res.phi.begin(), res.phi.end()) > 0.0;
      if (err > 1e-12 || !positive) {
        std::ostringstream w;
        w << "constant weight " << g0 << ": |mu - g| = " << err
          << (positive ? "" : ", eigenfunction not positive");
        acc.failures.push_back(
            {"eigen-oracles", "constant case is exact", w.str()});
      }
    }
    {
      ++acc.checks;
      const PeriodicCoefficient a1 = PeriodicCoefficient::constant(1.0);
      const auto sample = [](int n) {
        std::vector<double> g(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
          g[static_cast<std::size_t>(i)] =
              0.5 + 0.8 * std::sin(2.0 * 3.14159265358979323846 * i / n);
        return g;
      };
      const EigenResult coarse = principal_eigenvalue(a1, sample(128));
      const EigenResult fine = principal_eigenvalue(a1, sample(512));
      const double drift = std::abs(coarse.mu - fine.mu);
      const bool positive =
          *std::min_element(coarse.phi.begin(), coarse.phi.end()) > 0.0 &&
          *std::min_element(fine.phi.begin(), fine.phi.end()) > 0.0;
      if (drift > 5e-3 || !positive) {
        std::ostringstream w;
        w << "sinusoidal weight: |mu_128 - mu_512| = " << drift
          << (positive ? "" : ", eigenfunction not positive");
        acc.failures.push_back(
            {"eigen-oracles", "refinement stays within band", w.str()});
      }
    }
    acc.summary = "constant exactness and sinusoidal refinement";
    merge(report, "eigen-oracles", std::move(acc));
  }

  // --- speed oracles --------------------------------------------------------
  {
    SuiteAccumulator acc;
    const auto measure = [](const Nonlinearity& nl, double dx, int pl, int pr,
                            double horizon,
                            double level) -> std::optional<SpeedEstimate> {
      const PeriodicCoefficient a = PeriodicCoefficient::constant(1.0);
      const int cells = static_cast<int>(std::lround(1.0 / dx));
      const Grid grid(1.0, cells, pl, pr);
      StepperConfig scfg;
      scfg.dt = lipschitz_dt(nl, grid.dx());
      const std::vector<double> p(static_cast<std::size_t>(cells), 1.0);
      const Stepper st = Stepper::clamped(grid, a, nl, p, scfg);
      const MonitorLayout layout = make_monitor_layout(grid, 5);
      CrossingRecorder rec(layout.site_nodes, {level});
      EvolveOptions eopts;
      eopts.horizon = horizon;
      eopts.max_snapshots = 2;
      eopts.on_step = [&rec](const StepContext& ctx) { rec.observe(ctx); };
      evolve_until(st, make_heaviside(grid, p, 0.0), eopts);
      const CrossingSeries series =
          series_from_recorder(rec, layout, 0, +1, 1.0);
      if (series.taus.size() < static_cast<std::size_t>(kMinSeriesSites))
        return std::nullopt;
      if (classify_gaps(series).behavior != GapBehavior::Converging)
        return std::nullopt;
      return estimate_speed(series);
    };

    const double c_bistable =
        bistable_interval_speed(bistable_block(0, 1, 0.25, 1));
    const std::optional<SpeedEstimate> coarse =
        measure(make_cubic_bistable(0.25), 0.05, 14, 30, 40.0, 0.5);
    {
      ++acc.checks;
      if (!coarse || std::abs(coarse->c - c_bistable) > 0.015) {
        std::ostringstream w;
        w << "bistable theta=0.25: expected " << c_bistable << ", measured "
          << (coarse ? format_double(coarse->c) : std::string("nothing"));
        acc.failures.push_back(
            {"speed-oracles", "cubic front speed matches closed form", w.str()});
      }
    }
    {
      ++acc.checks;
      const std::optional<SpeedEstimate> kpp =
          measure(make_logistic(), 0.05, 8, 95, 40.0, 0.5);
      if (!kpp || kpp->c < 1.85 || kpp->c > 2.02) {
        std::ostringstream w;
        w << "logistic: expected within [1.85, 2.02], measured "
          << (kpp ? format_double(kpp->c) : std::string("nothing"));
        acc.failures.push_back({"speed-oracles",
                                "pulled front speed near the linearization value",
                                w.str()});
      }
    }
    if (cfg.include_refinement) {
      ++acc.checks;
      const std::optional<SpeedEstimate> fine =
          measure(make_cubic_bistable(0.25), 0.0125, 14, 30, 40.0, 0.5);
      if (!coarse || !fine ||
          std::abs(coarse->c - fine->c) > coarse->ci + fine->ci + 5e-3) {
        std::ostringstream w;
        w << "bistable dx 0.05 vs 0.0125: "
          << (coarse ? format_double(coarse->c) : std::string("none")) << " vs "
          << (fine ? format_double(fine->c) : std::string("none"));
        acc.failures.push_back(
            {"speed-oracles", "estimate stable under 4x refinement", w.str()});
      }
    }
    acc.summary = "closed-form cubic, pulled-front window, grid refinement";
    merge(report, "speed-oracles", std::move(acc));
  }

  report.passed = report.failures.empty();
  return report;
}

std::string verify_report_json(const VerifyReport& report) {
  detail::ojson j;
  j["passed"] = report.passed;
  j["checks_run"] = report.checks_run;
  detail::ojson suites = detail::ojson::array();
  for (const auto& [name, summary] : report.suites) {
    detail::ojson sj;
    sj["suite"] = name;
    sj["summary"] = summary;
    suites.push_back(sj);
  }
  j["suites"] = suites;
  detail::ojson failures = detail::ojson::array();
  for (const SuiteFailure& f : report.failures) {
    detail::ojson fj;
    fj["suite"] = f.suite;
    fj["invariant"] = f.invariant;
    fj["witness"] = f.witness;
    failures.push_back(fj);
  }
  j["failures"] = failures;
  return detail::dump(j);
}

} // namespace terracelab
