#include "terracelab/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "terracelab/discrete.hpp"
#include "terracelab/evolve.hpp"

namespace terracelab {

namespace {

StabilityLabel classify_mu(double mu) {
  if (mu < -kDegeneracyBand) return StabilityLabel::Stable;
  if (mu > kDegeneracyBand) return StabilityLabel::Unstable;
  return StabilityLabel::Degenerate;
}

} // namespace

EigenResult principal_eigenvalue(const PeriodicCoefficient& a,
                                 const std::vector<double>& g_node) {
  const int m = static_cast<int>(g_node.size());
  if (m < 16) throw std::invalid_argument("principal_eigenvalue: need at least 16 nodes");
  const double L = a.period();
  const double dx = L / m;
  const double inv = 1.0 / (dx * dx);
  const auto face = harmonic_faces(sample_coefficient(a, m));

  // Shifted inverse iteration on (sigma I - M) with M = A + diag(g).
  // sigma exceeds max(g) >= mu, so the shifted matrix is a nonsingular
  // M-matrix and its inverse maps positive vectors to positive vectors.
  const double sigma = *std::max_element(g_node.begin(), g_node.end()) + 1.0;
  std::vector<double> lower(m), diag(m), upper(m);
  for (int j = 0; j < m; ++j) {
    const double fl = face[(j + m - 1) % m], fr = face[j];
    diag[j] = sigma - g_node[j] + (fl + fr) * inv;
    lower[j] = -fl * inv;
    upper[j] = -fr * inv;
  }
  const double corner = -face[m - 1] * inv;
  const CyclicTridiagSolver solver(std::move(lower), std::move(diag), std::move(upper),
                                   corner, corner);

  double opnorm = 0.0;
  for (int j = 0; j < m; ++j) {
    const double fl = face[(j + m - 1) % m], fr = face[j];
    opnorm = std::max(opnorm, std::abs(g_node[j]) + 2.0 * (fl + fr) * inv);
  }
  const double tol = std::max(1e-10, 2e-15 * opnorm);
  const double tol_fallback = 1e-8; // accept on stagnation, still within contract

  std::vector<double> v(m, 1.0), w(m), mv(m);
  double mu = 0.0;
  double best_res = std::numeric_limits<double>::infinity();
  int since_improvement = 0;
  int iter = 0;
  constexpr int kMaxIters = 20000;
  for (; iter < kMaxIters; ++iter) {
    solver.solve(v, w);
    double wmax = 0.0;
    for (double x : w) wmax = std::max(wmax, std::abs(x));
    if (!(wmax > 0.0) || !std::isfinite(wmax))
      throw std::runtime_error("principal_eigenvalue: iteration collapsed");
    for (double& x : w) x /= wmax;
    v.swap(w);

    // Rayleigh quotient and residual of the unshifted operator.
    apply_periodic_diffusion(face, dx, v, mv);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < m; ++j) {
      mv[j] += g_node[j] * v[j];
      num += v[j] * mv[j];
      den += v[j] * v[j];
    }
    mu = num / den;
    double res = 0.0;
    for (int j = 0; j < m; ++j) res = std::max(res, std::abs(mv[j] - mu * v[j]));
    if (res <= tol) break;
    if (res < 0.5 * best_res) {
      best_res = res;
      since_improvement = 0;
    } else if (++since_improvement > 200) {
      if (res <= tol_fallback) break; // roundoff floor reached, good enough
      throw std::runtime_error("principal_eigenvalue: power iteration stagnated");
    }
  }
  if (iter == kMaxIters)
    throw std::runtime_error("principal_eigenvalue: power iteration stagnated");

  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, x);
  for (double& x : v) x /= vmax;
  for (double x : v)
    if (!(x > 0.0))
      throw std::logic_error("principal_eigenvalue: eigenfunction changed sign");

  EigenResult out;
  out.mu = mu;
  out.phi = std::move(v);
  out.iterations = iter + 1;
  apply_periodic_diffusion(face, dx, out.phi, mv);
  double res = 0.0;
  for (int j = 0; j < m; ++j)
    res = std::max(res, std::abs(mv[j] + g_node[j] * out.phi[j] - mu * out.phi[j]));
  out.residual = res;
  return out;
}

NewtonResult solve_stationary(const PeriodicCoefficient& a, const Nonlinearity& nl,
                              const std::vector<double>& guess,
                              const NewtonOptions& opts) {
  const int m = static_cast<int>(guess.size());
  if (m < 16) throw std::invalid_argument("solve_stationary: need at least 16 nodes");
  const double L = a.period();
  const double dx = L / m;
  const double inv = 1.0 / (dx * dx);
  const auto face = harmonic_faces(sample_coefficient(a, m));
  const auto mod = sample_modulation(nl, m);

  NewtonResult result;
  std::vector<double> q = guess, res(m), delta(m);

  auto residual = [&](const std::vector<double>& u, std::vector<double>& out) {
    apply_periodic_diffusion(face, dx, u, out);
    for (int j = 0; j < m; ++j) out[j] += mod[j] * nl.shape(u[j]);
  };

  auto max_norm = [](const std::vector<double>& v) {
    double r = 0.0;
    for (double x : v) r = std::max(r, std::abs(x));
    return r;
  };

  residual(q, res);
  result.last_residual = max_norm(res);

  for (int it = 0; it < opts.max_iters; ++it) {
    if (result.last_residual <= opts.tol) {
      result.status = NewtonStatus::Converged;
      break;
    }
    std::vector<double> lower(m), diag(m), upper(m);
    for (int j = 0; j < m; ++j) {
      const double fl = face[(j + m - 1) % m], fr = face[j];
      diag[j] = -(fl + fr) * inv + mod[j] * nl.dshape(q[j]);
      lower[j] = fl * inv;
      upper[j] = fr * inv;
    }
    const double corner = face[m - 1] * inv;
    try {
      const CyclicTridiagSolver jac(std::move(lower), std::move(diag), std::move(upper),
                                    corner, corner);
      jac.solve(res, delta);
    } catch (const std::runtime_error&) {
      result.status = NewtonStatus::SingularJacobian;
      return result;
    }
    for (int j = 0; j < m; ++j) q[j] -= delta[j];
    result.iterations = it + 1;
    if (it == 0) result.first_correction = max_norm(delta);

    for (double x : q)
      if (x < opts.range_lo || x > opts.range_hi || !std::isfinite(x)) {
        result.status = NewtonStatus::LeftRange;
        return result;
      }

    residual(q, res);
    result.last_residual = max_norm(res);
  }
  if (result.last_residual <= opts.tol) result.status = NewtonStatus::Converged;

  if (result.status == NewtonStatus::Converged) {
    StationarySolution sol;
    sol.period_L = L;
    sol.values = q;
    sol.newton_residual = result.last_residual;
    std::vector<double> g(m);
    for (int j = 0; j < m; ++j) g[j] = mod[j] * nl.dshape(q[j]);
    const EigenResult eig = principal_eigenvalue(a, g);
    sol.mu = eig.mu;
    sol.phi = eig.phi;
    sol.stability = classify_mu(eig.mu);
    result.solution = std::move(sol);
  }
  return result;
}

namespace {

bool pointwise_below(const std::vector<double>& lo, const std::vector<double>& hi) {
  for (std::size_t j = 0; j < lo.size(); ++j)
    if (!(lo[j] < hi[j])) return false;
  return true;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) r = std::max(r, std::abs(a[j] - b[j]));
  return r;
}

} // namespace

EquilibriaLadder enumerate_equilibria(const PeriodicCoefficient& a,
                                      const Nonlinearity& nl,
                                      const std::vector<double>& top,
                                      const LadderOptions& opts) {
  const int m = static_cast<int>(top.size());
  if (m < 16) throw std::invalid_argument("enumerate_equilibria: need at least 16 nodes");
  const double top_min = *std::min_element(top.begin(), top.end());
  if (!(top_min > 0.0))
    throw std::invalid_argument("enumerate_equilibria: top state must be positive");

  EquilibriaLadder ladder;

  // Constant slices between the trivial state and the top, plus both ends.
  std::vector<std::vector<double>> constant_seeds;
  constant_seeds.emplace_back(m, 0.0);
  for (int k = 1; k <= opts.resolution; ++k)
    constant_seeds.emplace_back(m, top_min * k / (opts.resolution + 1));
  constant_seeds.push_back(top);

  struct SeedOutcome {
    NewtonResult newton;
    bool constant_seed = false;
  };
  std::vector<SeedOutcome> outcomes;

  NewtonOptions nopts = opts.newton;
  nopts.range_hi = std::max(nopts.range_hi, *std::max_element(top.begin(), top.end()) + 0.1);

  for (const auto& seed : constant_seeds)
    outcomes.push_back({solve_stationary(a, nl, seed, nopts), true});

  // Time-evolved snapshots of the same slices catch attracting states the
  // constant seeds miss in heterogeneous media.
  if (!opts.snapshot_times.empty()) {
    const double dx = a.period() / m;
    StepperConfig scfg;
    scfg.boundary = BoundaryMode::Periodic;
    scfg.dt = lipschitz_dt(nl, dx, nopts.range_lo, nopts.range_hi);
    scfg.range_lo = nopts.range_lo;
    scfg.range_hi = nopts.range_hi;
    const Stepper stepper = Stepper::periodic(a, nl, m, scfg);
    double t_max = *std::max_element(opts.snapshot_times.begin(), opts.snapshot_times.end());
    for (const auto& seed : constant_seeds) {
      std::vector<double> u = seed;
      double t = 0.0;
      std::size_t next_time = 0;
      std::vector<double> sorted_times = opts.snapshot_times;
      std::sort(sorted_times.begin(), sorted_times.end());
      while (t < t_max - 1e-12 && next_time < sorted_times.size()) {
        stepper.step_inplace(u);
        t += scfg.dt;
        if (t + 1e-12 >= sorted_times[next_time]) {
          outcomes.push_back({solve_stationary(a, nl, u, nopts), false});
          ++next_time;
        }
      }
    }
  }

  // Continuum screen: when nearly every constant slice is already stationary
  // to machine precision, a one-parameter family of equilibria is present and
  // no finite ladder is meaningful.
  int instant = 0, constant_count = 0;
  std::vector<const StationarySolution*> instant_limits;
  for (const auto& o : outcomes) {
    if (!o.constant_seed) continue;
    ++constant_count;
    if (o.newton.status == NewtonStatus::Converged &&
        o.newton.first_correction < 1e-12 && o.newton.iterations <= 1)
      instant_limits.push_back(&*o.newton.solution);
  }
  instant = static_cast<int>(instant_limits.size());
  if (instant >= static_cast<int>(0.9 * constant_count)) {
    int distinct = 0;
    for (std::size_t i = 0; i < instant_limits.size(); ++i) {
      bool dup = false;
      for (std::size_t j = 0; j < i; ++j)
        if (max_diff(instant_limits[i]->values, instant_limits[j]->values) <
            opts.dedupe_tol)
          dup = true;
      if (!dup) ++distinct;
    }
    if (distinct >= static_cast<int>(0.9 * constant_count)) {
      ladder.continuum_suspected = true;
      ladder.notes.push_back(
          "continuum suspected: nearly every constant slice is stationary; "
          "refusing a finite ladder");
      return ladder;
    }
  }

  // Dedupe converged states and order them into a decreasing chain.
  std::vector<StationarySolution> found;
  for (auto& o : outcomes) {
    if (o.newton.status != NewtonStatus::Converged) continue;
    StationarySolution& sol = *o.newton.solution;
    const double lo = *std::min_element(sol.values.begin(), sol.values.end());
    if (lo < nopts.range_lo) continue;
    bool dup = false;
    for (const auto& f : found)
      if (max_diff(f.values, sol.values) < opts.dedupe_tol) dup = true;
    if (!dup) found.push_back(std::move(sol));
  }

  std::sort(found.begin(), found.end(), [](const auto& x, const auto& y) {
    double mx = 0.0, my = 0.0;
    for (double v : x.values) mx += v;
    for (double v : y.values) my += v;
    return mx > my;
  });

  // Keep a strictly ordered chain; flag and drop anything that crosses.
  for (auto& sol : found) {
    if (ladder.rungs.empty() || pointwise_below(sol.values, ladder.rungs.back().values)) {
      ladder.rungs.push_back(std::move(sol));
    } else {
      ladder.notes.push_back("dropped a stationary state that crosses the chain");
    }
  }

  if (ladder.rungs.empty()) {
    ladder.notes.push_back("no stationary states found");
    return ladder;
  }
  if (max_diff(ladder.rungs.front().values, top) > 1e-6)
    ladder.notes.push_back("top of the chain differs from the given top state");
  double bottom = 0.0;
  for (double v : ladder.rungs.back().values) bottom = std::max(bottom, std::abs(v));
  if (bottom > 1e-10)
    ladder.notes.push_back("bottom of the chain is not the zero state");
  return ladder;
}

AssumptionReport check_assumptions(const PeriodicCoefficient& a, const Nonlinearity& nl,
                                   const EquilibriaLadder& ladder,
                                   const AssumptionOptions& opts) {
  AssumptionReport report;
  if (ladder.continuum_suspected || ladder.rungs.empty()) {
    report.summary = "no ladder to certify";
    report.any_not_certified = true;
    return report;
  }
  const int m = static_cast<int>(ladder.rungs[0].values.size());
  const auto mod = sample_modulation(nl, m);

  // Band witness at one rung: the weight df/du(x, q) + eps dominates df/du on
  // the sampled band of half-width delta, and its principal eigenvalue is
  // mu/2 < 0 because adding a constant shifts the spectrum exactly.
  auto certify_band = [&](const StationarySolution& q, RungAssessment& out) {
    const double eps = -q.mu / 2.0;
    out.eps = eps;
    for (double delta = opts.delta_start; delta >= opts.delta_floor; delta /= 2.0) {
      bool dominated = true;
      for (int j = 0; j < m && dominated; ++j) {
        const double base = nl.dshape(q.values[j]) + eps / mod[j];
        for (int s = 0; s <= opts.band_samples; ++s) {
          const double u = q.values[j] - delta + 2.0 * delta * s / opts.band_samples;
          if (nl.dshape(u) > base) {
            dominated = false;
            break;
          }
        }
      }
      if (dominated) {
        out.band_witness = WitnessStatus::Certified;
        out.delta = delta;
        return;
      }
    }
    out.band_witness = WitnessStatus::NotCertified;
    out.detail = "no dominating weight found above the band floor";
  };

  bool all_stable_certified = true;
  for (const auto& rung : ladder.rungs) {
    RungAssessment ra;
    ra.value_at0 = rung.value_at0();
    ra.stability = rung.stability;
    switch (rung.stability) {
      case StabilityLabel::Stable:
        certify_band(rung, ra);
        if (ra.band_witness != WitnessStatus::Certified) all_stable_certified = false;
        break;
      case StabilityLabel::Unstable:
        ra.band_witness = WitnessStatus::Vacuous;
        ra.detail = "linearly unstable, no stability band required";
        break;
      case StabilityLabel::Degenerate:
        ra.band_witness = WitnessStatus::NotCertified;
        ra.detail = "principal eigenvalue inside the degeneracy band";
        all_stable_certified = false;
        report.any_not_certified = true;
        break;
    }
    if (ra.band_witness == WitnessStatus::NotCertified) report.any_not_certified = true;
    report.rungs.push_back(std::move(ra));
  }
  report.stable_rungs_certified = all_stable_certified;

  // Joint witness near the endpoints: one weight must dominate df/du on both
  // end bands and keep a nonpositive principal eigenvalue.
  const StationarySolution& top = ladder.rungs.front();
  const StationarySolution& bottom = ladder.rungs.back();
  if (top.stability == StabilityLabel::Unstable ||
      bottom.stability == StabilityLabel::Unstable) {
    report.endpoint_witness = WitnessStatus::Failed;
    report.endpoints_certified = false;
  } else if (top.stability == StabilityLabel::Degenerate ||
             bottom.stability == StabilityLabel::Degenerate) {
    report.endpoint_witness = WitnessStatus::NotCertified;
    report.endpoints_certified = false;
    report.any_not_certified = true;
  } else {
    report.endpoint_witness = WitnessStatus::NotCertified;
    for (double delta = opts.delta_start; delta >= opts.delta_floor; delta /= 2.0) {
      std::vector<double> g(m, -std::numeric_limits<double>::infinity());
      for (int j = 0; j < m; ++j) {
        for (int s = 0; s <= opts.band_samples; ++s) {
          const double frac = static_cast<double>(s) / opts.band_samples;
          g[j] = std::max(g[j], mod[j] * nl.dshape(bottom.values[j] + delta * frac));
          g[j] = std::max(g[j], mod[j] * nl.dshape(top.values[j] - delta * frac));
        }
      }
      const EigenResult eig = principal_eigenvalue(a, g);
      if (eig.mu <= 0.0) {
        report.endpoint_witness = WitnessStatus::Certified;
        report.endpoints_certified = true;
        break;
      }
    }
    if (!report.endpoints_certified) report.any_not_certified = true;
  }

  report.summary = report.stable_rungs_certified && report.endpoints_certified
                       ? "stability hypotheses certified"
                       : "stability hypotheses not fully certified";
  return report;
}

} // namespace terracelab
