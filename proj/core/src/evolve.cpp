#include "terracelab/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "terracelab/discrete.hpp"

namespace terracelab {

double lipschitz_dt(const Nonlinearity& nl, double dx, double range_lo, double range_hi) {
  const double lip = nl.lipschitz_bound(range_lo, range_hi);
  const double dt_reaction = lip > 0.0 ? 0.9 / lip : std::numeric_limits<double>::infinity();
  return std::min(dx, dt_reaction);
}

namespace {

void validate_config(const StepperConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt))
    throw std::invalid_argument("StepperConfig: dt must be positive");
  if (!(cfg.theta_scheme >= 0.5) || !(cfg.theta_scheme <= 1.0))
    throw std::invalid_argument("StepperConfig: theta must lie in [0.5, 1]");
  if (cfg.guard_periods < 1)
    throw std::invalid_argument("StepperConfig: guard_periods must be at least 1");
  if (!(cfg.range_lo < 0.0) || !(cfg.range_hi > 0.0))
    throw std::invalid_argument("StepperConfig: invariant range must contain 0");
}

} // namespace

Stepper Stepper::clamped(const Grid& grid, const PeriodicCoefficient& a,
                         const Nonlinearity& nl, const std::vector<double>& p_period,
                         const StepperConfig& cfg) {
  validate_config(cfg);
  if (cfg.boundary != BoundaryMode::Clamped)
    throw std::invalid_argument("Stepper::clamped: config says periodic");
  if (static_cast<int>(p_period.size()) != grid.cells_per_period)
    throw std::invalid_argument("Stepper::clamped: p must hold one period of node values");
  if (std::abs(a.period() - grid.period_L) > 1e-12 ||
      std::abs(nl.period() - grid.period_L) > 1e-12)
    throw std::invalid_argument("Stepper::clamped: period mismatch between grid and medium");

  Stepper s;
  s.cfg_ = cfg;
  s.grid_ = grid;
  s.n_ = grid.node_count();
  s.cells_ = grid.cells_per_period;
  s.dx_ = grid.dx();
  s.p_tiled_ = tile_periodic(grid, p_period);

  const auto mod_table = sample_modulation(nl, s.cells_);
  const auto face_table = harmonic_faces(sample_coefficient(a, s.cells_));
  s.mod_node_.resize(s.n_);
  s.face_.resize(s.n_ - 1);
  for (int i = 0; i < s.n_; ++i) s.mod_node_[i] = mod_table[grid.period_index(i)];
  for (int i = 0; i + 1 < s.n_; ++i) s.face_[i] = face_table[grid.period_index(i)];

  s.validate_and_factor(a, nl);
  return s;
}

Stepper Stepper::periodic(const PeriodicCoefficient& a, const Nonlinearity& nl,
                          int cells_per_period, const StepperConfig& cfg) {
  validate_config(cfg);
  if (cfg.boundary != BoundaryMode::Periodic)
    throw std::invalid_argument("Stepper::periodic: config says clamped");
  if (cells_per_period < 16)
    throw std::invalid_argument("Stepper::periodic: need at least 16 cells per period");
  if (std::abs(a.period() - nl.period()) > 1e-12)
    throw std::invalid_argument("Stepper::periodic: period mismatch");

  Stepper s;
  s.cfg_ = cfg;
  s.n_ = cells_per_period;
  s.cells_ = cells_per_period;
  s.dx_ = nl.period() / cells_per_period;
  s.mod_node_ = sample_modulation(nl, cells_per_period);
  s.face_ = harmonic_faces(sample_coefficient(a, cells_per_period));

  s.validate_and_factor(a, nl);
  return s;
}

void Stepper::validate_and_factor(const PeriodicCoefficient& a, const Nonlinearity& nl) {
  (void)a;
  shape_ = nl.shape_pieces();
  lipschitz_ = nl.lipschitz_bound(cfg_.range_lo, cfg_.range_hi);
  if (!cfg_.skip_stability_validation && cfg_.dt * lipschitz_ > 1.0 + 1e-12)
    throw std::invalid_argument(
        "Stepper: dt violates the reaction monotonicity bound dt * sup|df/du| <= 1");

  const double theta = cfg_.theta_scheme;
  const double r = cfg_.dt / (dx_ * dx_);

  if (theta < 1.0 && !cfg_.skip_stability_validation) {
    double worst = 0.0;
    const std::size_t nf = face_.size();
    for (std::size_t j = 0; j < nf; ++j) {
      const double left = face_[j == 0 ? nf - 1 : j - 1];
      worst = std::max(worst, left + face_[j]);
    }
    if ((1.0 - theta) * r * worst > 1.0 + 1e-12)
      throw std::invalid_argument(
          "Stepper: explicit diffusion share breaks monotonicity; raise theta or shrink dt");
  }

  if (cfg_.boundary == BoundaryMode::Clamped) {
    const int ni = n_ - 2; // interior unknowns
    std::vector<double> lower(ni, 0.0), diag(ni, 0.0), upper(ni, 0.0);
    for (int k = 0; k < ni; ++k) {
      const int i = k + 1;
      diag[k] = 1.0 + theta * r * (face_[i - 1] + face_[i]);
      if (k > 0) lower[k] = -theta * r * face_[i - 1];
      if (k < ni - 1) upper[k] = -theta * r * face_[i];
    }
    interior_ = TridiagSolver(std::move(lower), std::move(diag), std::move(upper));
  } else {
    const int m = n_;
    std::vector<double> lower(m, 0.0), diag(m, 0.0), upper(m, 0.0);
    for (int j = 0; j < m; ++j) {
      const double fl = face_[(j + m - 1) % m], fr = face_[j];
      diag[j] = 1.0 + theta * r * (fl + fr);
      lower[j] = -theta * r * fl;
      upper[j] = -theta * r * fr;
    }
    const double corner = -theta * r * face_[m - 1];
    ring_ = CyclicTridiagSolver(std::move(lower), std::move(diag), std::move(upper),
                                corner, corner);
  }
}

void Stepper::step(const std::vector<double>& u, std::vector<double>& out) const {
  if (static_cast<int>(u.size()) != n_)
    throw std::invalid_argument("Stepper::step: state size mismatch");
  const double dt = cfg_.dt;
  const double theta = cfg_.theta_scheme;
  const double r = dt / (dx_ * dx_);

  work_.resize(n_);
  // Explicit reaction stage. The one-period modulation table keeps the
  // reaction exactly L-periodic across the domain.
  for (int i = 0; i < n_; ++i)
    work_[i] = u[i] + dt * mod_node_[i] * shape_.eval(u[i]);

  if (cfg_.boundary == BoundaryMode::Clamped) {
    work_[0] = p_tiled_[0];
    work_[n_ - 1] = 0.0;
    const int ni = n_ - 2;
    rhs_.resize(ni);
    for (int k = 0; k < ni; ++k) {
      const int i = k + 1;
      double v = work_[i];
      if (theta < 1.0) {
        v += (1.0 - theta) * r *
             (face_[i] * (work_[i + 1] - work_[i]) - face_[i - 1] * (work_[i] - work_[i - 1]));
      }
      rhs_[k] = v;
    }
    rhs_[0] += theta * r * face_[0] * p_tiled_[0];
    // right boundary value is 0, no injection needed
    out.resize(n_);
    interior_.solve(rhs_, scratch_interior_);
    out[0] = p_tiled_[0];
    for (int k = 0; k < ni; ++k) out[k + 1] = scratch_interior_[k];
    out[n_ - 1] = 0.0;
  } else {
    const int m = n_;
    rhs_.resize(m);
    if (theta < 1.0) {
      for (int j = 0; j < m; ++j) {
        const double up = work_[(j + 1) % m], um = work_[(j + m - 1) % m];
        rhs_[j] = work_[j] + (1.0 - theta) * r *
                                 (face_[j] * (up - work_[j]) -
                                  face_[(j + m - 1) % m] * (work_[j] - um));
      }
    } else {
      rhs_ = work_;
    }
    ring_.solve(rhs_, out);
  }
}

void Stepper::step_inplace(std::vector<double>& u) const {
  step(u, step_buffer_);
  u.swap(step_buffer_);
}

std::optional<double> rightmost_level_position(const Profile& u, double level) {
  const int n = static_cast<int>(u.values.size());
  for (int i = n - 1; i > 0; --i) {
    const double a = u.values[i - 1] - level, b = u.values[i] - level;
    if (a == 0.0) return u.grid.x(i - 1);
    if (a * b < 0.0) {
      const double frac = a / (a - b);
      return u.grid.x(i - 1) + frac * u.grid.dx();
    }
    if (b == 0.0) return u.grid.x(i);
  }
  return std::nullopt;
}

CrossingRecorder::CrossingRecorder(std::vector<int> site_nodes, std::vector<double> levels)
    : sites_(std::move(site_nodes)), levels_(std::move(levels)) {
  tau_.assign(sites_.size() * levels_.size(), std::numeric_limits<double>::quiet_NaN());
  pending_ = tau_.size();
}

void CrossingRecorder::observe(const StepContext& ctx) {
  if (pending_ == 0) return;
  const std::size_t ns = sites_.size(), nl = levels_.size();
  for (std::size_t s = 0; s < ns; ++s) {
    const double up = ctx.u_prev[sites_[s]], un = ctx.u_now[sites_[s]];
    for (std::size_t l = 0; l < nl; ++l) {
      double& slot = tau_[l * ns + s];
      if (!std::isnan(slot)) continue;
      const double a = up - levels_[l], b = un - levels_[l];
      if (a == 0.0) {
        slot = ctx.t_prev;
        --pending_;
      } else if (a * b <= 0.0) {
        const double denom = a - b;
        slot = denom != 0.0 ? ctx.t_prev + (ctx.t_now - ctx.t_prev) * (a / denom)
                            : ctx.t_now;
        --pending_;
      }
    }
  }
}

std::optional<double> CrossingRecorder::tau(std::size_t level, std::size_t site) const {
  const double v = tau_.at(level * sites_.size() + site);
  if (std::isnan(v)) return std::nullopt;
  return v;
}

FrameRecorder::FrameRecorder(std::vector<Window> windows) : windows_(std::move(windows)) {
  frames_.resize(windows_.size());
}

void FrameRecorder::observe(const StepContext& ctx) {
  for (std::size_t w = 0; w < windows_.size(); ++w) {
    const Window& win = windows_[w];
    if (ctx.t_now < win.t_begin - 1e-12 || ctx.t_now > win.t_end + 1e-12) continue;
    frames_[w].times.push_back(ctx.t_now);
    frames_[w].values.emplace_back(ctx.u_now.begin() + win.node_lo,
                                   ctx.u_now.begin() + win.node_hi + 1);
  }
}

Run evolve_until(const Stepper& stepper, const Profile& u0, const EvolveOptions& opts) {
  if (stepper.config().boundary != BoundaryMode::Clamped)
    throw std::invalid_argument("evolve_until: drives clamped-grid runs only");
  if (u0.grid != stepper.grid())
    throw std::invalid_argument("evolve_until: datum grid differs from stepper grid");
  if (!(opts.horizon > 0.0))
    throw std::invalid_argument("evolve_until: horizon must be positive");

  const Grid& grid = stepper.grid();
  const double dt = stepper.config().dt;
  const int n = grid.node_count();
  const long nsteps = static_cast<long>(std::ceil(opts.horizon / dt * (1.0 - 1e-12)));
  const long stride =
      std::max<long>(1, static_cast<long>(std::ceil(
                            static_cast<double>(nsteps) / opts.max_snapshots)));

  const std::vector<double>& p = stepper.left_state_tiled();
  const int guard_nodes = stepper.config().guard_periods * grid.cells_per_period;
  const double range_lo = stepper.config().range_lo;
  const double range_hi = stepper.config().range_hi;

  Run run;
  run.grid = grid;
  run.dt = dt;
  run.snapshots.push_back(u0);

  std::vector<double> u = u0.values, next;
  double t = 0.0;

  auto push_snapshot = [&](double at) {
    if (!run.snapshots.empty() && run.snapshots.back().time == at) return;
    run.snapshots.push_back(Profile{grid, at, u});
  };

  for (long k = 1; k <= nsteps; ++k) {
    stepper.step(u, next);
    const double t_now = static_cast<double>(k) * dt;
    const StepContext ctx{t, t_now, u, next};
    if (opts.on_step) opts.on_step(ctx);
    u.swap(next);
    t = t_now;

    if (opts.enforce_range) {
      const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
      if (*lo < range_lo - opts.range_tol || *hi > range_hi + opts.range_tol) {
        run.events.push_back({t, "range_escape", "solution left the invariant range"});
        run.status = RunStatus::AbortedRangeEscape;
        push_snapshot(t);
        break;
      }
    }

    bool guard = false;
    for (int i = 0; i <= guard_nodes && !guard; ++i)
      if (u[i] < 0.5 * p[i]) guard = true;
    for (int i = n - 1 - guard_nodes; i < n && !guard; ++i)
      if (u[i] > 0.5 * p[i]) guard = true;
    if (guard) {
      run.events.push_back({t, "boundary_guard",
                            "half-height level set entered the guarded margin"});
      run.status = RunStatus::TruncatedByGuard;
      push_snapshot(t);
      break;
    }

    if (k % stride == 0 || k == nsteps) push_snapshot(t);
  }

  run.end_time = t;
  run.final_state = Profile{grid, t, u};
  if (run.snapshots.back().time != t) push_snapshot(t);
  return run;
}

} // namespace terracelab
