#include "terracelab/steepness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace terracelab {

CrossingReport sign_change_count(const std::vector<double>& u,
                                 const std::vector<double>& v,
                                 const std::vector<double>& x, double tie_tol) {
  const std::size_t n = u.size();
  if (v.size() != n || x.size() != n)
    throw std::invalid_argument("sign_change_count: size mismatch");
  if (n == 0) return {0, {}, true};

  std::vector<signed char> sign(n, 0);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = u[i] - v[i];
    if (d > tie_tol) sign[i] = 1, any = true;
    else if (d < -tie_tol) sign[i] = -1, any = true;
  }
  CrossingReport report;
  if (!any) {
    report.identical = true;
    return report;
  }

  // Tie runs inherit the nearest non-tied sign; a forward fill makes the left
  // neighbor win, and leading ties take the first sign from the right.
  std::vector<signed char> eff = sign;
  signed char carry = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (eff[i] == 0) eff[i] = carry;
    else carry = eff[i];
  }
  for (std::size_t i = 0; i < n && eff[i] == 0; ++i) {
    signed char first = 0;
    for (std::size_t j = i; j < n; ++j)
      if (eff[j] != 0) { first = eff[j]; break; }
    eff[i] = first;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (eff[i] == eff[i + 1]) continue;
    ++report.count;
    // Interpolate between the non-tied nodes bracketing the flip.
    std::size_t jl = i;
    while (sign[jl] == 0 && jl > 0) --jl;
    std::size_t jr = i + 1;
    while (sign[jr] == 0 && jr + 1 < n) ++jr;
    const double dl = u[jl] - v[jl], dr = u[jr] - v[jr];
    const double denom = dl - dr;
    report.positions.push_back(denom != 0.0 ? x[jl] + (x[jr] - x[jl]) * dl / denom
                                            : 0.5 * (x[jl] + x[jr]));
  }
  return report;
}

SampledFamily family_from_run(const Run& run, int max_times) {
  SampledFamily fam;
  const std::size_t n = run.snapshots.size();
  if (n == 0) return fam;
  const Grid& grid = run.grid;
  fam.x.resize(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) fam.x[i] = grid.x(i);
  const std::size_t take = std::min<std::size_t>(max_times, n);
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t idx = take == 1 ? n - 1 : k * (n - 1) / (take - 1);
    fam.times.push_back(run.snapshots[idx].time);
    fam.profiles.push_back(run.snapshots[idx].values);
  }
  return fam;
}

SteepnessResult is_steeper(const SampledFamily& u1, const SampledFamily& u2,
                           double tol, double tie_tol) {
  if (u1.x.size() != u2.x.size())
    throw std::invalid_argument("is_steeper: families live on different grids");
  SteepnessResult result;
  result.steeper = true;

  for (std::size_t a = 0; a < u1.profiles.size(); ++a) {
    for (std::size_t b = 0; b < u2.profiles.size(); ++b) {
      ++result.pairs_checked;
      const auto& p = u1.profiles[a];
      const auto& q = u2.profiles[b];
      const CrossingReport rep = sign_change_count(p, q, u1.x, tie_tol);
      for (double xc : rep.positions) {
        for (std::size_t i = 0; i < p.size(); ++i) {
          const double d = p[i] - q[i];
          const bool bad_left = u1.x[i] <= xc && d < -tol;
          const bool bad_right = u1.x[i] >= xc && d > tol;
          if (bad_left || bad_right) {
            result.steeper = false;
            if (!result.witness) {
              result.witness = SteepnessWitness{u1.times[a], u2.times[b], u1.x[i], xc,
                                                std::abs(d) - tol};
            }
          }
        }
      }
    }
  }
  return result;
}

ZeroNumberReport zero_number_monitor(const Run& run_u, const Run& run_v, double tie_tol) {
  ZeroNumberReport report;
  const std::size_t n = std::min(run_u.snapshots.size(), run_v.snapshots.size());
  if (n == 0) return report;
  std::vector<double> x(run_u.grid.node_count());
  for (int i = 0; i < run_u.grid.node_count(); ++i) x[i] = run_u.grid.x(i);

  for (std::size_t k = 0; k < n; ++k) {
    const Profile& su = run_u.snapshots[k];
    const Profile& sv = run_v.snapshots[k];
    if (std::abs(su.time - sv.time) > 0.5 * run_u.dt)
      throw std::invalid_argument("zero_number_monitor: runs are not synchronized");
    report.times.push_back(su.time);
    report.counts.push_back(sign_change_count(su.values, sv.values, x, tie_tol).count);
  }
  for (std::size_t k = 0; k + 1 < report.counts.size(); ++k)
    if (report.counts[k + 1] > report.counts[k]) report.violation_steps.push_back(k);
  return report;
}

} // namespace terracelab
