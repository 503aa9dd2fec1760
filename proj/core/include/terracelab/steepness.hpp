#pragma once

#include <optional>
#include <vector>

#include "terracelab/evolve.hpp"
#include "terracelab/model.hpp"

namespace terracelab {

/// Sign changes of u - v along a shared grid after tie collapsing.
struct CrossingReport {
  int count = 0;
  std::vector<double> positions; // interpolated crossing locations
  bool identical = false;        // every node within the tie tolerance
};

inline constexpr double kTieTol = 1e-10;

/// Counts sign alternations of u - v. Nodes with |u - v| <= tie_tol form tie
/// runs that inherit the sign of the nearest non-tied neighbor, left neighbor
/// winning double ties, so a grazing touch never counts as two crossings.
/// Crossing positions interpolate between the bracketing non-tied nodes.
CrossingReport sign_change_count(const std::vector<double>& u,
                                 const std::vector<double>& v,
                                 const std::vector<double>& x,
                                 double tie_tol = kTieTol);

/// Family of profiles sampled at several times on one x grid.
struct SampledFamily {
  std::vector<double> x;
  std::vector<double> times;
  std::vector<std::vector<double>> profiles;
};

/// Evenly thinned snapshot family from a run, at most max_times members.
SampledFamily family_from_run(const Run& run, int max_times = 16);

struct SteepnessWitness {
  double t1 = 0.0, t2 = 0.0;
  double x = 0.0;         // violating location
  double crossing = 0.0;  // crossing the violation refers to
  double violation = 0.0; // how far past the tolerance
};

struct SteepnessResult {
  bool steeper = false;
  int pairs_checked = 0;
  std::optional<SteepnessWitness> witness;
};

/// Time-shift-invariant one-sided comparison: u1 is steeper than u2 when, for
/// every sampled time pair and every crossing of u1(t1,.) - u2(t2,.), u1 lies
/// above u2 left of the crossing and below it to the right, within tol.
/// Profiles with no crossing pass vacuously.
SteepnessResult is_steeper(const SampledFamily& u1, const SampledFamily& u2,
                           double tol = 1e-3, double tie_tol = kTieTol);

/// Crossing-count history of two synchronized runs.
struct ZeroNumberReport {
  std::vector<double> times;
  std::vector<int> counts;
  std::vector<std::size_t> violation_steps; // i with counts[i+1] > counts[i]
  bool nonincreasing() const { return violation_steps.empty(); }
};

/// Counts sign changes between paired snapshots of two runs over the shared
/// time range. With a monotone scheme the count never increases; violations
/// indicate a broken step (and are exactly what the negative control checks).
ZeroNumberReport zero_number_monitor(const Run& run_u, const Run& run_v,
                                     double tie_tol = kTieTol);

} // namespace terracelab
