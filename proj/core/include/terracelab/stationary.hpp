#pragma once

#include <optional>
#include <string>
#include <vector>

#include "terracelab/model.hpp"

namespace terracelab {

enum class StabilityLabel { Stable, Unstable, Degenerate };

/// Half-width of the eigenvalue band around zero inside which a stationary
/// state is reported as Degenerate rather than stable or unstable.
inline constexpr double kDegeneracyBand = 1e-8;

/// Principal periodic eigenpair of  phi -> d/dx(a dphi/dx) + g phi  on one
/// period, discretized with harmonic-mean face coefficients.
struct EigenResult {
  double mu = 0.0;
  std::vector<double> phi; // strictly positive, max-normalized
  double residual = 0.0;   // max-norm of (M phi - mu phi) at return
  int iterations = 0;
};

/// g_node holds one period of node samples of the weight; its size fixes the
/// resolution. Throws on iteration stagnation; a sign change in the computed
/// eigenfunction is a broken invariant and throws logic_error.
EigenResult principal_eigenvalue(const PeriodicCoefficient& a,
                                 const std::vector<double>& g_node);

/// L-periodic stationary state of the one-period problem, with its
/// linearization's principal eigenvalue and Perron eigenfunction attached.
struct StationarySolution {
  double period_L = 1.0;
  std::vector<double> values; // one period of node values
  double newton_residual = 0.0;
  double mu = 0.0;
  StabilityLabel stability = StabilityLabel::Degenerate;
  std::vector<double> phi;

  double value_at0() const { return values.empty() ? 0.0 : values[0]; }
};

struct NewtonOptions {
  double tol = 1e-10;
  int max_iters = 50;
  double range_lo = -0.1;
  double range_hi = 1.1;
};

enum class NewtonStatus { Converged, MaxIterations, LeftRange, SingularJacobian };

struct NewtonResult {
  NewtonStatus status = NewtonStatus::MaxIterations;
  std::optional<StationarySolution> solution; // set when converged
  double last_residual = 0.0;
  double first_correction = 0.0; // max-norm of the first Newton update
  int iterations = 0;
};

/// Damped-free Newton iteration for the periodic stationary problem
/// d/dx(a du/dx) + f(x, u) = 0 from the given one-period initial guess.
NewtonResult solve_stationary(const PeriodicCoefficient& a, const Nonlinearity& nl,
                              const std::vector<double>& guess,
                              const NewtonOptions& opts = {});

struct LadderOptions {
  int resolution = 33;           // constant seeds strictly between 0 and min top
  std::vector<double> snapshot_times = {10.0, 100.0};
  double dedupe_tol = 1e-6;
  NewtonOptions newton = {};
};

/// Ordered chain of stationary states between 0 and a given top state.
struct EquilibriaLadder {
  std::vector<StationarySolution> rungs; // strictly decreasing, rungs[0] = top
  bool continuum_suspected = false;
  std::vector<std::string> notes;
};

/// Seeds Newton from constant slices and from time-evolved snapshots of those
/// slices, dedupes the converged states, and orders them into a ladder.
/// If nearly every constant seed is already stationary to machine precision
/// the problem has a continuum of equilibria; the ladder is then refused and
/// continuum_suspected is set with only the endpoints kept.
EquilibriaLadder enumerate_equilibria(const PeriodicCoefficient& a,
                                      const Nonlinearity& nl,
                                      const std::vector<double>& top,
                                      const LadderOptions& opts = {});

enum class WitnessStatus { Certified, Failed, NotCertified, Vacuous };

struct RungAssessment {
  double value_at0 = 0.0;
  StabilityLabel stability = StabilityLabel::Degenerate;
  WitnessStatus band_witness = WitnessStatus::Vacuous; // two-sided band at this rung
  double delta = 0.0; // certified band half-width, 0 if none
  double eps = 0.0;   // eigenvalue margin of the witness weight
  std::string detail;
};

/// Certification report for the spectral-gap hypotheses the speed-ordering
/// results rest on. "NotCertified" records that the sampled search failed,
/// which is weaker than "Failed" (witness provably impossible here because
/// the state is linearly unstable where stability is required).
struct AssumptionReport {
  std::vector<RungAssessment> rungs;
  WitnessStatus endpoint_witness = WitnessStatus::NotCertified; // joint band at 0 and top
  bool stable_rungs_certified = false;   // every linearly stable rung has a band witness
  bool endpoints_certified = false;      // joint witness near 0 and top found
  bool any_not_certified = false;
  std::string summary;
};

struct AssumptionOptions {
  double delta_start = 0.05;
  double delta_floor = 1e-4;
  int band_samples = 33;
};

AssumptionReport check_assumptions(const PeriodicCoefficient& a, const Nonlinearity& nl,
                                   const EquilibriaLadder& ladder,
                                   const AssumptionOptions& opts = {});

} // namespace terracelab
