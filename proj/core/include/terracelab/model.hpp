#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace terracelab {

/// Truncated trigonometric series g(x) = mean + sum_k (c_k cos + s_k sin)(2 pi k x / L).
/// Evaluation reduces x into [0, L) first, so g(x + mL) == g(x) bit for bit
/// whenever x + mL is exactly representable.
struct TrigSeries {
  double period_L = 1.0;
  double mean = 0.0;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;

  double eval(double x) const;
  double wrap(double x) const; // reduce into [0, period_L)
  bool is_constant() const { return cos_coeffs.empty() && sin_coeffs.empty(); }

  static TrigSeries constant(double value, double period_L = 1.0);
};

/// Strictly positive L-periodic diffusion coefficient a(x).
/// Positivity is certified on a dense sample at construction.
class PeriodicCoefficient {
public:
  explicit PeriodicCoefficient(TrigSeries series);

  double period() const { return series_.period_L; }
  double eval(double x) const { return series_.eval(x); }
  double min_value() const { return min_value_; }
  double max_value() const { return max_value_; }
  const TrigSeries& series() const { return series_; }

  static PeriodicCoefficient constant(double value, double period_L = 1.0);

private:
  TrigSeries series_;
  double min_value_ = 0.0, max_value_ = 0.0;
};

/// Polynomial in u with ascending coefficients.
struct Poly {
  std::vector<double> coeffs;

  double eval(double u) const;
  double deriv(double u) const;
};

/// Piecewise polynomial shape F(u) in the state variable. Interior knots are
/// smoothed with a C1 cubic blend of half-width blend_w so F and dF stay
/// continuous; outside the outermost knots the terminal pieces extend as-is.
struct PiecewiseShape {
  std::vector<double> knots;  // interior piece boundaries, strictly increasing
  std::vector<Poly> pieces;   // pieces.size() == knots.size() + 1
  double blend_w = 1e-3;

  double eval(double u) const;
  double deriv(double u) const;
};

/// Reaction term f(x, u) = F(u) * M(x) with F a piecewise polynomial that
/// vanishes at u = 0 and M a strictly positive L-periodic modulation.
class Nonlinearity {
public:
  Nonlinearity(PiecewiseShape shape, TrigSeries modulation, std::string kind_tag,
               std::optional<double> lipschitz_bound_hint = std::nullopt);

  double f(double x, double u) const { return shape_.eval(u) * modulation_.eval(x); }
  double df_du(double x, double u) const { return shape_.deriv(u) * modulation_.eval(x); }

  double shape(double u) const { return shape_.eval(u); }
  double dshape(double u) const { return shape_.deriv(u); }
  double modulation(double x) const { return modulation_.eval(x); }

  double period() const { return modulation_.period_L; }
  const std::string& kind_tag() const { return kind_tag_; }
  const PiecewiseShape& shape_pieces() const { return shape_; }
  const TrigSeries& modulation_series() const { return modulation_; }
  std::optional<double> lipschitz_bound_hint() const { return lipschitz_hint_; }

  /// sup |df_du| over one period and u in [umin, umax], sampled densely.
  /// Used by the stepper to enforce its reaction time step restriction.
  double lipschitz_bound(double umin, double umax) const;

private:
  PiecewiseShape shape_;
  TrigSeries modulation_;
  std::string kind_tag_;
  std::optional<double> lipschitz_hint_;
};

/// One sub-interval of a stacked multistable reaction shape.
/// type "bistable":  amp * (u - lo) * (hi - u) * (u - T), T = lo + theta*(hi - lo)
/// type "monostable": rate * (u - lo) * (hi - u) / (hi - lo), unstable at lo
struct ShapeInterval {
  double lo = 0.0;
  double hi = 1.0;
  double theta = 0.5;    // relative threshold, bistable only
  double amp = 1.0;      // bistable amplitude
  double rate = 1.0;     // monostable growth rate at lo
  bool monostable = false;
};

/// Closed-form front speed of a single bistable interval with a == 1:
/// c = sqrt(amp) * (hi - lo) * (1 - 2 theta) / sqrt(2).
double bistable_interval_speed(const ShapeInterval& iv);

/// Minimal front speed of a monostable interval with a == 1: c = 2 sqrt(rate).
double monostable_interval_speed(const ShapeInterval& iv);

Nonlinearity make_cubic_bistable(double theta, double period_L = 1.0,
                                 double modulation_eps = 0.0);
Nonlinearity make_logistic(double period_L = 1.0, double modulation_eps = 0.0);
Nonlinearity make_ignition(double theta, double period_L = 1.0,
                           double modulation_eps = 0.0);
Nonlinearity make_multistable(const std::vector<ShapeInterval>& intervals,
                              double period_L = 1.0, double modulation_eps = 0.0);

/// Build a nonlinearity from its JSON description. Accepted fields:
///   kind            "bistable" | "kpp" | "ignition" | "multistable" | "custom"
///   theta           threshold in (0,1), bistable and ignition kinds
///   intervals       array of {lo, hi, theta?, amp?, type?, rate?}, multistable
///   poly_coeffs     ascending coefficients with zero constant term, custom
///   modulation_eps  f is multiplied by 1 + eps sin(2 pi x / L), |eps| < 1
///   fourier_coeffs  {mean, cos[], sin[]} general positive modulation
///   period_L        medium period, default 1
/// Unknown fields are rejected.
Nonlinearity nonlinearity_from_json(const std::string& json_text);

/// Build a diffusion coefficient from JSON. Accepted fields:
///   kind            "constant" | "fourier"
///   value           constant kinds
///   fourier_coeffs  {mean, cos[], sin[]}
///   period_L        medium period, default 1
/// Unknown fields are rejected; the sampled minimum must be positive.
PeriodicCoefficient coefficient_from_json(const std::string& json_text);

/// Uniform node-centred grid covering [-periods_left L, periods_right L].
/// Period boundaries land exactly on nodes; dx * cells_per_period == L by
/// construction (dx is stored as the exact quotient).
struct Grid {
  double period_L = 1.0;
  int cells_per_period = 0; // >= 16
  int periods_left = 0;     // >= 1
  int periods_right = 0;    // >= 1

  Grid() = default;
  Grid(double period_L, int cells_per_period, int periods_left, int periods_right);

  double dx() const { return period_L / cells_per_period; }
  int node_count() const {
    return cells_per_period * (periods_left + periods_right) + 1;
  }
  double x(int i) const { return (i - periods_left * cells_per_period) * dx(); }
  double x_min() const { return -periods_left * period_L; }
  double x_max() const { return periods_right * period_L; }
  /// Node index within the fundamental period, for one-period sample tables.
  int period_index(int i) const {
    const int m = cells_per_period;
    int r = i % m;
    return r < 0 ? r + m : r;
  }
  bool operator==(const Grid&) const = default;
};

/// Snapshot of a solution: node values on a grid at a fixed time.
struct Profile {
  Grid grid;
  double time = 0.0;
  std::vector<double> values;
};

/// Sample an L-periodic function, given by one period of node values, onto a
/// full grid. table.size() must equal grid.cells_per_period.
std::vector<double> tile_periodic(const Grid& grid, const std::vector<double>& table);

/// Heaviside-type datum: equals the periodic state p left of crossing_x
/// (inclusive, the crossing sits on a node) and 0 to the right. p is given by
/// one period of node values. crossing_x must be at least one period away
/// from either domain end and is snapped to the nearest node.
Profile make_heaviside(const Grid& grid, const std::vector<double>& p_period,
                       double crossing_x);

/// Exponentially decaying datum: p(x) * min(1, exp(-lambda (x - x0))). Slower
/// decay than the invading front's selects faster non-minimal waves, which is
/// what the speed-versus-steepness comparisons probe. lambda must be > 0.
Profile make_exponential(const Grid& grid, const std::vector<double>& p_period,
                         double lambda, double x0 = 0.0);

} // namespace terracelab
