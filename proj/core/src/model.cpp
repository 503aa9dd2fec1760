#include "terracelab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

namespace terracelab {

namespace {

constexpr int kPositivitySamples = 4096;

[[noreturn]] void config_error(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

} // namespace

double TrigSeries::wrap(double x) const {
  // fmod is exact, so congruent inputs reduce to identical representatives.
  double r = std::fmod(x, period_L);
  if (r < 0.0) r += period_L;
  if (r >= period_L) r = 0.0;
  return r;
}

double TrigSeries::eval(double x) const {
  double acc = mean;
  if (cos_coeffs.empty() && sin_coeffs.empty()) return acc;
  const double base = 2.0 * std::numbers::pi * wrap(x) / period_L;
  const std::size_t n = std::max(cos_coeffs.size(), sin_coeffs.size());
  for (std::size_t k = 0; k < n; ++k) {
    const double arg = base * static_cast<double>(k + 1);
    if (k < cos_coeffs.size() && cos_coeffs[k] != 0.0)
      acc += cos_coeffs[k] * std::cos(arg);
    if (k < sin_coeffs.size() && sin_coeffs[k] != 0.0)
      acc += sin_coeffs[k] * std::sin(arg);
  }
  return acc;
}

TrigSeries TrigSeries::constant(double value, double period_L) {
  TrigSeries s;
  s.period_L = period_L;
  s.mean = value;
  return s;
}

PeriodicCoefficient::PeriodicCoefficient(TrigSeries series) : series_(std::move(series)) {
  if (!(series_.period_L > 0.0) || !std::isfinite(series_.period_L))
    throw std::invalid_argument("PeriodicCoefficient: period must be positive");
  min_value_ = max_value_ = series_.eval(0.0);
  for (int i = 1; i < kPositivitySamples; ++i) {
    const double v = series_.eval(series_.period_L * i / kPositivitySamples);
    min_value_ = std::min(min_value_, v);
    max_value_ = std::max(max_value_, v);
  }
  if (!(min_value_ > 0.0))
    throw std::invalid_argument("PeriodicCoefficient: coefficient must stay positive");
}

PeriodicCoefficient PeriodicCoefficient::constant(double value, double period_L) {
  return PeriodicCoefficient(TrigSeries::constant(value, period_L));
}

double Poly::eval(double u) const {
  double acc = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * u + coeffs[i];
  return acc;
}

double Poly::deriv(double u) const {
  double acc = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 1;)
    acc = acc * u + coeffs[i] * static_cast<double>(i);
  return acc;
}

namespace {

// C1 blend weight on [0,1].
inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }
inline double smoothstep_deriv(double t) { return 6.0 * t * (1.0 - t); }

} // namespace

double PiecewiseShape::eval(double u) const {
  if (knots.empty()) return pieces[0].eval(u);
  const auto it = std::upper_bound(knots.begin(), knots.end(), u);
  const std::size_t idx = static_cast<std::size_t>(it - knots.begin());
  // Blend window sits just above each knot so pieces that vanish below the
  // knot stay identically zero up to it (ignition keeps f == 0 on [0, theta]).
  if (idx > 0) {
    const double k = knots[idx - 1];
    if (u < k + 2.0 * blend_w) {
      const double t = (u - k) / (2.0 * blend_w);
      const double s = smoothstep(t);
      return (1.0 - s) * pieces[idx - 1].eval(u) + s * pieces[idx].eval(u);
    }
  }
  return pieces[idx].eval(u);
}

double PiecewiseShape::deriv(double u) const {
  if (knots.empty()) return pieces[0].deriv(u);
  const auto it = std::upper_bound(knots.begin(), knots.end(), u);
  const std::size_t idx = static_cast<std::size_t>(it - knots.begin());
  if (idx > 0) {
    const double k = knots[idx - 1];
    if (u < k + 2.0 * blend_w) {
      const double t = (u - k) / (2.0 * blend_w);
      const double s = smoothstep(t);
      const double ds = smoothstep_deriv(t) / (2.0 * blend_w);
      return (1.0 - s) * pieces[idx - 1].deriv(u) + s * pieces[idx].deriv(u) +
             ds * (pieces[idx].eval(u) - pieces[idx - 1].eval(u));
    }
  }
  return pieces[idx].deriv(u);
}

Nonlinearity::Nonlinearity(PiecewiseShape shape, TrigSeries modulation,
                           std::string kind_tag,
                           std::optional<double> lipschitz_bound_hint)
    : shape_(std::move(shape)), modulation_(std::move(modulation)),
      kind_tag_(std::move(kind_tag)), lipschitz_hint_(lipschitz_bound_hint) {
  if (shape_.pieces.size() != shape_.knots.size() + 1)
    throw std::invalid_argument("Nonlinearity: piece/knot count mismatch");
  for (std::size_t i = 1; i < shape_.knots.size(); ++i)
    if (!(shape_.knots[i] > shape_.knots[i - 1] + 4.0 * shape_.blend_w))
      throw std::invalid_argument("Nonlinearity: knots too close for the C1 blend");
  if (!(modulation_.period_L > 0.0) || !std::isfinite(modulation_.period_L))
    throw std::invalid_argument("Nonlinearity: period must be positive");

  double mod_min = modulation_.eval(0.0), mod_max = mod_min;
  for (int i = 1; i < kPositivitySamples; ++i) {
    const double v = modulation_.eval(modulation_.period_L * i / kPositivitySamples);
    mod_min = std::min(mod_min, v);
    mod_max = std::max(mod_max, v);
  }
  if (!(mod_min > 0.0))
    throw std::invalid_argument(
        "Nonlinearity: modulation destroys the sign structure (must stay positive)");

  if (std::abs(shape_.eval(0.0)) * std::max(std::abs(mod_max), 1.0) > 1e-12)
    throw std::invalid_argument("Nonlinearity: f(x, 0) must vanish");
}

double Nonlinearity::lipschitz_bound(double umin, double umax) const {
  if (lipschitz_hint_) return *lipschitz_hint_;
  constexpr int kSamples = 2048;
  double dmax = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    const double u = umin + (umax - umin) * i / kSamples;
    dmax = std::max(dmax, std::abs(shape_.deriv(u)));
  }
  double mod_max = 0.0;
  for (int i = 0; i < kPositivitySamples; ++i)
    mod_max = std::max(mod_max,
                       std::abs(modulation_.eval(modulation_.period_L * i / kPositivitySamples)));
  return dmax * mod_max;
}

namespace {

Poly bistable_block_poly(double lo, double hi, double threshold, double amp) {
  // amp * (u - lo) * (hi - u) * (u - T), expanded in ascending powers.
  const double T = threshold;
  return Poly{{amp * T * lo * hi,
               -amp * (lo * hi + T * (lo + hi)),
               amp * (lo + hi + T),
               -amp}};
}

Poly monostable_block_poly(double lo, double hi, double rate) {
  // rate * (u - lo) * (hi - u) / (hi - lo), unstable at lo, stable at hi.
  const double s = rate / (hi - lo);
  return Poly{{-s * lo * hi, s * (lo + hi), -s}};
}

TrigSeries modulation_from_eps(double eps, double period_L) {
  if (!(std::abs(eps) < 1.0))
    throw std::invalid_argument(
        "Nonlinearity: |modulation_eps| must be below 1 to keep the sign structure");
  TrigSeries m = TrigSeries::constant(1.0, period_L);
  if (eps != 0.0) m.sin_coeffs = {eps};
  return m;
}

void require_open_unit(double theta, const char* what) {
  if (!(theta > 0.0) || !(theta < 1.0))
    throw std::invalid_argument(std::string(what) + " must lie strictly inside (0, 1)");
}

} // namespace

double bistable_interval_speed(const ShapeInterval& iv) {
  return std::sqrt(iv.amp) * (iv.hi - iv.lo) * (1.0 - 2.0 * iv.theta) / std::numbers::sqrt2;
}

double monostable_interval_speed(const ShapeInterval& iv) {
  return 2.0 * std::sqrt(iv.rate);
}

Nonlinearity make_cubic_bistable(double theta, double period_L, double modulation_eps) {
  require_open_unit(theta, "bistable threshold");
  PiecewiseShape shape;
  shape.pieces = {bistable_block_poly(0.0, 1.0, theta, 1.0)};
  return Nonlinearity(std::move(shape), modulation_from_eps(modulation_eps, period_L),
                      "bistable");
}

Nonlinearity make_logistic(double period_L, double modulation_eps) {
  PiecewiseShape shape;
  shape.pieces = {Poly{{0.0, 1.0, -1.0}}}; // u (1 - u)
  return Nonlinearity(std::move(shape), modulation_from_eps(modulation_eps, period_L),
                      "kpp");
}

Nonlinearity make_ignition(double theta, double period_L, double modulation_eps) {
  require_open_unit(theta, "ignition threshold");
  PiecewiseShape shape;
  shape.knots = {theta};
  shape.pieces = {Poly{{0.0}},
                  Poly{{-theta, 1.0 + theta, -1.0}}}; // (u - theta)(1 - u)
  return Nonlinearity(std::move(shape), modulation_from_eps(modulation_eps, period_L),
                      "ignition");
}

Nonlinearity make_multistable(const std::vector<ShapeInterval>& intervals,
                              double period_L, double modulation_eps) {
  if (intervals.size() < 2)
    throw std::invalid_argument("multistable: need at least two intervals");
  PiecewiseShape shape;
  double expected_lo = 0.0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const ShapeInterval& iv = intervals[i];
    if (std::abs(iv.lo - expected_lo) > 1e-12)
      throw std::invalid_argument("multistable: intervals must tile [0, top] contiguously");
    if (!(iv.hi > iv.lo))
      throw std::invalid_argument("multistable: interval must have positive length");
    if (iv.monostable) {
      if (!(iv.rate > 0.0))
        throw std::invalid_argument("multistable: monostable rate must be positive");
      shape.pieces.push_back(monostable_block_poly(iv.lo, iv.hi, iv.rate));
    } else {
      require_open_unit(iv.theta, "multistable interval threshold");
      if (!(iv.amp > 0.0))
        throw std::invalid_argument("multistable: amplitude must be positive");
      const double T = iv.lo + iv.theta * (iv.hi - iv.lo);
      shape.pieces.push_back(bistable_block_poly(iv.lo, iv.hi, T, iv.amp));
    }
    if (i + 1 < intervals.size()) shape.knots.push_back(iv.hi);
    expected_lo = iv.hi;
  }
  return Nonlinearity(std::move(shape), modulation_from_eps(modulation_eps, period_L),
                      "multistable");
}

namespace {

using nlohmann::json;

void reject_unknown_fields(const json& j, const std::vector<std::string>& allowed,
                           const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      config_error("unknown field \"" + it.key() + "\" in " + where);
}

double number_field(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) config_error("missing field \"" + key + "\" in " + where);
  if (!j.at(key).is_number()) config_error("field \"" + key + "\" in " + where + " must be a number");
  return j.at(key).get<double>();
}

std::vector<double> number_array(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) config_error(where + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

TrigSeries parse_fourier(const json& j, double period_L, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  reject_unknown_fields(j, {"mean", "cos", "sin"}, where);
  TrigSeries s;
  s.period_L = period_L;
  s.mean = number_field(j, "mean", where);
  if (j.contains("cos")) s.cos_coeffs = number_array(j.at("cos"), where + ".cos");
  if (j.contains("sin")) s.sin_coeffs = number_array(j.at("sin"), where + ".sin");
  return s;
}

json parse_top(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("invalid JSON (") + e.what() + ")");
  }
}

} // namespace

Nonlinearity nonlinearity_from_json(const std::string& json_text) {
  const json j = parse_top(json_text);
  if (!j.is_object()) config_error("nonlinearity description must be a JSON object");
  if (!j.contains("kind") || !j.at("kind").is_string())
    config_error("nonlinearity needs a string field \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();

  const double period_L = j.contains("period_L")
                              ? number_field(j, "period_L", "nonlinearity")
                              : 1.0;
  if (!(period_L > 0.0)) config_error("period_L must be positive");

  if (j.contains("modulation_eps") && j.contains("fourier_coeffs"))
    config_error("give either modulation_eps or fourier_coeffs, not both");

  TrigSeries modulation = TrigSeries::constant(1.0, period_L);
  if (j.contains("modulation_eps"))
    modulation = modulation_from_eps(number_field(j, "modulation_eps", "nonlinearity"),
                                     period_L);
  else if (j.contains("fourier_coeffs"))
    modulation = parse_fourier(j.at("fourier_coeffs"), period_L, "fourier_coeffs");

  std::vector<std::string> allowed = {"kind", "period_L", "modulation_eps",
                                      "fourier_coeffs"};

  if (kind == "bistable" || kind == "ignition") {
    allowed.push_back("theta");
    reject_unknown_fields(j, allowed, "nonlinearity (kind " + kind + ")");
    const double theta = number_field(j, "theta", "nonlinearity");
    auto nl = kind == "bistable" ? make_cubic_bistable(theta, period_L)
                                 : make_ignition(theta, period_L);
    return Nonlinearity(nl.shape_pieces(), modulation, kind);
  }

  if (kind == "kpp") {
    reject_unknown_fields(j, allowed, "nonlinearity (kind kpp)");
    auto nl = make_logistic(period_L);
    return Nonlinearity(nl.shape_pieces(), modulation, kind);
  }

  if (kind == "multistable") {
    allowed.push_back("intervals");
    reject_unknown_fields(j, allowed, "nonlinearity (kind multistable)");
    if (!j.contains("intervals") || !j.at("intervals").is_array())
      config_error("multistable needs an array field \"intervals\"");
    std::vector<ShapeInterval> ivs;
    for (const auto& e : j.at("intervals")) {
      if (!e.is_object()) config_error("each interval must be an object");
      reject_unknown_fields(e, {"lo", "hi", "theta", "amp", "type", "rate"},
                            "interval");
      ShapeInterval iv;
      iv.lo = number_field(e, "lo", "interval");
      iv.hi = number_field(e, "hi", "interval");
      if (e.contains("type")) {
        const std::string type = e.at("type").get<std::string>();
        if (type == "monostable") iv.monostable = true;
        else if (type != "bistable") config_error("interval type must be bistable or monostable");
      }
      if (iv.monostable) {
        if (e.contains("theta") || e.contains("amp"))
          config_error("monostable intervals take \"rate\", not theta/amp");
        if (e.contains("rate")) iv.rate = number_field(e, "rate", "interval");
      } else {
        if (e.contains("rate")) config_error("bistable intervals take theta/amp, not \"rate\"");
        if (e.contains("theta")) iv.theta = number_field(e, "theta", "interval");
        if (e.contains("amp")) iv.amp = number_field(e, "amp", "interval");
      }
      ivs.push_back(iv);
    }
    auto nl = make_multistable(ivs, period_L);
    return Nonlinearity(nl.shape_pieces(), modulation, kind);
  }

  if (kind == "custom") {
    allowed.push_back("poly_coeffs");
    reject_unknown_fields(j, allowed, "nonlinearity (kind custom)");
    if (!j.contains("poly_coeffs"))
      config_error("custom needs ascending \"poly_coeffs\"");
    Poly p{number_array(j.at("poly_coeffs"), "poly_coeffs")};
    if (p.coeffs.empty()) p.coeffs = {0.0};
    if (std::abs(p.coeffs[0]) > 1e-12)
      config_error("custom poly_coeffs must have zero constant term so f(x, 0) == 0");
    PiecewiseShape shape;
    shape.pieces = {std::move(p)};
    return Nonlinearity(std::move(shape), modulation, "custom");
  }

  config_error("unknown nonlinearity kind \"" + kind + "\"");
}

PeriodicCoefficient coefficient_from_json(const std::string& json_text) {
  const json j = parse_top(json_text);
  if (!j.is_object()) config_error("coefficient description must be a JSON object");
  if (!j.contains("kind") || !j.at("kind").is_string())
    config_error("coefficient needs a string field \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  const double period_L = j.contains("period_L")
                              ? number_field(j, "period_L", "coefficient")
                              : 1.0;
  if (!(period_L > 0.0)) config_error("period_L must be positive");

  if (kind == "constant") {
    reject_unknown_fields(j, {"kind", "period_L", "value"}, "coefficient (kind constant)");
    const double v = number_field(j, "value", "coefficient");
    return PeriodicCoefficient::constant(v, period_L);
  }
  if (kind == "fourier") {
    reject_unknown_fields(j, {"kind", "period_L", "fourier_coeffs"},
                          "coefficient (kind fourier)");
    if (!j.contains("fourier_coeffs"))
      config_error("fourier coefficient needs \"fourier_coeffs\"");
    return PeriodicCoefficient(
        parse_fourier(j.at("fourier_coeffs"), period_L, "fourier_coeffs"));
  }
  config_error("unknown coefficient kind \"" + kind + "\"");
}

Grid::Grid(double period_L_, int cells_per_period_, int periods_left_, int periods_right_)
    : period_L(period_L_), cells_per_period(cells_per_period_),
      periods_left(periods_left_), periods_right(periods_right_) {
  if (!(period_L > 0.0) || !std::isfinite(period_L))
    throw std::invalid_argument("Grid: period must be positive");
  if (cells_per_period < 16)
    throw std::invalid_argument("Grid: need at least 16 cells per period");
  if (periods_left < 1 || periods_right < 1)
    throw std::invalid_argument("Grid: need at least one period on each side");
}

std::vector<double> tile_periodic(const Grid& grid, const std::vector<double>& table) {
  if (static_cast<int>(table.size()) != grid.cells_per_period)
    throw std::invalid_argument("tile_periodic: table must hold one period of node values");
  std::vector<double> out(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) out[i] = table[grid.period_index(i)];
  return out;
}

Profile make_heaviside(const Grid& grid, const std::vector<double>& p_period,
                       double crossing_x) {
  const int n = grid.node_count();
  const int ic = static_cast<int>(std::lround((crossing_x - grid.x_min()) / grid.dx()));
  if (ic < grid.cells_per_period || ic > n - 1 - grid.cells_per_period)
    throw std::invalid_argument(
        "make_heaviside: crossing must sit at least one period away from the boundary");
  Profile u;
  u.grid = grid;
  u.time = 0.0;
  u.values = tile_periodic(grid, p_period);
  for (int i = ic + 1; i < n; ++i) u.values[i] = 0.0;
  return u;
}

Profile make_exponential(const Grid& grid, const std::vector<double>& p_period,
                         double lambda, double x0) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("make_exponential: lambda must be positive");
  Profile u;
  u.grid = grid;
  u.time = 0.0;
  u.values = tile_periodic(grid, p_period);
  const int n = grid.node_count();
  for (int i = 0; i < n; ++i) {
    const double x = grid.x(i);
    if (x > x0) u.values[i] *= std::exp(-lambda * (x - x0));
  }
  return u;
}

} // namespace terracelab
