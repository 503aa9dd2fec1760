#include "terracelab/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "report_detail.hpp"

namespace terracelab {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_profile_csv(const std::string& path, const std::vector<double>& x,
                       const std::vector<double>& u) {
  if (x.size() != u.size())
    throw std::invalid_argument("profile columns differ in length");
  std::string body = "x,u\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    body += format_double(x[i]);
    body += ',';
    body += format_double(u[i]);
    body += '\n';
  }
  write_text_file(path, body);
}

void write_profile_csv(const std::string& path, const Profile& profile) {
  std::vector<double> x(profile.values.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = profile.grid.x(static_cast<int>(i));
  write_profile_csv(path, x, profile.values);
}

void write_crossing_csv(const std::string& path, const CrossingSeries& series) {
  std::string body = "n,tau\n";
  for (std::size_t i = 0; i < series.taus.size(); ++i) {
    body += std::to_string(series.n_min + static_cast<int>(i));
    body += ',';
    body += format_double(series.taus[i]);
    body += '\n';
  }
  write_text_file(path, body);
}

namespace detail {

const char* label(StabilityLabel s) {
  switch (s) {
    case StabilityLabel::Stable: return "stable";
    case StabilityLabel::Unstable: return "unstable";
    default: return "degenerate";
  }
}

const char* label(WitnessStatus s) {
  switch (s) {
    case WitnessStatus::Certified: return "certified";
    case WitnessStatus::Failed: return "failed";
    case WitnessStatus::NotCertified: return "not-certified";
    default: return "vacuous";
  }
}

const char* label(GapBehavior b) {
  switch (b) {
    case GapBehavior::Converging: return "converging";
    case GapBehavior::Diverging: return "diverging";
    default: return "unresolved";
  }
}

const char* label(RunStatus s) {
  switch (s) {
    case RunStatus::CompletedHorizon: return "completed-horizon";
    case RunStatus::TruncatedByGuard: return "truncated-by-guard";
    default: return "aborted-range-escape";
  }
}

std::string dump(const ojson& doc) { return doc.dump(2) + "\n"; }

namespace {

ojson series_json(const TrigSeries& s) {
  ojson j;
  j["mean"] = s.mean;
  j["cos"] = s.cos_coeffs;
  j["sin"] = s.sin_coeffs;
  return j;
}

/// Zeros of the reaction shape on [0, top], found by a dense sign scan with
/// bisection refinement, labelled by the sign of the derivative there.
ojson shape_zeros_json(const Nonlinearity& nl, double top) {
  ojson zeros = ojson::array();
  const int n = 4096;
  bool all_zero = true;
  for (int i = 0; i <= n; ++i)
    if (std::abs(nl.shape(top * i / n)) > 1e-14) { all_zero = false; break; }
  if (all_zero) return zeros;

  std::vector<double> roots;
  const auto push = [&roots](double r) {
    for (double q : roots)
      if (std::abs(q - r) < 1e-7) return;
    roots.push_back(r);
  };
  double prev = nl.shape(0.0);
  if (std::abs(prev) < 1e-14) push(0.0);
  for (int i = 1; i <= n; ++i) {
    const double u = top * i / n;
    const double cur = nl.shape(u);
    if (std::abs(cur) < 1e-14) {
      push(u);
    } else if (prev * cur < 0.0) {
      double lo = top * (i - 1) / n, hi = u;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (nl.shape(lo) * nl.shape(mid) <= 0.0)
          hi = mid;
        else
          lo = mid;
      }
      push(0.5 * (lo + hi));
    }
    prev = cur;
  }
  std::sort(roots.begin(), roots.end());
  for (double r : roots) {
    ojson z;
    z["u"] = r;
    const double d = nl.dshape(r);
    z["slope"] = d;
    z["local_label"] =
        std::abs(d) < 1e-9 ? "degenerate" : (d < 0.0 ? "stable" : "unstable");
    zeros.push_back(z);
  }
  return zeros;
}

ojson drift_json(const DriftSeries& s) {
  ojson j;
  j["samples"] = s.t.size();
  j["tail_slope"] = s.tail_slope;
  j["net_change"] = s.net_change;
  if (!s.value.empty()) {
    j["first"] = s.value.front();
    j["last"] = s.value.back();
  }
  return j;
}

} // namespace

ojson classify_json(const PeriodicCoefficient& a, const Nonlinearity& nl) {
  ojson j;
  j["kind"] = nl.kind_tag();
  j["period"] = nl.period();
  const PiecewiseShape& shape = nl.shape_pieces();
  ojson sj;
  sj["knots"] = shape.knots;
  ojson pieces = ojson::array();
  for (const Poly& p : shape.pieces) pieces.push_back(p.coeffs);
  sj["pieces"] = pieces;
  sj["blend_width"] = shape.blend_w;
  j["shape"] = sj;
  j["modulation"] = series_json(nl.modulation_series());
  j["modulation"]["min"] = nl.modulation_series().is_constant()
                               ? nl.modulation_series().mean
                               : PeriodicCoefficient(nl.modulation_series()).min_value();
  j["modulation"]["max"] = nl.modulation_series().is_constant()
                               ? nl.modulation_series().mean
                               : PeriodicCoefficient(nl.modulation_series()).max_value();
  ojson dj = series_json(a.series());
  dj["min"] = a.min_value();
  dj["max"] = a.max_value();
  j["diffusion"] = dj;
  const double top = shape.knots.empty() ? 1.0 : shape.knots.back();
  j["zeros"] = shape_zeros_json(nl, std::max(1.0, top));
  j["identically_zero"] = j["zeros"].empty();
  j["lipschitz_bound"] = nl.lipschitz_bound(-0.1, std::max(1.0, top) + 0.1);
  return j;
}

ojson ladder_json(const EquilibriaLadder& ladder) {
  ojson j;
  ojson rungs = ojson::array();
  for (const StationarySolution& r : ladder.rungs) {
    ojson rj;
    rj["value_at0"] = r.value_at0();
    rj["stability"] = label(r.stability);
    rj["mu"] = r.mu;
    rj["newton_residual"] = r.newton_residual;
    rj["resolution"] = r.values.size();
    rungs.push_back(rj);
  }
  j["rungs"] = rungs;
  j["continuum_suspected"] = ladder.continuum_suspected;
  j["notes"] = ladder.notes;
  return j;
}

ojson witnesses_json(const AssumptionReport& w) {
  ojson j;
  ojson rungs = ojson::array();
  for (const RungAssessment& r : w.rungs) {
    ojson rj;
    rj["value_at0"] = r.value_at0;
    rj["stability"] = label(r.stability);
    rj["band_witness"] = label(r.band_witness);
    rj["delta"] = r.delta;
    rj["eps"] = r.eps;
    if (!r.detail.empty()) rj["detail"] = r.detail;
    rungs.push_back(rj);
  }
  j["rungs"] = rungs;
  j["endpoint_witness"] = label(w.endpoint_witness);
  j["stable_rungs_certified"] = w.stable_rungs_certified;
  j["endpoints_certified"] = w.endpoints_certified;
  j["any_not_certified"] = w.any_not_certified;
  j["summary"] = w.summary;
  return j;
}

ojson eigen_json(const EigenResult& result, double period_L) {
  ojson j;
  j["mu"] = result.mu;
  j["residual"] = result.residual;
  j["iterations"] = result.iterations;
  j["resolution"] = result.phi.size();
  j["period"] = period_L;
  const auto [mn, mx] = std::minmax_element(result.phi.begin(), result.phi.end());
  j["phi_min"] = result.phi.empty() ? 0.0 : *mn;
  j["phi_max"] = result.phi.empty() ? 0.0 : *mx;
  j["phi_positive"] = !result.phi.empty() && *mn > 0.0;
  return j;
}

ojson run_json(const Run& run) {
  ojson j;
  j["status"] = label(run.status);
  j["end_time"] = run.end_time;
  j["dt"] = run.dt;
  j["dx"] = run.grid.dx();
  j["nodes"] = run.grid.node_count();
  j["snapshots"] = run.snapshots.size();
  if (!run.snapshots.empty()) {
    j["first_snapshot_time"] = run.snapshots.front().time;
    j["last_snapshot_time"] = run.snapshots.back().time;
  }
  ojson events = ojson::array();
  for (const RunEvent& e : run.events) {
    ojson ej;
    ej["time"] = e.time;
    ej["kind"] = e.kind;
    ej["detail"] = e.detail;
    events.push_back(ej);
  }
  j["events"] = events;
  return j;
}

ojson speed_json(const SpeedEstimate& estimate) {
  ojson j;
  j["c"] = estimate.c;
  j["ci"] = estimate.ci;
  j["fit_se"] = estimate.fit_se;
  j["cross_estimate"] = estimate.cross_estimate;
  j["sites_used"] = estimate.sites_used;
  j["alpha"] = estimate.alpha;
  return j;
}

ojson probe_json(const LevelProbe& probe) {
  ojson j;
  j["alpha"] = probe.alpha;
  j["gap"] = probe.gap;
  j["direction"] = probe.direction;
  j["behavior"] = label(probe.behavior);
  j["zero_speed"] = probe.zero_speed;
  j["sites_right"] = probe.right_sites;
  j["sites_left"] = probe.left_sites;
  j["speed"] = probe.speed ? speed_json(*probe.speed) : ojson(nullptr);
  if (!probe.note.empty()) j["note"] = probe.note;
  return j;
}

ojson steepness_json(const SteepnessResult& result) {
  ojson j;
  j["steeper"] = result.steeper;
  j["pairs_checked"] = result.pairs_checked;
  if (result.witness) {
    ojson w;
    w["t1"] = result.witness->t1;
    w["t2"] = result.witness->t2;
    w["x"] = result.witness->x;
    w["crossing"] = result.witness->crossing;
    w["violation"] = result.witness->violation;
    j["witness"] = w;
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

ojson zero_number_json(const ZeroNumberReport& report) {
  ojson j;
  j["steps"] = report.times.size();
  j["counts"] = report.counts;
  j["violation_steps"] = report.violation_steps;
  j["nonincreasing"] = report.nonincreasing();
  return j;
}

ojson wave_json(const PulsatingWave& wave) {
  ojson j;
  j["alpha"] = wave.alpha;
  j["speed"] = speed_json(wave.speed);
  j["direction"] = wave.direction;
  j["period_time"] = wave.period_time;
  j["anchor_site"] = wave.anchor_site;
  j["anchor_tau"] = wave.anchor_tau;
  j["upper_platform"] = wave.upper_platform;
  j["lower_platform"] = wave.lower_platform;
  j["cells_per_period"] = wave.cells_per_period;
  j["time_samples"] = wave.s.size();
  j["window_nodes"] = wave.x.size();
  j["pulsating_residual"] = wave.pulsating_residual;
  j["cauchy_residual"] = wave.cauchy_residual;
  j["upper_asym_residual"] = wave.upper_asym_residual;
  j["lower_asym_residual"] = wave.lower_asym_residual;
  j["monotone_violation"] = wave.monotone_violation;
  j["accepted"] = wave.accepted;
  j["notes"] = wave.notes;
  return j;
}

ojson terrace_json(const Terrace& T) {
  ojson j;
  j["period"] = T.period_L;
  ojson nm;
  nm["dx"] = T.numerics.dx;
  nm["dt"] = T.numerics.dt;
  nm["horizon"] = T.numerics.horizon;
  nm["theta_scheme"] = T.numerics.theta_scheme;
  nm["periods_left"] = T.numerics.periods_left;
  nm["periods_right"] = T.numerics.periods_right;
  j["numerics"] = nm;
  j["ladder"] = ladder_json(T.ladder);
  j["witnesses"] = witnesses_json(T.assumptions);

  ojson platforms = ojson::array();
  for (int k : T.platform_rungs) {
    ojson p;
    p["rung"] = k;
    p["value_at0"] = T.ladder.rungs[static_cast<std::size_t>(k)].value_at0();
    platforms.push_back(p);
  }
  j["platforms"] = platforms;

  ojson steps = ojson::array();
  for (const TerraceStep& s : T.steps) {
    ojson sj;
    sj["upper_platform"] = s.upper_platform;
    sj["lower_platform"] = s.lower_platform;
    sj["zero_speed"] = s.zero_speed;
    sj["speed"] = s.speed ? speed_json(*s.speed) : ojson(nullptr);
    sj["zero_speed_probe"] =
        s.zero_probe ? ojson(to_string(*s.zero_probe)) : ojson(nullptr);
    sj["level_consistent"] = s.level_consistent;
    sj["probe_indices"] = s.probes;
    ojson waves = ojson::array();
    for (const PulsatingWave& w : s.waves) waves.push_back(wave_json(w));
    sj["waves"] = waves;
    sj["notes"] = s.notes;
    steps.push_back(sj);
  }
  j["steps"] = steps;

  ojson probes = ojson::array();
  for (const LevelProbe& p : T.probes) probes.push_back(probe_json(p));
  j["probes"] = probes;

  j["zero_speed_flag"] = T.zero_speed_flag;
  j["extraction_ok"] = T.extraction_ok;
  ojson v;
  v["platforms_ordered"] = T.verification.platforms_ordered;
  v["min_platform_margin"] = T.verification.min_platform_margin;
  v["speeds_ordered"] = T.verification.speeds_ordered;
  v["waves_accepted"] = T.verification.waves_accepted;
  v["steepness_ok"] = T.verification.steepness_ok;
  v["steepness_pairs"] = T.verification.steepness_pairs;
  v["notes"] = T.verification.notes;
  j["verification"] = v;
  j["notes"] = T.notes;
  return j;
}

ojson diagnostics_json(const ConvergenceDiagnostics& diag) {
  ojson j;
  j["zero_speed_limited"] = diag.zero_speed_limited;
  ojson drifts = ojson::array();
  for (const DriftSeries& s : diag.m_of_t) drifts.push_back(drift_json(s));
  j["crossing_time_drift"] = drifts;
  ojson gaps = ojson::array();
  for (std::size_t i = 0; i < diag.front_gaps.size(); ++i) {
    ojson g = drift_json(diag.front_gaps[i]);
    g["violations"] = i < diag.gap_violations.size() ? diag.gap_violations[i] : 0;
    gaps.push_back(g);
  }
  j["front_gaps"] = gaps;
  ojson res = ojson::array();
  for (const DriftSeries& s : diag.frame_residuals) res.push_back(drift_json(s));
  j["frame_residuals"] = res;
  j["plateau_growth"] = diag.plateau_growth;
  j["notes"] = diag.notes;
  return j;
}

} // namespace detail

std::string classify_report(const PeriodicCoefficient& a, const Nonlinearity& nl) {
  return detail::dump(detail::classify_json(a, nl));
}

std::string ladder_report(const EquilibriaLadder& ladder,
                          const AssumptionReport& witnesses) {
  detail::ojson j;
  j["ladder"] = detail::ladder_json(ladder);
  j["witnesses"] = detail::witnesses_json(witnesses);
  return detail::dump(j);
}

std::string eigen_report(const EigenResult& result, double period_L) {
  return detail::dump(detail::eigen_json(result, period_L));
}

std::string run_report(const Run& run) { return detail::dump(detail::run_json(run)); }

std::string steepness_report(const SteepnessResult& result) {
  return detail::dump(detail::steepness_json(result));
}

std::string zero_number_report(const ZeroNumberReport& report) {
  return detail::dump(detail::zero_number_json(report));
}

std::string wave_report(const PulsatingWave& wave) {
  return detail::dump(detail::wave_json(wave));
}

std::string terrace_report(const Terrace& terrace,
                           const ConvergenceDiagnostics* diagnostics) {
  detail::ojson j = detail::terrace_json(terrace);
  if (diagnostics) j["diagnostics"] = detail::diagnostics_json(*diagnostics);
  return detail::dump(j);
}

} // namespace terracelab
