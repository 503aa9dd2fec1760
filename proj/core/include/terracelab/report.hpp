#pragma once

/// Deterministic report emission: JSON documents and two-column CSV series.
/// Given identical inputs the emitted bytes are identical — doubles are
/// printed in shortest round-trip form and nothing time- or host-dependent
/// is written.

#include <string>
#include <vector>

#include "terracelab/steepness.hpp"
#include "terracelab/terrace.hpp"

namespace terracelab {

/// Shortest decimal representation that round-trips the value.
std::string format_double(double v);

/// Write content verbatim (binary mode, no transformations).
void write_text_file(const std::string& path, const std::string& content);

/// Two-column CSV with header "x,u".
void write_profile_csv(const std::string& path, const std::vector<double>& x,
                       const std::vector<double>& u);
void write_profile_csv(const std::string& path, const Profile& profile);

/// Two-column CSV with header "n,tau": site index against crossing time.
void write_crossing_csv(const std::string& path, const CrossingSeries& series);

/// JSON documents (two-space indent, trailing newline).
std::string classify_report(const PeriodicCoefficient& a, const Nonlinearity& nl);
std::string ladder_report(const EquilibriaLadder& ladder,
                          const AssumptionReport& witnesses);
std::string eigen_report(const EigenResult& result, double period_L);
std::string run_report(const Run& run);
std::string steepness_report(const SteepnessResult& result);
std::string zero_number_report(const ZeroNumberReport& report);
std::string wave_report(const PulsatingWave& wave);
std::string terrace_report(const Terrace& terrace,
                           const ConvergenceDiagnostics* diagnostics = nullptr);

} // namespace terracelab
