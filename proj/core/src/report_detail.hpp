#pragma once

/// Internal JSON builders shared by the report and scenario translation
/// units. Not installed: keeps the vendored JSON header out of the public
/// include surface.

#include <string>

#include "json.hpp"
#include "terracelab/steepness.hpp"
#include "terracelab/terrace.hpp"

namespace terracelab::detail {

using ojson = nlohmann::ordered_json;

const char* label(StabilityLabel s);
const char* label(WitnessStatus s);
const char* label(GapBehavior b);
const char* label(RunStatus s);

ojson classify_json(const PeriodicCoefficient& a, const Nonlinearity& nl);
ojson ladder_json(const EquilibriaLadder& ladder);
ojson witnesses_json(const AssumptionReport& witnesses);
ojson eigen_json(const EigenResult& result, double period_L);
ojson run_json(const Run& run);
ojson speed_json(const SpeedEstimate& estimate);
ojson probe_json(const LevelProbe& probe);
ojson steepness_json(const SteepnessResult& result);
ojson zero_number_json(const ZeroNumberReport& report);
ojson wave_json(const PulsatingWave& wave);
ojson terrace_json(const Terrace& terrace);
ojson diagnostics_json(const ConvergenceDiagnostics& diag);

/// Two-space indent plus trailing newline.
std::string dump(const ojson& doc);

} // namespace terracelab::detail
