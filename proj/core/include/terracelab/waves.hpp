#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "terracelab/crossing.hpp"
#include "terracelab/steepness.hpp"

namespace terracelab {

struct WaveOptions {
  double wave_tol = 1e-3; // pulsating / Cauchy residual budget
  double asym_tol = 1e-3; // tail closeness to the platforms
  int s_samples = 17;     // stored frames per period-crossing time
  int cauchy_back = 4;    // recentred-family comparison distance in sites
  double window_slack = 1.15;        // widening on the measured tail needs
  int min_window_periods = 3;        // per side
  double monotone_tol = 1e-9;        // allowed uphill step inside the core
};

/// Pulsating traveling wave in the crossing-anchored frame: profiles
/// u(anchor_tau + s_j, x) over a window around the anchor site, with s
/// spanning one period-crossing time L/|c|.
struct PulsatingWave {
  SpeedEstimate speed; // signed
  int direction = +1;
  double alpha = 0.0;       // probe level the anchors came from
  double period_time = 0.0; // L / |c|
  int anchor_site = 0;
  double anchor_tau = 0.0;
  std::vector<double> s;                    // offsets in [0, period_time)
  std::vector<double> x;                    // window nodes, run coordinates
  std::vector<std::vector<double>> frames;  // frames[j][i] = u(tau + s_j, x_i)
  int upper_platform = -1, lower_platform = -1; // ladder indices (upper = left)
  double pulsating_residual = 0.0; // site n vs n-1, one-period recentring
  double cauchy_residual = 0.0;    // site n vs n-cauchy_back
  double upper_asym_residual = 0.0, lower_asym_residual = 0.0; // outer 20%
  double monotone_violation = 0.0;
  bool accepted = false;
  std::vector<std::string> notes;

  int cells_per_period = 0;
  double dx() const { return x.size() > 1 ? x[1] - x[0] : 0.0; }
};

/// Capture prescription for one wave: three anchors (site n-cauchy_back,
/// n-1, n) with identical one-period-crossing time windows and congruent
/// node windows shifted by whole periods.
struct WavePlan {
  bool feasible = false;
  std::string note;
  double alpha = 0.0;
  int direction = +1;
  SpeedEstimate speed;
  double period_time = 0.0;
  int cells_per_period = 0;
  int upper_platform = -1, lower_platform = -1;
  std::array<int, 3> sites{};      // {n - cauchy_back, n - 1, n}
  std::array<double, 3> taus{};
  std::array<FrameRecorder::Window, 3> windows{};
};

/// Size and place the capture windows for the wave crossing `series`, using a
/// late survey snapshot to measure how far each tail needs to reach before it
/// hugs its platform. allow_lo/allow_hi clip the window (adjacent fronts,
/// guarded margins); an infeasible request is returned with feasible = false
/// and the reason in note.
WavePlan plan_wave_capture(const CrossingSeries& series, const SpeedEstimate& speed,
                           const Grid& grid, double horizon, double dt,
                           const Profile& late_snapshot,
                           const std::vector<double>& upper_vals,
                           const std::vector<double>& lower_vals,
                           int upper_rung, int lower_rung,
                           double allow_lo, double allow_hi,
                           const WaveOptions& opts = {});

/// Assemble the wave from the captured frames: resample each anchor's frames
/// onto the crossing-anchored s-grid by linear interpolation in time, take
/// the last anchor's family as the profile, and certify the pulsating
/// relation (n vs n-1), the Cauchy distance (n vs n-cauchy_back), tail
/// asymptotics and monotonicity.
PulsatingWave extract_wave(const WavePlan& plan, const FrameRecorder& recorder,
                           std::size_t first_window_index, const Grid& grid,
                           const std::vector<double>& upper_vals,
                           const std::vector<double>& lower_vals,
                           const WaveOptions& opts = {});

/// Wave frames as a sampled family on the window grid in anchor-relative
/// coordinates, extended by the platform values outside the window when a
/// wider grid is requested.
SampledFamily wave_family(const PulsatingWave& wave);

/// Evaluate the wave at offset s (any real) and a window node index, reducing
/// s by whole period-crossing times with the matching one-period spatial
/// slide and interpolating linearly between stored frames. Empty when the
/// slide leaves the stored window.
std::optional<double> wave_value(const PulsatingWave& wave, double s,
                                 std::ptrdiff_t window_node);

/// sup-distance between the two waves after shifting the second in time by
/// sigma (periodic in the period-crossing time, with the one-period spatial
/// slide the pulsating relation prescribes). Profiles are compared in
/// anchor-relative coordinates on the overlap of their windows.
double wave_shift_distance(const PulsatingWave& a, const PulsatingWave& b, double sigma);

struct ShiftAlignment {
  double sigma = 0.0;
  double distance = 0.0;
};

/// Golden-section search for the time shift minimizing wave_shift_distance
/// over one period-crossing time.
ShiftAlignment optimal_time_shift(const PulsatingWave& a, const PulsatingWave& b);

/// How far the wave is from a rigidly translating profile: the worst, over
/// stored frame times, best-translate sup-distance to the first frame. A
/// genuinely pulsating wave in a periodic medium has a defect well above the
/// wave tolerance; a homogeneous-medium wave is near zero.
double pure_translate_defect(const PulsatingWave& wave);

enum class VerdictStatus { Passed, Failed, Skipped };

struct SpeedSteepnessVerdict {
  VerdictStatus status = VerdictStatus::Skipped;
  bool speeds_ordered = false;
  bool equal_speed_case = false;
  bool profiles_identical = false;
  ShiftAlignment alignment;
  double slack = 0.0;
  std::string detail;
};

/// The ordering content of the steepness comparison: given a certified-stable
/// shared upper state and a steepness certificate of w1 over w2, the steeper
/// wave must not be faster (CI slack allowed); equal nonzero speeds force
/// profile identity up to a time shift. Missing hypotheses skip the test
/// rather than fail it.
SpeedSteepnessVerdict speed_steepness_test(const PulsatingWave& w1,
                                           const PulsatingWave& w2,
                                           const RungAssessment& shared_top,
                                           const SteepnessResult& w1_steeper_than_w2,
                                           double wave_tol = 1e-3);

enum class ZeroSpeedLabel { Moving, StationaryLike, Unresolved };

/// Coarse sub-period diagnostic for a gap whose crossing series diverged:
/// track the displacement of the mid-gap level over the last half of the run.
ZeroSpeedLabel zero_speed_probe(const Run& run, double level);

const char* to_string(ZeroSpeedLabel label);
const char* to_string(VerdictStatus status);

} // namespace terracelab
