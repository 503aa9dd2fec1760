#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "terracelab/model.hpp"
#include "terracelab/tridiag.hpp"

namespace terracelab {

enum class BoundaryMode { Clamped, Periodic };

/// Time stepping parameters for the split scheme: reaction explicit, diffusion
/// theta-implicit. With dt * sup|df/du| <= 1 the reaction map is monotone and
/// the full step obeys a discrete comparison principle.
struct StepperConfig {
  double dt = 0.0;
  double theta_scheme = 1.0; // in [0.5, 1]; 1 = fully implicit diffusion
  BoundaryMode boundary = BoundaryMode::Clamped;
  int guard_periods = 5;
  double range_lo = -0.1;
  double range_hi = 1.1;
  /// Testing hook only: lets negative controls run a deliberately broken dt.
  bool skip_stability_validation = false;
};

/// Step rule used by the pipelines: the largest dt that honors the reaction
/// monotonicity bound with 10% headroom, capped at dx for splitting accuracy.
double lipschitz_dt(const Nonlinearity& nl, double dx, double range_lo = -0.1,
                    double range_hi = 1.1);

/// one IMEX step of  du/dt = d/dx(a du/dx) + f(x, u)  on a fixed grid.
///
/// Clamped mode pins the left boundary to the periodic state p and the right
/// boundary to 0. Periodic mode advances one period (state size equals
/// cells_per_period, no duplicated endpoint).
class Stepper {
public:
  static Stepper clamped(const Grid& grid, const PeriodicCoefficient& a,
                         const Nonlinearity& nl, const std::vector<double>& p_period,
                         const StepperConfig& cfg);
  static Stepper periodic(const PeriodicCoefficient& a, const Nonlinearity& nl,
                          int cells_per_period, const StepperConfig& cfg);

  void step(const std::vector<double>& u, std::vector<double>& out) const;
  void step_inplace(std::vector<double>& u) const;

  int state_size() const { return n_; }
  const StepperConfig& config() const { return cfg_; }
  const Grid& grid() const { return grid_; }
  double reaction_lipschitz() const { return lipschitz_; }
  const std::vector<double>& left_state_tiled() const { return p_tiled_; }

private:
  Stepper() = default;
  void validate_and_factor(const PeriodicCoefficient& a, const Nonlinearity& nl);

  StepperConfig cfg_;
  Grid grid_; // meaningful in clamped mode only
  int n_ = 0;
  int cells_ = 0;
  double dx_ = 0.0;
  double lipschitz_ = 0.0;
  PiecewiseShape shape_;          // reaction shape F(u)
  std::vector<double> mod_node_;  // modulation samples per state node
  std::vector<double> face_;      // face diffusivities per state node gap
  std::vector<double> p_tiled_;   // clamped: boundary state on the full grid
  TridiagSolver interior_;        // clamped implicit solve
  CyclicTridiagSolver ring_;      // periodic implicit solve
  mutable std::vector<double> rhs_, work_, scratch_interior_, step_buffer_;
};

enum class RunStatus { CompletedHorizon, TruncatedByGuard, AbortedRangeEscape };

struct RunEvent {
  double time = 0.0;
  std::string kind;
  std::string detail;
};

/// Recorded evolution: decimated snapshots, events, and the final state.
struct Run {
  RunStatus status = RunStatus::CompletedHorizon;
  double end_time = 0.0;
  double dt = 0.0;
  Grid grid;
  std::vector<Profile> snapshots;
  std::vector<RunEvent> events;
  Profile final_state;
};

/// Per-step observation hook. u_prev/u_now span the whole state vector.
struct StepContext {
  double t_prev;
  double t_now;
  const std::vector<double>& u_prev;
  const std::vector<double>& u_now;
};

/// First hitting times of fixed levels at fixed nodes, linearly interpolated
/// inside the step that brackets the level (either crossing direction).
class CrossingRecorder {
public:
  CrossingRecorder(std::vector<int> site_nodes, std::vector<double> levels);

  void observe(const StepContext& ctx);
  bool everything_hit() const { return pending_ == 0; }

  /// tau(level_index, site_index), unset if the level never reached the node.
  std::optional<double> tau(std::size_t level, std::size_t site) const;
  const std::vector<int>& site_nodes() const { return sites_; }
  const std::vector<double>& levels() const { return levels_; }

private:
  std::vector<int> sites_;
  std::vector<double> levels_;
  std::vector<double> tau_;   // levels x sites, NaN = pending
  std::size_t pending_ = 0;
};

/// Dense frame capture over a node window and time interval, used to build
/// wave profiles in crossing-anchored frames.
class FrameRecorder {
public:
  struct Window {
    double t_begin = 0.0;
    double t_end = 0.0;
    int node_lo = 0;
    int node_hi = 0; // inclusive
  };

  explicit FrameRecorder(std::vector<Window> windows);

  void observe(const StepContext& ctx);

  struct Frames {
    std::vector<double> times;
    std::vector<std::vector<double>> values; // one vector per recorded step
  };
  const Frames& frames(std::size_t window) const { return frames_[window]; }
  const Window& window(std::size_t i) const { return windows_[i]; }
  std::size_t window_count() const { return windows_.size(); }

private:
  std::vector<Window> windows_;
  std::vector<Frames> frames_;
};

struct EvolveOptions {
  double horizon = 0.0;
  int max_snapshots = 200;
  bool enforce_range = true;
  double range_tol = 1e-12;
  std::function<void(const StepContext&)> on_step;
};

/// Advance a clamped-grid state to the horizon, recording decimated snapshots
/// and firing the boundary guard when the half-height level set of the top
/// state enters the guarded margin at either end.
Run evolve_until(const Stepper& stepper, const Profile& u0, const EvolveOptions& opts);

/// Rightmost interpolated position where the profile crosses the given level,
/// or nullopt if it never does.
std::optional<double> rightmost_level_position(const Profile& u, double level);

} // namespace terracelab
