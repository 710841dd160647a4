#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "virodyn/model.hpp"

namespace virodyn {

enum class InitialCondition { kPaperDefault, kUniformEquilibriumPerturbed, kCustomFile };
enum class DiffusionScheme { kSpectralExact, kCrankNicolson };
enum class Behavior { kConverged, kOscillating, kUndecided };

std::string to_string(InitialCondition ic);
std::string to_string(DiffusionScheme scheme);
std::string to_string(Behavior behavior);

// Fields are indexed (i, j) with x = (i + 1/2) h and y = (j + 1/2) h.
struct GridState {
  int n_grid = 0;
  Eigen::MatrixXd t;
  Eigen::MatrixXd i;
  Eigen::MatrixXd v;
  double time = 0.0;
};

struct SimConfig {
  Parameters params = simulation_parameters();
  int n_grid = 20;
  double dt = 0.01;
  double t_end = 2000.0;
  InitialCondition ic_kind = InitialCondition::kPaperDefault;
  std::string ic_file;
  double epsilon = 1.0;
  int probe_i = 10;
  int probe_j = 10;
  int output_every = 5;
  int reaction_substeps = 1;  // RK4 steps per reaction half-step
  DiffusionScheme scheme = DiffusionScheme::kSpectralExact;
  std::vector<double> snapshot_times;

  // Table 1 with ell = 2 pi so that sin(x) cos(y) is periodic.
  static Parameters simulation_parameters();
  // Throws DomainError on any violated invariant.
  void validate() const;
};

struct Trace {
  std::vector<double> times;
  std::vector<double> t_probe;
  std::vector<double> i_probe;
  std::vector<double> v_probe;
  std::vector<double> var_t;
  std::vector<double> var_i;
  std::vector<double> var_v;
  std::vector<GridState> snapshots;
};

// Owns the diffusion propagator for one (params, grid, dt, scheme) so that
// repeated steps do not rebuild it.
class Integrator {
 public:
  explicit Integrator(const SimConfig& cfg);

  // One Strang step: reaction dt/2, diffusion dt on V, reaction dt/2.
  void step(GridState& state) const;
  void react(GridState& state, double h) const;
  void diffuse(Eigen::MatrixXd& v) const;

 private:
  Parameters p_;
  int n_;
  double dt_;
  int substeps_;
  DiffusionScheme scheme_;
  Eigen::MatrixXd propagator_;  // spectral: V <- E V E^T
  Eigen::MatrixXd basis_;       // crank-nicolson: orthonormal eigenbasis
  Eigen::MatrixXd multiplier_;  // per 2D eigenmode
};

GridState initial_state(const SimConfig& cfg);

GridState step(const GridState& state, const SimConfig& cfg);

// Throws InstabilityError carrying the failing time.
Trace run(const SimConfig& cfg);

std::array<double, 3> spatial_variance(const GridState& state);

struct BehaviorWindows {
  double deviation = 0.0;      // trailing max |x - X| / |X|_inf over probe
  double amplitude_prev = 0.0;  // probe V peak-to-peak, second-to-last window
  double amplitude_last = 0.0;  // probe V peak-to-peak, last window
  double mean_v = 0.0;          // probe V mean, last window
};

// Trailing 20% of the run split into two consecutive windows.
BehaviorWindows behavior_windows(const Trace& trace, const Equilibrium& eq);

// With omega given, a trailing window shorter than ten periods is undecided.
Behavior detect_behavior(const Trace& trace, const Equilibrium& eq,
                         std::optional<double> omega = std::nullopt);

// `key = value` lines, '#' comments. Keys are SimConfig fields plus the
// Parameters fields; unknown keys are rejected.
SimConfig parse_config(std::istream& in, SimConfig base = {});
SimConfig load_config(const std::string& path, SimConfig base = {});
void apply_config_entry(SimConfig& cfg, const std::string& key, const std::string& value);

void write_trace_csv(std::ostream& out, const Trace& trace);
void write_snapshot(std::ostream& out, const GridState& state, char field, double ell);

// Reads T, I and V blocks in the snapshot format.
GridState read_state(std::istream& in);

}  // namespace virodyn
