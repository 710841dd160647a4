#include "virodyn/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "virodyn/csv.hpp"
#include "virodyn/errors.hpp"

namespace virodyn {
namespace {

constexpr double kBlowUp = 1e12;
constexpr double kUndershoot = 1e-10;
constexpr double kDefaultInitialVirus = 0.0185;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw DomainError("config key '" + key + "': not a number: '" + s + "'");
  }
  return value;
}

int parse_int(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw DomainError("config key '" + key + "': not an integer: '" + s + "'");
  }
  return value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

void check_field(const Eigen::MatrixXd& f, const char* name, double time) {
  double scale = 0.0;
  double lowest = 0.0;
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    const double x = f.data()[k];
    if (!std::isfinite(x) || std::abs(x) > kBlowUp) {
      throw InstabilityError(std::string("field ") + name + " blew up", time);
    }
    scale = std::max(scale, std::abs(x));
    lowest = std::min(lowest, x);
  }
  if (lowest < -kUndershoot * scale) {
    throw InstabilityError(std::string("field ") + name + " lost positivity", time);
  }
}

double variance(const Eigen::MatrixXd& f) {
  const double mean = f.mean();
  return (f.array() - mean).square().mean();
}

// sin(x) cos(y) at cell centers, coordinates scaled to the 2 pi cell.
Eigen::MatrixXd sin_cos_perturbation(int n) {
  Eigen::MatrixXd out(n, n);
  const double h = 2.0 * std::numbers::pi / n;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) out(a, b) = std::sin((a + 0.5) * h) * std::cos((b + 0.5) * h);
  }
  return out;
}

}  // namespace

std::string to_string(InitialCondition ic) {
  switch (ic) {
    case InitialCondition::kPaperDefault:
      return "paper_default";
    case InitialCondition::kUniformEquilibriumPerturbed:
      return "uniform_equilibrium_perturbed";
    case InitialCondition::kCustomFile:
      return "custom";
  }
  return "?";
}

std::string to_string(DiffusionScheme scheme) {
  return scheme == DiffusionScheme::kSpectralExact ? "spectral_exact_diffusion" : "crank_nicolson";
}

std::string to_string(Behavior behavior) {
  switch (behavior) {
    case Behavior::kConverged:
      return "converged";
    case Behavior::kOscillating:
      return "oscillating";
    case Behavior::kUndecided:
      return "undecided";
  }
  return "?";
}

Parameters SimConfig::simulation_parameters() {
  Parameters p;
  p.ell = 2.0 * std::numbers::pi;
  return p;
}

void SimConfig::validate() const {
  virodyn::validate(params);
  if (n_grid < 8) throw DomainError("n_grid must be at least 8");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
  if (!(t_end > dt) || !std::isfinite(t_end)) throw DomainError("t_end must exceed dt");
  if (probe_i < 0 || probe_i >= n_grid || probe_j < 0 || probe_j >= n_grid) {
    throw DomainError("probe outside the grid");
  }
  if (output_every < 1) throw DomainError("output_every must be at least 1");
  if (reaction_substeps < 1) throw DomainError("reaction_substeps must be at least 1");
  if (!std::isfinite(epsilon)) throw DomainError("epsilon must be finite");
  if (ic_kind == InitialCondition::kCustomFile && ic_file.empty()) {
    throw DomainError("custom initial condition needs ic_file");
  }
}

Integrator::Integrator(const SimConfig& cfg)
    : p_(cfg.params), n_(cfg.n_grid), dt_(cfg.dt), substeps_(cfg.reaction_substeps), scheme_(cfg.scheme) {
  const int n = n_;
  const double ell = p_.ell;
  if (scheme_ == DiffusionScheme::kSpectralExact) {
    // Real circulant form of exp(dt d_V d^2/dx^2) on the periodic grid.
    std::vector<double> decay(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const int wave = k <= n / 2 ? k : k - n;
      const double kappa = 2.0 * std::numbers::pi * wave / ell;
      decay[static_cast<std::size_t>(k)] = std::exp(-p_.d_v * kappa * kappa * dt_);
    }
    propagator_.resize(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        double sum = 0.0;
        for (int k = 0; k < n; ++k) {
          sum += decay[static_cast<std::size_t>(k)] * std::cos(2.0 * std::numbers::pi * k * (a - b) / n);
        }
        propagator_(a, b) = sum / n;
      }
    }
  } else {
    const double h = ell / n;
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a) {
      lap(a, a) = 2.0 / (h * h);
      lap(a, (a + 1) % n) -= 1.0 / (h * h);
      lap(a, (a + n - 1) % n) -= 1.0 / (h * h);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    basis_ = eig.eigenvectors();
    const Eigen::VectorXd mu = eig.eigenvalues();
    multiplier_.resize(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const double theta = 0.5 * dt_ * p_.d_v * (mu(a) + mu(b));
        multiplier_(a, b) = (1.0 - theta) / (1.0 + theta);
      }
    }
  }
}

void Integrator::react(GridState& s, double h) const {
  const Parameters& p = p_;
  for (Eigen::Index k = 0; k < s.t.size(); ++k) {
    const double t0 = s.t.data()[k];
    const double i0 = s.i.data()[k];
    const double v0 = s.v.data()[k];
    const auto k1 = reaction_rhs(p, t0, i0, v0);
    const auto k2 = reaction_rhs(p, t0 + 0.5 * h * k1[0], i0 + 0.5 * h * k1[1], v0 + 0.5 * h * k1[2]);
    const auto k3 = reaction_rhs(p, t0 + 0.5 * h * k2[0], i0 + 0.5 * h * k2[1], v0 + 0.5 * h * k2[2]);
    const auto k4 = reaction_rhs(p, t0 + h * k3[0], i0 + h * k3[1], v0 + h * k3[2]);
    s.t.data()[k] = t0 + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    s.i.data()[k] = i0 + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    s.v.data()[k] = v0 + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
  }
}

void Integrator::diffuse(Eigen::MatrixXd& v) const {
  if (p_.d_v == 0.0) return;
  if (scheme_ == DiffusionScheme::kSpectralExact) {
    v = propagator_ * v * propagator_.transpose();
  } else {
    Eigen::MatrixXd coeffs = basis_.transpose() * v * basis_;
    coeffs.array() *= multiplier_.array();
    v = basis_ * coeffs * basis_.transpose();
  }
}

void Integrator::step(GridState& state) const {
  const double h = 0.5 * dt_ / substeps_;
  for (int k = 0; k < substeps_; ++k) react(state, h);
  diffuse(state.v);
  for (int k = 0; k < substeps_; ++k) react(state, h);
  state.time += dt_;
  check_field(state.t, "T", state.time);
  check_field(state.i, "I", state.time);
  check_field(state.v, "V", state.time);
}

GridState initial_state(const SimConfig& cfg) {
  const int n = cfg.n_grid;
  GridState s;
  s.n_grid = n;
  switch (cfg.ic_kind) {
    case InitialCondition::kPaperDefault: {
      s.t = Eigen::MatrixXd::Constant(n, n, uninfected_t_level(cfg.params)) + cfg.epsilon * sin_cos_perturbation(n);
      s.i = Eigen::MatrixXd::Zero(n, n);
      s.v = Eigen::MatrixXd::Constant(n, n, kDefaultInitialVirus);
      break;
    }
    case InitialCondition::kUniformEquilibriumPerturbed: {
      const Equilibrium eq = infected_equilibrium(cfg.params).value_or(uninfected_equilibrium(cfg.params));
      s.t = Eigen::MatrixXd::Constant(n, n, eq.t_cells) + cfg.epsilon * sin_cos_perturbation(n);
      s.i = Eigen::MatrixXd::Constant(n, n, eq.i_cells);
      s.v = Eigen::MatrixXd::Constant(n, n, eq.virus);
      break;
    }
    case InitialCondition::kCustomFile: {
      std::ifstream in(cfg.ic_file);
      if (!in) throw DomainError("cannot open ic_file '" + cfg.ic_file + "'");
      s = read_state(in);
      if (s.n_grid != n) throw DomainError("ic_file grid size does not match n_grid");
      break;
    }
  }
  s.time = 0.0;
  return s;
}

GridState step(const GridState& state, const SimConfig& cfg) {
  GridState next = state;
  Integrator(cfg).step(next);
  return next;
}

std::array<double, 3> spatial_variance(const GridState& state) {
  return {variance(state.t), variance(state.i), variance(state.v)};
}

Trace run(const SimConfig& cfg) {
  cfg.validate();
  const Integrator integrator(cfg);
  GridState state = initial_state(cfg);
  check_field(state.t, "T", 0.0);
  check_field(state.i, "I", 0.0);
  check_field(state.v, "V", 0.0);

  Trace trace;
  auto record = [&] {
    const auto var = spatial_variance(state);
    trace.times.push_back(state.time);
    trace.t_probe.push_back(state.t(cfg.probe_i, cfg.probe_j));
    trace.i_probe.push_back(state.i(cfg.probe_i, cfg.probe_j));
    trace.v_probe.push_back(state.v(cfg.probe_i, cfg.probe_j));
    trace.var_t.push_back(var[0]);
    trace.var_i.push_back(var[1]);
    trace.var_v.push_back(var[2]);
  };
  std::vector<double> pending = cfg.snapshot_times;
  std::sort(pending.begin(), pending.end(), std::greater<>());
  auto snap = [&] {
    while (!pending.empty() && pending.back() <= state.time + 0.5 * cfg.dt) {
      trace.snapshots.push_back(state);
      pending.pop_back();
    }
  };

  const auto steps = static_cast<long long>(std::llround(cfg.t_end / cfg.dt));
  record();
  snap();
  for (long long k = 1; k <= steps; ++k) {
    integrator.step(state);
    // Accumulated time drifts; pin it to the step count.
    state.time = static_cast<double>(k) * cfg.dt;
    if (k % cfg.output_every == 0 || k == steps) record();
    snap();
  }
  return trace;
}

BehaviorWindows behavior_windows(const Trace& trace, const Equilibrium& eq) {
  BehaviorWindows w;
  if (trace.times.size() < 4) return w;
  const double first = trace.times.front();
  const double last = trace.times.back();
  const double start = last - 0.2 * (last - first);
  const double mid = last - 0.1 * (last - first);
  const auto x = eq.as_array();
  const double norm = std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2])});

  double lo_prev = HUGE_VAL, hi_prev = -HUGE_VAL, lo_last = HUGE_VAL, hi_last = -HUGE_VAL;
  double sum_last = 0.0;
  int count_last = 0;
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const double t = trace.times[k];
    if (t < start) continue;
    const double dev = std::max({std::abs(trace.t_probe[k] - x[0]), std::abs(trace.i_probe[k] - x[1]),
                                 std::abs(trace.v_probe[k] - x[2])});
    w.deviation = std::max(w.deviation, norm > 0.0 ? dev / norm : dev);
    const double v = trace.v_probe[k];
    if (t < mid) {
      lo_prev = std::min(lo_prev, v);
      hi_prev = std::max(hi_prev, v);
    } else {
      lo_last = std::min(lo_last, v);
      hi_last = std::max(hi_last, v);
      sum_last += v;
      ++count_last;
    }
  }
  if (hi_prev >= lo_prev) w.amplitude_prev = hi_prev - lo_prev;
  if (hi_last >= lo_last) w.amplitude_last = hi_last - lo_last;
  if (count_last > 0) w.mean_v = sum_last / count_last;
  return w;
}

Behavior detect_behavior(const Trace& trace, const Equilibrium& eq, std::optional<double> omega) {
  if (trace.times.size() < 4) return Behavior::kUndecided;
  if (omega && *omega > 0.0) {
    const double window = 0.1 * (trace.times.back() - trace.times.front());
    if (window < 10.0 * 2.0 * std::numbers::pi / *omega) return Behavior::kUndecided;
  }
  const BehaviorWindows w = behavior_windows(trace, eq);
  if (w.deviation < 1e-3) return Behavior::kConverged;
  const bool large = w.amplitude_last > 0.05 * std::abs(w.mean_v);
  const bool steady = std::abs(w.amplitude_last - w.amplitude_prev) <= 0.05 * w.amplitude_prev;
  if (large && steady) return Behavior::kOscillating;
  return Behavior::kUndecided;
}

void apply_config_entry(SimConfig& cfg, const std::string& key, const std::string& value) {
  Parameters& p = cfg.params;
  const std::string v = trim(value);
  if (key == "n_grid") {
    cfg.n_grid = parse_int(key, v);
  } else if (key == "dt") {
    cfg.dt = parse_double(key, v);
  } else if (key == "t_end") {
    cfg.t_end = parse_double(key, v);
  } else if (key == "ic_kind") {
    if (v == "paper_default") {
      cfg.ic_kind = InitialCondition::kPaperDefault;
    } else if (v == "uniform_equilibrium_perturbed") {
      cfg.ic_kind = InitialCondition::kUniformEquilibriumPerturbed;
    } else if (v == "custom") {
      cfg.ic_kind = InitialCondition::kCustomFile;
    } else {
      throw DomainError("config key 'ic_kind': unknown value '" + v + "'");
    }
  } else if (key == "ic_file") {
    cfg.ic_file = v;
  } else if (key == "epsilon") {
    cfg.epsilon = parse_double(key, v);
  } else if (key == "probe") {
    const auto parts = split_list(v);
    if (parts.size() != 2) throw DomainError("config key 'probe': expected 'i,j'");
    cfg.probe_i = parse_int(key, parts[0]);
    cfg.probe_j = parse_int(key, parts[1]);
  } else if (key == "probe_i") {
    cfg.probe_i = parse_int(key, v);
  } else if (key == "probe_j") {
    cfg.probe_j = parse_int(key, v);
  } else if (key == "output_every") {
    cfg.output_every = parse_int(key, v);
  } else if (key == "reaction_substeps") {
    cfg.reaction_substeps = parse_int(key, v);
  } else if (key == "scheme") {
    if (v == "spectral_exact_diffusion") {
      cfg.scheme = DiffusionScheme::kSpectralExact;
    } else if (v == "crank_nicolson") {
      cfg.scheme = DiffusionScheme::kCrankNicolson;
    } else {
      throw DomainError("config key 'scheme': unknown value '" + v + "'");
    }
  } else if (key == "snapshot_times") {
    cfg.snapshot_times.clear();
    if (!v.empty()) {
      for (const auto& part : split_list(v)) cfg.snapshot_times.push_back(parse_double(key, part));
    }
  } else if (key == "alpha") {
    p.alpha = parse_double(key, v);
  } else if (key == "gamma") {
    p.gamma = parse_double(key, v);
  } else if (key == "mu_t") {
    p.mu_t = parse_double(key, v);
  } else if (key == "mu_i") {
    p.mu_i = parse_double(key, v);
  } else if (key == "mu_v") {
    p.mu_v = parse_double(key, v);
  } else if (key == "t_max") {
    p.t_max = parse_double(key, v);
  } else if (key == "d_v") {
    p.d_v = parse_double(key, v);
  } else if (key == "ell") {
    p.ell = parse_double(key, v);
  } else if (key == "n_burst" || key == "N") {
    p.n_burst = parse_double(key, v);
  } else if (key == "r") {
    p.r = parse_double(key, v);
  } else {
    throw DomainError("unknown config key '" + key + "'");
  }
}

SimConfig parse_config(std::istream& in, SimConfig base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DomainError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_config_entry(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

SimConfig load_config(const std::string& path, SimConfig base) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base));
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "t,T_probe,I_probe,V_probe,var_T,var_I,var_V\n";
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    out << format_number(trace.times[k]) << ',' << format_number(trace.t_probe[k]) << ','
        << format_number(trace.i_probe[k]) << ',' << format_number(trace.v_probe[k]) << ','
        << format_number(trace.var_t[k]) << ',' << format_number(trace.var_i[k]) << ','
        << format_number(trace.var_v[k]) << '\n';
  }
}

void write_snapshot(std::ostream& out, const GridState& state, char field, double ell) {
  const Eigen::MatrixXd* f = nullptr;
  switch (field) {
    case 'T':
      f = &state.t;
      break;
    case 'I':
      f = &state.i;
      break;
    case 'V':
      f = &state.v;
      break;
    default:
      throw DomainError(std::string("unknown field '") + field + "'");
  }
  out << "# field=" << field << " t=" << format_number(state.time) << " n=" << state.n_grid
      << " ell=" << format_number(ell) << '\n';
  for (int a = 0; a < state.n_grid; ++a) {
    for (int b = 0; b < state.n_grid; ++b) {
      if (b > 0) out << ' ';
      out << format_number((*f)(a, b));
    }
    out << '\n';
  }
}

GridState read_state(std::istream& in) {
  GridState s;
  s.n_grid = 0;
  bool seen[3] = {false, false, false};
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line.rfind("# field=", 0) != 0) throw DomainError("state file: expected '# field=' header");
    std::istringstream header(line.substr(2));
    std::string token;
    char field = 0;
    int n = 0;
    while (header >> token) {
      if (token.rfind("field=", 0) == 0 && token.size() == 7) field = token[6];
      if (token.rfind("n=", 0) == 0) n = parse_int("n", token.substr(2));
      if (token.rfind("t=", 0) == 0) s.time = parse_double("t", token.substr(2));
    }
    if (n < 1) throw DomainError("state file: missing grid size");
    if (s.n_grid != 0 && s.n_grid != n) throw DomainError("state file: inconsistent grid sizes");
    s.n_grid = n;
    Eigen::MatrixXd m(n, n);
    for (int a = 0; a < n; ++a) {
      if (!std::getline(in, line)) throw DomainError("state file: truncated matrix");
      std::istringstream row(line);
      for (int b = 0; b < n; ++b) {
        std::string cell;
        if (!(row >> cell)) throw DomainError("state file: short row");
        m(a, b) = parse_double("matrix", cell);
      }
    }
    const int slot = field == 'T' ? 0 : field == 'I' ? 1 : field == 'V' ? 2 : -1;
    if (slot < 0) throw DomainError("state file: unknown field");
    (slot == 0 ? s.t : slot == 1 ? s.i : s.v) = std::move(m);
    seen[slot] = true;
  }
  if (!seen[0] || !seen[1] || !seen[2]) throw DomainError("state file: needs T, I and V blocks");
  return s;
}

}  // namespace virodyn
