#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "virodyn/csv.hpp"
#include "virodyn/errors.hpp"
#include "virodyn/hopf.hpp"
#include "virodyn/model.hpp"
#include "virodyn/sim.hpp"
#include "virodyn/spectral.hpp"
#include "virodyn/stability.hpp"

namespace virodyn::cli {
namespace {

namespace fs = std::filesystem;

struct Flags {
  std::optional<double> n, r, alpha, gamma, mu_t, mu_i, mu_v, t_max, d_v, ell;
  std::optional<double> dt, t_end, eps;
  std::optional<int> grid;
  std::optional<std::string> probe;
  std::string out;
  std::string config;
  int id = 0;
  int n_max = 40;
  bool gnuplot = false;
  std::string n_range = "10:1000:100";
  std::string r_range = "0:600:121";
};

struct Figure {
  int id;
  double r;
  double t_end;
};

constexpr Figure kFigures[] = {{5, 1.0, 2000.0}, {6, 2.0, 4000.0}, {7, 200.0, 4000.0}, {8, 500.0, 2000.0}};
constexpr double kFigureN = 300.0;

template <typename T>
void add_value(CLI::App* app, const std::string& name, std::optional<T>& slot, const std::string& help) {
  app->add_option_function<T>(name, [&slot](const T& v) { slot = v; }, help);
}

void add_parameter_flags(CLI::App* app, Flags& f) {
  add_value(app, "--N", f.n, "virion burst size N");
  add_value(app, "--r", f.r, "logistic proliferation rate r (1/day)");
  add_value(app, "--alpha", f.alpha, "T-cell production alpha");
  add_value(app, "--gamma", f.gamma, "infection rate gamma");
  add_value(app, "--muT", f.mu_t, "uninfected T-cell death rate");
  add_value(app, "--muI", f.mu_i, "infected cell death rate");
  add_value(app, "--muV", f.mu_v, "virus clearance rate");
  add_value(app, "--Tmax", f.t_max, "T-cell carrying level");
  add_value(app, "--dV", f.d_v, "virus diffusivity");
  add_value(app, "--ell", f.ell, "side of the periodic square");
  app->add_option("--config", f.config, "key = value configuration file");
  app->add_option("--out", f.out, "output file (directory for simulations)");
}

void add_simulation_flags(CLI::App* app, Flags& f) {
  add_value(app, "--grid", f.grid, "grid points per side");
  add_value(app, "--dt", f.dt, "time step (day)");
  add_value(app, "--t-end", f.t_end, "final time (day)");
  add_value(app, "--eps", f.eps, "initial perturbation amplitude");
  add_value(app, "--probe", f.probe, "probe cell as i,j (0-based)");
  app->add_flag("--gnuplot", f.gnuplot, "also write a gnuplot script");
}

SimConfig build_config(const Flags& f, SimConfig cfg) {
  if (!f.config.empty()) cfg = load_config(f.config, cfg);
  Parameters& p = cfg.params;
  if (f.n) p.n_burst = *f.n;
  if (f.r) p.r = *f.r;
  if (f.alpha) p.alpha = *f.alpha;
  if (f.gamma) p.gamma = *f.gamma;
  if (f.mu_t) p.mu_t = *f.mu_t;
  if (f.mu_i) p.mu_i = *f.mu_i;
  if (f.mu_v) p.mu_v = *f.mu_v;
  if (f.t_max) p.t_max = *f.t_max;
  if (f.d_v) p.d_v = *f.d_v;
  if (f.ell) p.ell = *f.ell;
  if (f.grid) cfg.n_grid = *f.grid;
  if (f.dt) cfg.dt = *f.dt;
  if (f.t_end) cfg.t_end = *f.t_end;
  if (f.eps) cfg.epsilon = *f.eps;
  if (f.probe) apply_config_entry(cfg, "probe", *f.probe);
  validate(cfg.params);
  return cfg;
}

SimConfig analysis_defaults() {
  SimConfig cfg;
  cfg.params = Parameters::table1();
  return cfg;
}

SweepRange parse_range(const std::string& text) {
  std::stringstream ss(text);
  std::string lo, hi, steps;
  if (!std::getline(ss, lo, ':') || !std::getline(ss, hi, ':') || !std::getline(ss, steps)) {
    throw DomainError("range must be lo:hi:steps, got '" + text + "'");
  }
  try {
    return SweepRange{std::stod(lo), std::stod(hi), std::stoi(steps)};
  } catch (const std::exception&) {
    throw DomainError("range must be lo:hi:steps, got '" + text + "'");
  }
}

// Writes through `fallback` when path is empty.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw DomainError("cannot open output file '" + path + "'");
  body(file);
}

std::string num(double x) { return format_number(x); }

int run_equilibria(const Flags& f, std::ostream& out) {
  const Parameters p = build_config(f, analysis_defaults()).params;
  emit(f.out, out, [&](std::ostream& o) {
    o << "kind,N,r,T,I,V,R0,r_crit,N_crit,relative_residual\n";
    double rc = std::nan("");
    if (p.n_burst > p.mu_v / (p.gamma * p.t_max)) rc = r_crit(p, p.n_burst);
    const double nc = n_crit(p, p.r);
    const double r0 = reproduction_ratio(p);
    auto row = [&](const Equilibrium& eq) {
      o << to_string(eq.kind) << ',' << num(p.n_burst) << ',' << num(p.r) << ',' << num(eq.t_cells) << ','
        << num(eq.i_cells) << ',' << num(eq.virus) << ',' << num(r0) << ',' << num(rc) << ',' << num(nc) << ','
        << num(relative_residual(p, eq)) << '\n';
    };
    row(uninfected_equilibrium(p));
    if (const auto inf = infected_equilibrium(p)) row(*inf);
  });
  return kExitOk;
}

int run_modes(const Flags& f, std::ostream& out) {
  const Parameters p = build_config(f, analysis_defaults()).params;
  const ModeTable table = build_mode_table(p.ell, f.n_max);
  emit(f.out, out, [&](std::ostream& o) {
    o << "index_distinct,n,lambda,multiplicity,cumulative_multiplicity\n";
    for (std::size_t k = 0; k < table.size(); ++k) {
      const ModeEntry& e = table[k];
      o << k << ',' << e.n << ',' << num(e.lambda) << ',' << e.multiplicity << ',' << e.cumulative_multiplicity
        << '\n';
    }
  });
  return kExitOk;
}

void write_regions_gnuplot(const std::string& csv_path) {
  std::ofstream gp(csv_path + ".gp");
  gp << "set datafile separator ','\n"
     << "set xlabel 'N'\nset ylabel 'r'\n"
     << "zones = 'U I_stable P_boundary P_interior'\n"
     << "plot for [z in zones] '" << fs::path(csv_path).filename().string()
     << "' every ::1 using 1:(strcol(4) eq z ? $2 : 1/0) with points pt 5 ps 0.5 title z\n";
}

int run_regions(const Flags& f, std::ostream& out) {
  const Parameters p = build_config(f, analysis_defaults()).params;
  const auto rows = sweep(p, parse_range(f.n_range), parse_range(f.r_range));
  emit(f.out, out, [&](std::ostream& o) { write_sweep_csv(o, rows); });
  if (f.gnuplot && !f.out.empty()) write_regions_gnuplot(f.out);
  return kExitOk;
}

int run_hopf(const Flags& f, std::ostream& out) {
  const Parameters p = build_config(f, analysis_defaults()).params;
  const HopfReport h = hopf_points(p, p.n_burst);
  const LyapunovReport l1 = lyapunov_coefficient(p, h.r1);
  const LyapunovReport l2 = lyapunov_coefficient(p, h.r2);
  const double n_star = find_n_star(p);
  emit(f.out, out, [&](std::ostream& o) {
    o << "N,r1,r2,omega1,omega2,lambda3_1,lambda3_2,transv1,transv2,Re_c1_r1,Re_c1_r2,N_star\n";
    o << num(h.n) << ',' << num(h.r1) << ',' << num(h.r2) << ',' << num(h.omega1) << ',' << num(h.omega2) << ','
      << num(h.lambda3_1) << ',' << num(h.lambda3_2) << ',' << num(h.transversality1) << ','
      << num(h.transversality2) << ',' << num(l1.re_c1) << ',' << num(l2.re_c1) << ',' << num(n_star) << '\n';
  });
  return kExitOk;
}

int run_lyapunov(const Flags& f, std::ostream& out) {
  const Parameters p = build_config(f, analysis_defaults()).params;
  const HopfReport h = hopf_points(p, p.n_burst);
  emit(f.out, out, [&](std::ostream& o) {
    o << "point,N,r,omega,g20_re,g20_im,g11_re,g11_im,g02_re,g02_im,g21_re,g21_im,c1_re,c1_im,verdict,"
         "Re_c1_half_g21\n";
    int j = 1;
    for (const double r : {h.r1, h.r2}) {
      const LyapunovReport l = lyapunov_coefficient(p, r);
      o << 'r' << j++ << ',' << num(p.n_burst) << ',' << num(r) << ',' << num(l.omega);
      for (const auto& g : {l.g20, l.g11, l.g02, l.g21, l.c1}) o << ',' << num(g.real()) << ',' << num(g.imag());
      o << ',' << to_string(l.verdict) << ',' << num(l.re_c1_half) << '\n';
    }
  });
  return kExitOk;
}

void write_trace_gnuplot(const fs::path& dir, const std::string& title) {
  std::ofstream gp(dir / "trace.gp");
  gp << "set datafile separator ','\n"
     << "set xlabel 't (day)'\nset ylabel 'V at probe'\n"
     << "plot 'trace.csv' every ::1 using 1:4 with lines title '" << title << "'\n";
}

struct SimOutcome {
  Behavior behavior;
  BehaviorWindows windows;
  std::array<double, 3> final_variance;
};

SimOutcome simulate_to(const SimConfig& cfg, const fs::path& dir, bool gnuplot, const std::string& title) {
  SimConfig run_cfg = cfg;
  run_cfg.snapshot_times.push_back(cfg.t_end);
  const Trace trace = run(run_cfg);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "trace.csv");
    write_trace_csv(csv, trace);
  }
  for (const GridState& s : trace.snapshots) {
    char stamp[32];
    std::snprintf(stamp, sizeof(stamp), "%g", s.time);
    for (const char field : {'T', 'I', 'V'}) {
      std::ofstream snap(dir / (std::string("snapshot_") + field + "_t" + stamp + ".txt"));
      write_snapshot(snap, s, field, cfg.params.ell);
    }
  }
  if (gnuplot) write_trace_gnuplot(dir, title);

  const Equilibrium eq = infected_equilibrium(cfg.params).value_or(uninfected_equilibrium(cfg.params));
  SimOutcome outcome;
  outcome.behavior = detect_behavior(trace, eq);
  outcome.windows = behavior_windows(trace, eq);
  outcome.final_variance = {trace.var_t.back(), trace.var_i.back(), trace.var_v.back()};
  return outcome;
}

void write_outcome(std::ostream& o, const std::string& label, const SimConfig& cfg, const SimOutcome& s) {
  o << "run,N,r,behavior,deviation,amplitude_prev,amplitude_last,mean_V,var_T,var_I,var_V\n";
  o << label << ',' << num(cfg.params.n_burst) << ',' << num(cfg.params.r) << ',' << to_string(s.behavior) << ','
    << num(s.windows.deviation) << ',' << num(s.windows.amplitude_prev) << ',' << num(s.windows.amplitude_last)
    << ',' << num(s.windows.mean_v) << ',' << num(s.final_variance[0]) << ',' << num(s.final_variance[1]) << ','
    << num(s.final_variance[2]) << '\n';
}

int run_simulate(const Flags& f, std::ostream& out) {
  const SimConfig cfg = build_config(f, SimConfig{});
  cfg.validate();
  const fs::path dir = f.out.empty() ? fs::path("simulation") : fs::path(f.out);
  const SimOutcome s = simulate_to(cfg, dir, f.gnuplot, "simulation");
  write_outcome(out, "simulate", cfg, s);
  return kExitOk;
}

int run_figure(const Flags& f, std::ostream& out) {
  const Figure* fig = nullptr;
  for (const Figure& candidate : kFigures) {
    if (candidate.id == f.id) fig = &candidate;
  }
  if (fig == nullptr) throw DomainError("--id must be one of 5, 6, 7, 8");
  SimConfig base;
  base.params.n_burst = kFigureN;
  base.params.r = fig->r;
  base.t_end = fig->t_end;
  const SimConfig cfg = build_config(f, base);
  cfg.validate();
  const std::string label = "figure" + std::to_string(fig->id);
  const fs::path dir = f.out.empty() ? fs::path(label) : fs::path(f.out);
  const SimOutcome s = simulate_to(cfg, dir, f.gnuplot, label);
  write_outcome(out, label, cfg, s);
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stability, Hopf and simulation toolkit for a within-host virus reaction-diffusion model",
               "virodyn"};
  app.require_subcommand(1);
  Flags f;

  auto* equilibria = app.add_subcommand("equilibria", "uninfected and infected states, R0, thresholds");
  auto* modes = app.add_subcommand("modes", "periodic Laplacian eigenvalues with multiplicities");
  auto* regions = app.add_subcommand("regions", "classify a grid of (N, r) points");
  auto* hopf = app.add_subcommand("hopf", "mode-0 Hopf points and Lyapunov signs");
  auto* lyapunov = app.add_subcommand("lyapunov", "normal-form coefficients at both Hopf points");
  auto* simulate = app.add_subcommand("simulate", "integrate the reaction-diffusion system");
  auto* figure = app.add_subcommand("reproduce-figure", "run one of the N = 300 scenarios");

  for (auto* sub : {equilibria, modes, regions, hopf, lyapunov, simulate, figure}) add_parameter_flags(sub, f);
  modes->add_option("--n-max", f.n_max, "largest k1^2 + k2^2")->check(CLI::NonNegativeNumber);
  regions->add_option("--n-range", f.n_range, "N axis as lo:hi:steps");
  regions->add_option("--r-range", f.r_range, "r axis as lo:hi:steps");
  regions->add_flag("--gnuplot", f.gnuplot, "also write a gnuplot script next to --out");
  add_simulation_flags(simulate, f);
  add_simulation_flags(figure, f);
  figure->add_option("--id", f.id, "figure number (5, 6, 7 or 8)")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    if (*equilibria) return run_equilibria(f, out);
    if (*modes) return run_modes(f, out);
    if (*regions) return run_regions(f, out);
    if (*hopf) return run_hopf(f, out);
    if (*lyapunov) return run_lyapunov(f, out);
    if (*simulate) return run_simulate(f, out);
    if (*figure) return run_figure(f, out);
  } catch (const InstabilityError& e) {
    err << "error: " << e.what() << " at t = " << e.time() << '\n';
    return kExitUnstable;
  } catch (const BracketError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUnstable;
  } catch (const SingularError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUnstable;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace virodyn::cli
