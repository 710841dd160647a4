#pragma once

#include <array>
#include <optional>
#include <string>

namespace virodyn {

// Model constants plus the two analysis parameters (burst size N, logistic
// rate r). Units: cells and virions per mm^3, time in days.
struct Parameters {
  double alpha = 1.5;     // T-cell production, day^-1 mm^-3
  double gamma = 0.001;   // infection rate, day^-1 mm^3
  double mu_t = 0.1;      // uninfected death rate, day^-1
  double mu_i = 0.5;      // infected death rate, day^-1
  double mu_v = 10.0;     // virus clearance, day^-1
  double t_max = 1500.0;  // carrying level, mm^-3
  double d_v = 1.0;       // virus diffusivity, length^2 day^-1
  double ell = 1.0;       // side of the periodic square
  double n_burst = 1000.0;
  double r = 0.2;

  // Literature values for the within-host constants, N = 1000, r = 0.2,
  // d_v = 1, ell = 1.
  static Parameters table1() { return Parameters{}; }

  Parameters with_n(double n) const {
    Parameters p = *this;
    p.n_burst = n;
    return p;
  }
  Parameters with_r(double rate) const {
    Parameters p = *this;
    p.r = rate;
    return p;
  }
  Parameters with_nr(double n, double rate) const { return with_n(n).with_r(rate); }
};

// Throws DomainError naming the first violated hypothesis: positivity of the
// constants, mu_i > mu_t, t_max > alpha / mu_t.
void validate(const Parameters& p);

enum class EquilibriumKind { kUninfected, kInfected };

struct Equilibrium {
  EquilibriumKind kind = EquilibriumKind::kUninfected;
  double t_cells = 0.0;
  double i_cells = 0.0;
  double virus = 0.0;

  std::array<double, 3> as_array() const { return {t_cells, i_cells, virus}; }
};

std::string to_string(EquilibriumKind kind);

// Reaction part of the model (diffusion of V excluded).
std::array<double, 3> reaction_rhs(const Parameters& p, double t, double i, double v);

// Uninfected T-cell level T0(r); equals alpha / mu_t at r = 0.
double uninfected_t_level(const Parameters& p);

Equilibrium uninfected_equilibrium(const Parameters& p);

// Present iff reproduction_ratio(p) > 1.
std::optional<Equilibrium> infected_equilibrium(const Parameters& p);

// Closed form of the infected state without the R0 > 1 gate. Components may be
// negative or zero outside the infected region.
Equilibrium infected_closed_form(const Parameters& p);

double reproduction_ratio(const Parameters& p);

// Interface R0 = 1 as a function of r (strictly decreasing).
double n_crit(const Parameters& p, double r);

// Inverse of n_crit; DomainError if n <= mu_v / (gamma t_max).
double r_crit(const Parameters& p, double n);

// T expressed through a constant virus level v, from the first equilibrium
// equation. Requires r > 0.
double t_of_virus(const Parameters& p, double v);

// Phi(v) - mu_v v for the scalar fixed-point form of the equilibrium problem.
// DomainError for r = 0.
double phi_fixed_point_residual(const Parameters& p, double v);

// Largest component of reaction_rhs at the equilibrium, each component divided
// by the sum of the absolute values of its terms (0 for an exact fixed point).
double relative_residual(const Parameters& p, const Equilibrium& eq);

}  // namespace virodyn
