#include "virodyn/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "virodyn/errors.hpp"

namespace virodyn {
namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string("parameter ") + name + " must be positive and finite");
  }
}

// Positive root of alpha - mu_t T + r T (1 - T / t_max) - g T = 0 where g >= 0
// is an extra linear loss rate. The conjugate form avoids cancellation when
// r - mu_t - g <= 0 and stays finite at r = 0.
double logistic_root(const Parameters& p, double extra_loss) {
  const double net = p.r - p.mu_t - extra_loss;
  const double disc = std::sqrt(net * net + 4.0 * p.alpha * p.r / p.t_max);
  if (net <= 0.0) {
    return 2.0 * p.alpha / (disc - net);
  }
  return p.t_max * (net + disc) / (2.0 * p.r);
}

}  // namespace

void validate(const Parameters& p) {
  require_positive(p.alpha, "alpha");
  require_positive(p.gamma, "gamma");
  require_positive(p.mu_t, "mu_T");
  require_positive(p.mu_i, "mu_I");
  require_positive(p.mu_v, "mu_V");
  require_positive(p.t_max, "T_max");
  require_positive(p.ell, "ell");
  require_positive(p.n_burst, "N");
  if (!(p.r >= 0.0) || !std::isfinite(p.r)) {
    throw DomainError("parameter r must be non-negative and finite");
  }
  if (!(p.d_v >= 0.0) || !std::isfinite(p.d_v)) {
    throw DomainError("parameter d_V must be non-negative and finite");
  }
  if (!(p.mu_i > p.mu_t)) {
    throw DomainError("hypothesis mu_I > mu_T violated");
  }
  if (!(p.t_max > p.alpha / p.mu_t)) {
    throw DomainError("hypothesis T_max > alpha / mu_T violated");
  }
}

std::string to_string(EquilibriumKind kind) {
  return kind == EquilibriumKind::kInfected ? "infected" : "uninfected";
}

std::array<double, 3> reaction_rhs(const Parameters& p, double t, double i, double v) {
  const double infection = p.gamma * v * t;
  return {p.alpha - p.mu_t * t + p.r * t * (1.0 - t / p.t_max) - infection,
          infection - p.mu_i * i,
          p.n_burst * p.mu_i * i - p.mu_v * v};
}

double uninfected_t_level(const Parameters& p) { return logistic_root(p, 0.0); }

Equilibrium uninfected_equilibrium(const Parameters& p) {
  return Equilibrium{EquilibriumKind::kUninfected, uninfected_t_level(p), 0.0, 0.0};
}

Equilibrium infected_closed_form(const Parameters& p) {
  const double n = p.n_burst;
  const double shutoff = 1.0 - p.mu_v / (p.gamma * n * p.t_max);
  Equilibrium eq;
  eq.kind = EquilibriumKind::kInfected;
  eq.t_cells = p.mu_v / (p.gamma * n);
  eq.i_cells = p.alpha / p.mu_i - p.mu_t * p.mu_v / (p.gamma * p.mu_i * n) +
               p.mu_v * p.r / (p.gamma * p.mu_i * n) * shutoff;
  eq.virus = n * p.mu_i * eq.i_cells / p.mu_v;
  return eq;
}

std::optional<Equilibrium> infected_equilibrium(const Parameters& p) {
  if (!(reproduction_ratio(p) > 1.0)) {
    return std::nullopt;
  }
  Equilibrium eq = infected_closed_form(p);
  if (!(eq.i_cells > 0.0) || !(eq.virus > 0.0)) {
    // R0 marginally above one while the closed form rounds to zero.
    return std::nullopt;
  }
  return eq;
}

double reproduction_ratio(const Parameters& p) {
  return p.gamma * p.n_burst * uninfected_t_level(p) / p.mu_v;
}

double n_crit(const Parameters& p, double r) {
  if (!(r >= 0.0)) {
    throw DomainError("n_crit requires r >= 0");
  }
  return p.mu_v / (p.gamma * uninfected_t_level(p.with_r(r)));
}

double r_crit(const Parameters& p, double n) {
  const double floor_n = p.mu_v / (p.gamma * p.t_max);
  if (!(n > floor_n)) {
    throw DomainError("r_crit requires N > mu_V / (gamma T_max)");
  }
  const double numerator = std::max(0.0, p.mu_t * p.mu_v - p.alpha * p.gamma * n);
  return numerator / (p.mu_v * (1.0 - floor_n / n));
}

double t_of_virus(const Parameters& p, double v) { return logistic_root(p, p.gamma * v); }

double phi_fixed_point_residual(const Parameters& p, double v) {
  if (!(p.r > 0.0)) {
    throw DomainError("phi_fixed_point_residual requires r > 0");
  }
  return p.gamma * p.n_burst * v * t_of_virus(p, v) - p.mu_v * v;
}

double relative_residual(const Parameters& p, const Equilibrium& eq) {
  const double t = eq.t_cells;
  const double i = eq.i_cells;
  const double v = eq.virus;
  const auto f = reaction_rhs(p, t, i, v);
  const double infection = std::abs(p.gamma * v * t);
  const std::array<double, 3> scale = {
      p.alpha + std::abs(p.mu_t * t) + std::abs(p.r * t) + std::abs(p.r * t * t / p.t_max) + infection,
      infection + std::abs(p.mu_i * i),
      std::abs(p.n_burst * p.mu_i * i) + std::abs(p.mu_v * v)};
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (scale[k] > 0.0) {
      worst = std::max(worst, std::abs(f[k]) / scale[k]);
    }
  }
  return worst;
}

}  // namespace virodyn
