#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "virodyn/model.hpp"

namespace virodyn {

// Verdict band on Re c1, relative to |c1|. The raw magnitude of c1 depends on
// the eigenvector normalization (third component of phi fixed to 1), so an
// absolute band would not be meaningful.
inline constexpr double kLyapunovBand = 1e-8;

struct HopfReport {
  double n = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
  double lambda3_1 = 0.0;
  double lambda3_2 = 0.0;
  double transversality1 = 0.0;
  double transversality2 = 0.0;
};

struct EigenStructure {
  double r = 0.0;
  double omega = 0.0;
  double s = 0.0;
  double xi = 0.0;
  double ell = 1.0;
  Eigen::Vector3cd phi;  // M0 phi = i omega phi, phi_3 = 1
  Eigen::Vector3cd psi;  // conj(psi) is the left eigenvector for i omega
  std::complex<double> kappa;  // 1 / (phi, psi)_2
};

enum class CycleVerdict { kStableCycle, kUnstableCycle, kMarginal };

std::string to_string(CycleVerdict verdict);

struct LyapunovReport {
  double r = 0.0;
  double omega = 0.0;
  std::complex<double> g20;
  std::complex<double> g11;
  std::complex<double> g02;
  std::complex<double> g21;
  std::complex<double> c1;
  double re_c1 = 0.0;
  CycleVerdict verdict = CycleVerdict::kMarginal;
  // Same assembly with half of g21, the value obtained when the cubic
  // bracket omits the factor 2 from the center-manifold expansion.
  std::complex<double> g21_half;
  double re_c1_half = 0.0;
  Eigen::Vector3cd k1;  // quadratic forcing of z^2
  Eigen::Vector3cd k2;  // quadratic forcing of z zbar, halved
  Eigen::Vector3cd resolvent_k1;  // (2 i omega - M0)^{-1} k1
  Eigen::Vector3cd inverse_k2;    // M0^{-1} k2
};

struct AsymptoticSign {
  double h = 0.0;
  double d = 0.0;
};

// Mode-0 quantities; none depends on d_V. With ode_limit the parameters are
// evaluated with d_V = 0 as a regression anchor.
HopfReport hopf_points(const Parameters& p, double n, bool ode_limit = false);

double hopf_frequency(const Parameters& p, double r);
double hopf_third_root(const Parameters& p, double r);

// d3' - d1' d2 - d1 d2' at mode 0 (derivatives in r).
double transversality_numerator(const Parameters& p, double r);
double transversality_slope(const Parameters& p, double r);

EigenStructure eigen_structure(const Parameters& p, double r_j, double omega);

// Spectral projection onto span{phi, conj(phi)} for spatially constant fields.
Eigen::Vector3cd project(const EigenStructure& e, const Eigen::Vector3cd& u);

// Uses p.n_burst; r_j must be a mode-0 Hopf point.
LyapunovReport lyapunov_coefficient(const Parameters& p, double r_j);

AsymptoticSign asymptotic_sign(const Parameters& p, double n);

// First positive zero of H: doubling bracket from 1e-6, then bisection.
double find_n_star(const Parameters& p);

// All sign changes of H on a log grid over [lo, hi], each refined by bisection.
std::vector<double> h_sign_changes(const Parameters& p, double lo = 1e-3, double hi = 1e12,
                                   int samples = 4000);

// Re c1(r2) * mu_I^2 N^2 T_max^2 / (mu_I + mu_V)^3, the scaled large-T_max
// prefactor (claimed value -50).
double r2_prefactor(const Parameters& p, double n);

}  // namespace virodyn
