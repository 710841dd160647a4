#include "virodyn/hopf.hpp"

#include <cmath>

#include "virodyn/errors.hpp"
#include "virodyn/stability.hpp"

namespace virodyn {
namespace {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

// Mode-0 coefficients and their r-derivatives.
struct ModeZero {
  double d1, d2, d3;
  double d1p, d2p, d3p;
};

ModeZero mode_zero(const Parameters& p, double r) {
  const HurwitzData h = hurwitz_coefficients(p.with_r(r), 0.0);
  const double shutoff = p.mu_v / (p.gamma * p.n_burst * p.t_max);
  return {h.d1,
          h.d2,
          h.d3,
          shutoff,
          shutoff * (p.mu_i + p.mu_v),
          p.mu_i * p.mu_v - p.mu_i * p.mu_v * shutoff};
}

Eigen::Vector3cd solve_checked(const Eigen::Matrix3cd& a, const Eigen::Vector3cd& b, const char* what) {
  Eigen::PartialPivLU<Eigen::Matrix3cd> lu(a);
  if (!(lu.rcond() > 1e-14)) {
    throw SingularError(std::string(what) + " is numerically singular");
  }
  return lu.solve(b);
}

}  // namespace

std::string to_string(CycleVerdict verdict) {
  switch (verdict) {
    case CycleVerdict::kStableCycle:
      return "stable_cycle";
    case CycleVerdict::kUnstableCycle:
      return "unstable_cycle";
    case CycleVerdict::kMarginal:
      return "marginal";
  }
  return "?";
}

double hopf_frequency(const Parameters& p, double r) {
  const double n = p.n_burst;
  return std::sqrt(p.alpha * p.gamma * n + p.alpha * p.gamma * p.mu_i * n / p.mu_v +
                   p.mu_v * r * (p.mu_i + p.mu_v) / (p.gamma * n * p.t_max));
}

double hopf_third_root(const Parameters& p, double r) {
  const double n = p.n_burst;
  return -p.mu_i - p.mu_v - p.mu_v * r / (p.gamma * n * p.t_max) - p.alpha * p.gamma * n / p.mu_v;
}

double transversality_numerator(const Parameters& p, double r) {
  const ModeZero m = mode_zero(p, r);
  return m.d3p - m.d1p * m.d2 - m.d1 * m.d2p;
}

double transversality_slope(const Parameters& p, double r) {
  const ModeZero m = mode_zero(p, r);
  return (m.d3p - m.d1p * m.d2 - m.d1 * m.d2p) / (2.0 * (m.d2 + m.d1 * m.d1));
}

HopfReport hopf_points(const Parameters& p, double n, bool ode_limit) {
  Parameters q = p.with_n(n);
  if (ode_limit) q.d_v = 0.0;
  const ModeWindow w = mode_window_at(q, 0.0, n, 0);
  if (!w.r1 || !w.r2) {
    throw DomainError("no mode-0 Hopf window: N is below N_2,0");
  }
  HopfReport h;
  h.n = n;
  h.r1 = *w.r1;
  h.r2 = *w.r2;
  h.omega1 = hopf_frequency(q, h.r1);
  h.omega2 = hopf_frequency(q, h.r2);
  h.lambda3_1 = hopf_third_root(q, h.r1);
  h.lambda3_2 = hopf_third_root(q, h.r2);
  h.transversality1 = transversality_slope(q, h.r1);
  h.transversality2 = transversality_slope(q, h.r2);
  return h;
}

EigenStructure eigen_structure(const Parameters& p, double r_j, double omega) {
  const double n = p.n_burst;
  EigenStructure e;
  e.r = r_j;
  e.omega = omega;
  e.ell = p.ell;
  e.s = -p.mu_v * r_j / (p.gamma * n * p.t_max) - p.alpha * p.gamma * n / p.mu_v;
  e.xi = p.alpha * p.gamma * n / p.mu_v - p.mu_t + (1.0 - p.mu_v / (p.gamma * n * p.t_max)) * r_j;
  e.phi << p.mu_v / (n * (e.s - kI * omega)), (p.mu_v + kI * omega) / (p.mu_i * n), 1.0;
  e.psi << -e.xi / (e.s + kI * omega), 1.0, (p.mu_i - kI * omega) / (p.mu_i * n);
  // (u, v)_2 = ell^2 sum u_i conj(v_i) for constant fields.
  const cd pairing = p.ell * p.ell * e.psi.dot(e.phi);
  if (std::abs(pairing) < 1e-300 || !std::isfinite(std::abs(pairing))) {
    throw SingularError("(phi, psi)_2 vanishes: Hopf eigenvalue is not simple");
  }
  e.kappa = 1.0 / pairing;
  return e;
}

Eigen::Vector3cd project(const EigenStructure& e, const Eigen::Vector3cd& u) {
  const double area = e.ell * e.ell;
  const cd along = e.kappa * area * e.psi.dot(u);
  const cd along_conj = std::conj(e.kappa) * area * e.psi.conjugate().dot(u);
  return along * e.phi + along_conj * e.phi.conjugate();
}

LyapunovReport lyapunov_coefficient(const Parameters& p, double r_j) {
  const Parameters q = p.with_r(r_j);
  const QuadraticInR quad = d2_quadratic(q, 0.0);
  const double scale = quad.a * r_j * r_j + std::abs(quad.b) * r_j + quad.c;
  if (!(std::abs(quad.numerator_at(r_j)) <= 1e-8 * scale)) {
    throw DomainError("r is not a mode-0 Hopf point (D_2,0 != 0)");
  }

  const double omega = hopf_frequency(q, r_j);
  const EigenStructure e = eigen_structure(q, r_j, omega);
  const Eigen::Matrix3cd m0 = mode_matrix(q, 0.0).cast<cd>();

  const double area = q.ell * q.ell;
  const double g = q.gamma;
  const double tm = q.t_max;
  const cd kap = e.kappa;
  const cd f1 = e.phi(0);
  const cd f2 = e.phi(1);
  const cd p1b = std::conj(e.psi(0));
  const cd p2b = std::conj(e.psi(1));

  LyapunovReport rep;
  rep.r = r_j;
  rep.omega = omega;

  const cd x = r_j * f1 * f1 / tm + g * f1;
  rep.k1 << x * (2.0 * area * (kap * f1 * p1b).real() - 1.0) - 2.0 * g * area * f1 * (kap * f1).real(),
      2.0 * area * x * (kap * f2 * p1b).real() + g * f1 * (1.0 - 2.0 * area * (kap * f2).real()),
      2.0 * area * x * (kap * p1b).real() - 2.0 * g * area * f1 * kap.real();

  const double f1r = f1.real();
  const double y = r_j * std::norm(f1) / tm + g * f1r;
  rep.k2 << y * (2.0 * area * (kap * f1 * p1b).real() - 1.0) - 2.0 * g * area * f1r * (kap * f1).real(),
      2.0 * area * y * (kap * f2 * p1b).real() + g * f1r * (1.0 - 2.0 * area * (kap * f2).real()),
      2.0 * area * y * (kap * p1b).real() - 2.0 * g * area * f1r * kap.real();

  const Eigen::Matrix3cd shifted = 2.0 * kI * omega * Eigen::Matrix3cd::Identity() - m0;
  rep.resolvent_k1 = solve_checked(shifted, rep.k1, "2 i omega - M0");
  rep.inverse_k2 = solve_checked(m0, rep.k2, "M0");
  const Eigen::Vector3cd& rk1 = rep.resolvent_k1;
  const Eigen::Vector3cd& mk2 = rep.inverse_k2;

  const cd jump = p2b - p1b;
  rep.g20 = -2.0 * r_j * kap * f1 * f1 * p1b * area / tm + 2.0 * g * kap * f1 * jump * area;
  rep.g11 = -2.0 * r_j * kap * std::norm(f1) * p1b * area / tm + 2.0 * g * kap * area * jump * f1r;
  rep.g02 = -2.0 * r_j * std::conj(f1) * std::conj(f1) * kap * p1b * area / tm +
            2.0 * g * kap * std::conj(f1) * jump * area;
  rep.g21_half = -2.0 * r_j * kap * p1b * area / tm * (std::conj(f1) * rk1(0) - 2.0 * f1 * mk2(0)) +
                 g * kap * jump * area * (std::conj(f1) * rk1(2) + rk1(0) - 2.0 * f1 * mk2(2) - 2.0 * mk2(0));
  rep.g21 = 2.0 * rep.g21_half;

  const cd quadratic_part =
      kI / (2.0 * omega) * (rep.g20 * rep.g11 - 2.0 * std::norm(rep.g11) - std::norm(rep.g02) / 3.0);
  rep.c1 = quadratic_part + rep.g21 / 2.0;
  rep.re_c1 = rep.c1.real();
  rep.re_c1_half = (quadratic_part + rep.g21_half / 2.0).real();

  const double band = kLyapunovBand * std::abs(rep.c1);
  if (rep.re_c1 < -band) {
    rep.verdict = CycleVerdict::kStableCycle;
  } else if (rep.re_c1 > band) {
    rep.verdict = CycleVerdict::kUnstableCycle;
  } else {
    rep.verdict = CycleVerdict::kMarginal;
  }
  return rep;
}

AsymptoticSign asymptotic_sign(const Parameters& p, double n) {
  const double a = p.alpha, g = p.gamma, mi = p.mu_i, mv = p.mu_v;
  const double ag = a * g;
  const double s = mi + mv;
  const double mi2 = mi * mi, mv2 = mv * mv;
  const double mv3 = mv2 * mv, mv4 = mv2 * mv2;
  const double mi3 = mi2 * mi, mi4 = mi2 * mi2;
  AsymptoticSign out;
  out.h = 3.0 * std::pow(ag, 5) * s * s * std::pow(n, 5) -
          std::pow(ag, 4) * mv * s * (12.0 * mi2 + 35.0 * mi * mv + 12.0 * mv2) * std::pow(n, 4) -
          std::pow(ag, 3) * mv3 *
              (26.0 * mi4 + 151.0 * mi3 * mv + 247.0 * mi2 * mv2 + 151.0 * mi * mv3 + 26.0 * mv4) *
              std::pow(n, 3) -
          ag * ag * mv3 * s *
              (12.0 * mi4 + 85.0 * mi3 * mv + 134.0 * mi2 * mv2 + 85.0 * mi * mv3 + 12.0 * mv4) * n * n -
          ag * mv4 * s * s * (mi4 + 13.0 * mi3 * mv + 35.0 * mi2 * mv2 + 13.0 * mi * mv3 + mv4) * n -
          4.0 * mi2 * std::pow(mv, 7) * s * s * s;
  out.d = 2.0 * a * (mi * mv + mv2 + ag * n) *
          (mi2 * mv2 + 2.0 * mi * mv3 + 6.0 * ag * mi * mv * n + mv4 + 6.0 * ag * mv2 * n + ag * ag * n * n) *
          (ag * ag * n * n + 3.0 * ag * mi * mv * n + 3.0 * ag * mv2 * n + mi2 * mv2 + 2.0 * mi * mv3 + mv4) *
          (mi2 * mv + 2.0 * mi * mv2 + mi * mv + mv3 + mv2 + ag * mv * n) * n;
  return out;
}

namespace {

double bisect_h(const Parameters& p, double lo, double hi) {
  double h_lo = asymptotic_sign(p, lo).h;
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    const double h_mid = asymptotic_sign(p, mid).h;
    if (h_mid == 0.0) return mid;
    if ((h_mid < 0.0) == (h_lo < 0.0)) {
      lo = mid;
      h_lo = h_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double find_n_star(const Parameters& p) {
  double lo = 1e-6;
  if (!(asymptotic_sign(p, lo).h < 0.0)) {
    throw BracketError("H is not negative near N = 0");
  }
  double hi = 2.0 * lo;
  while (asymptotic_sign(p, hi).h < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) {
      throw BracketError("no sign change of H below N = 1e12");
    }
  }
  return bisect_h(p, lo, hi);
}

std::vector<double> h_sign_changes(const Parameters& p, double lo, double hi, int samples) {
  std::vector<double> roots;
  const double step = std::log(hi / lo) / samples;
  double prev_n = lo;
  double prev_h = asymptotic_sign(p, lo).h;
  for (int i = 1; i <= samples; ++i) {
    const double n = lo * std::exp(step * i);
    const double h = asymptotic_sign(p, n).h;
    if ((h < 0.0) != (prev_h < 0.0)) roots.push_back(bisect_h(p, prev_n, n));
    prev_n = n;
    prev_h = h;
  }
  return roots;
}

double r2_prefactor(const Parameters& p, double n) {
  const Parameters q = p.with_n(n);
  const HopfReport h = hopf_points(q, n);
  const double re_c1 = lyapunov_coefficient(q, h.r2).re_c1;
  const double s = p.mu_i + p.mu_v;
  return re_c1 * p.mu_i * p.mu_i * n * n * p.t_max * p.t_max / (s * s * s);
}

}  // namespace virodyn
