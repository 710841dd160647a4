#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>

#include "virodyn/errors.hpp"
#include "virodyn/hopf.hpp"
#include "virodyn/stability.hpp"

using virodyn::Parameters;
using cd = std::complex<double>;
using Vec = Eigen::Vector3cd;

namespace {

constexpr cd kI{0.0, 1.0};

// Symmetric bilinear part of the reaction terms at the infected state.
Vec quadratic_form(const Parameters& p, const Vec& x, const Vec& y) {
  const cd cross = x(0) * y(2) + x(2) * y(0);
  return Vec(-2.0 * p.r / p.t_max * x(0) * y(0) - p.gamma * cross, p.gamma * cross, 0.0);
}

struct Normal {
  cd c1;
  cd g20, g11, g02, g21;
  Vec h20, h11;
};

// Textbook center-manifold reduction with numerically computed eigenvectors,
// q normalized by q_3 = 1 and <p, q> = 1.
Normal first_principles(const Parameters& p) {
  const Eigen::Matrix3d a = virodyn::mode_matrix(p, 0.0);
  Eigen::EigenSolver<Eigen::Matrix3d> right(a);
  int j = 0;
  for (int k = 1; k < 3; ++k) {
    if (right.eigenvalues()(k).imag() > right.eigenvalues()(j).imag()) j = k;
  }
  const double omega = right.eigenvalues()(j).imag();
  Vec q = right.eigenvectors().col(j);
  q /= q(2);

  Eigen::EigenSolver<Eigen::Matrix3d> left(a.transpose());
  int m = 0;
  for (int k = 1; k < 3; ++k) {
    if (left.eigenvalues()(k).imag() < left.eigenvalues()(m).imag()) m = k;
  }
  Vec pv = left.eigenvectors().col(m);
  pv /= std::conj(pv.dot(q));  // <p, q> = p^H q = 1

  auto inner = [](const Vec& u, const Vec& v) { return u.dot(v); };
  const Eigen::Matrix3cd ac = a.cast<cd>();
  Normal out;
  const Vec bqq = quadratic_form(p, q, q);
  const Vec bqqc = quadratic_form(p, q, q.conjugate());
  out.g20 = inner(pv, bqq);
  out.g11 = inner(pv, bqqc);
  out.g02 = inner(pv, quadratic_form(p, q.conjugate(), q.conjugate()));
  out.h20 = bqq - out.g20 * q - inner(pv.conjugate(), bqq) * q.conjugate();
  out.h11 = bqqc - out.g11 * q - inner(pv.conjugate(), bqqc) * q.conjugate();
  const Vec w20 = (2.0 * kI * omega * Eigen::Matrix3cd::Identity() - ac).partialPivLu().solve(out.h20);
  const Vec w11 = -ac.partialPivLu().solve(out.h11);
  out.g21 = 2.0 * inner(pv, quadratic_form(p, q, w11)) + inner(pv, quadratic_form(p, q.conjugate(), w20));
  out.c1 = kI / (2.0 * omega) * (out.g20 * out.g11 - 2.0 * std::norm(out.g11) - std::norm(out.g02) / 3.0) +
           out.g21 / 2.0;
  return out;
}

double max_rel(const Vec& a, const Vec& b) { return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("Hopf points at N = 300") {
  const Parameters p = Parameters::table1();
  const auto h = virodyn::hopf_points(p, 300.0);
  CHECK(h.r1 == doctest::Approx(2.1846).epsilon(1e-4));
  CHECK(h.r2 == doctest::Approx(464.1225).epsilon(1e-6));
  CHECK(virodyn::r_crit(p, 300.0) < h.r1);
  CHECK(h.omega1 == doctest::Approx(std::sqrt(0.45 + 0.0225 + 10.0 * h.r1 * 10.5 / 450.0)).epsilon(1e-12));
  CHECK(h.omega1 == doctest::Approx(0.9911).epsilon(1e-4));
  CHECK(h.lambda3_1 < 0.0);
  CHECK(h.lambda3_2 < 0.0);
  CHECK(h.transversality1 > 0.0);
  CHECK(h.transversality2 < 0.0);
  CHECK_THROWS_AS(virodyn::hopf_points(p, 150.0), virodyn::DomainError);
}

TEST_CASE("spectral structure at the Hopf points") {
  const Parameters base = Parameters::table1();
  for (double n : {200.0, 300.0, 1000.0}) {
    const auto h = virodyn::hopf_points(base, n);
    const Parameters pn = base.with_n(n);
    for (auto [r, omega, l3] : {std::tuple{h.r1, h.omega1, h.lambda3_1}, std::tuple{h.r2, h.omega2, h.lambda3_2}}) {
      const Parameters p = pn.with_r(r);
      const auto roots = virodyn::mode_eigenvalues(p, 0.0);
      const auto coeff = virodyn::hurwitz_coefficients(p, 0.0);
      CHECK(std::abs(roots[0].real()) < 1e-7 * omega);
      CHECK(std::abs(roots[1].real()) < 1e-7 * omega);
      CHECK(roots[0].imag() == doctest::Approx(omega).epsilon(1e-8));
      CHECK(roots[1].imag() == doctest::Approx(-omega).epsilon(1e-8));
      CHECK(roots[2].real() == doctest::Approx(l3).epsilon(1e-8));
      CHECK(omega * omega == doctest::Approx(coeff.d2).epsilon(1e-9));
      CHECK(omega * omega * l3 == doctest::Approx(-coeff.d3).epsilon(1e-9));
      CHECK(std::abs(coeff.big_d2) <= 1e-8 * coeff.d1 * coeff.d2);
    }
  }
}

TEST_CASE("transversality matches a central difference") {
  const Parameters base = Parameters::table1().with_n(300.0);
  const auto h = virodyn::hopf_points(base, 300.0);
  for (double r : {h.r1, h.r2}) {
    const double step = 1e-4 * r;
    const double up = virodyn::mode_eigenvalues(base.with_r(r + step), 0.0)[0].real();
    const double down = virodyn::mode_eigenvalues(base.with_r(r - step), 0.0)[0].real();
    const double fd = (up - down) / (2.0 * step);
    const double slope = virodyn::transversality_slope(base, r);
    CHECK(slope == doctest::Approx(fd).epsilon(1e-3));
    CHECK((slope > 0.0) == (virodyn::transversality_numerator(base, r) > 0.0));
  }
}

TEST_CASE("ODE limit leaves mode-0 quantities unchanged") {
  const Parameters p = Parameters::table1();
  const auto a = virodyn::hopf_points(p, 300.0);
  const auto b = virodyn::hopf_points(p, 300.0, true);
  CHECK(a.r1 == b.r1);
  CHECK(a.r2 == b.r2);
  CHECK(a.omega1 == b.omega1);
  CHECK(a.transversality2 == b.transversality2);
}

TEST_CASE("eigen-structure residuals and projection") {
  const Parameters base = Parameters::table1().with_n(300.0);
  const auto h = virodyn::hopf_points(base, 300.0);
  const Parameters p = base.with_r(h.r1);
  const auto e = virodyn::eigen_structure(p, h.r1, h.omega1);
  const Eigen::Matrix3cd m = virodyn::mode_matrix(p, 0.0).cast<cd>();

  CHECK((m * e.phi - kI * h.omega1 * e.phi).cwiseAbs().maxCoeff() < 1e-9 * e.phi.norm());
  const Vec left = e.psi.conjugate();
  CHECK((m.transpose() * left - kI * h.omega1 * left).cwiseAbs().maxCoeff() < 1e-9 * left.norm());
  CHECK(std::abs(e.kappa * p.ell * p.ell * e.psi.dot(e.phi) - 1.0) < 1e-12);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int k = 0; k < 5; ++k) {
    const Vec u(g(rng), g(rng), g(rng));
    const Vec once = virodyn::project(e, u);
    CHECK((virodyn::project(e, once) - once).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + once.norm()));
    // Adjoint relation: (M u, psi) = (u, M^* psi) with M^* psi = conj(i omega) psi.
    const cd lhs = e.psi.dot(m * u);
    const cd rhs = kI * h.omega1 * e.psi.dot(u);
    CHECK(std::abs(lhs - rhs) < 1e-9 * (std::abs(lhs) + 1.0));
  }
  CHECK((virodyn::project(e, e.phi) - e.phi).cwiseAbs().maxCoeff() < 1e-9);

  Eigen::EigenSolver<Eigen::Matrix3d> es(virodyn::mode_matrix(p, 0.0));
  for (int k = 0; k < 3; ++k) {
    if (std::abs(es.eigenvalues()(k).imag()) < 1e-12) {
      const Vec real_vec = es.eigenvectors().col(k);
      CHECK(virodyn::project(e, real_vec).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("forcing vectors and g-coefficients against first principles") {
  const Parameters base = Parameters::table1();
  for (double n : {200.0, 300.0, 500.0, 1000.0}) {
    const auto h = virodyn::hopf_points(base, n);
    for (double r : {h.r1, h.r2}) {
      CAPTURE(n);
      CAPTURE(r);
      const Parameters p = base.with_nr(n, r);
      const auto rep = virodyn::lyapunov_coefficient(p, r);
      const Normal ref = first_principles(p);
      const double g_scale = std::max({std::abs(ref.g20), std::abs(ref.g11), std::abs(ref.g02)});
      CHECK(max_rel(rep.k1, ref.h20 / 2.0) < 1e-8);
      CHECK(max_rel(rep.k2, ref.h11 / 2.0) < 1e-8);
      CHECK(std::abs(rep.g20 - ref.g20) < 1e-9 * g_scale);
      CHECK(std::abs(rep.g11 - ref.g11) < 1e-9 * g_scale);
      CHECK(std::abs(rep.g02 - ref.g02) < 1e-9 * g_scale);
      CHECK(std::abs(rep.g21 - ref.g21) < 1e-8 * std::abs(ref.g21));
      CHECK(std::abs(rep.g21 - 2.0 * rep.g21_half) < 1e-15 * std::abs(rep.g21));
      CHECK(std::abs(rep.c1 - ref.c1) < 1e-8 * std::abs(ref.c1));
      const Eigen::Matrix3cd m = virodyn::mode_matrix(p, 0.0).cast<cd>();
      CHECK(max_rel(m * rep.inverse_k2, rep.k2) < 1e-10);
    }
  }
}

TEST_CASE("Lyapunov coefficient does not depend on ell") {
  Parameters p = Parameters::table1().with_n(300.0);
  const double r2 = virodyn::hopf_points(p, 300.0).r2;
  const auto a = virodyn::lyapunov_coefficient(p, r2);
  p.ell = 2.0 * M_PI;
  const auto b = virodyn::lyapunov_coefficient(p, r2);
  CHECK(std::abs(a.c1 - b.c1) < 1e-10 * std::abs(a.c1));
}

TEST_CASE("Lyapunov verdicts at table 1") {
  const Parameters p = Parameters::table1().with_n(300.0);
  const auto h = virodyn::hopf_points(p, 300.0);
  const auto at_r2 = virodyn::lyapunov_coefficient(p, h.r2);
  CHECK(at_r2.re_c1 < 0.0);
  CHECK(at_r2.verdict == virodyn::CycleVerdict::kStableCycle);
  CHECK(virodyn::lyapunov_coefficient(p, h.r1).re_c1 < 0.0);
  CHECK_THROWS_AS(virodyn::lyapunov_coefficient(p, 0.5 * (h.r1 + h.r2)), virodyn::DomainError);
}

TEST_CASE("asymptotic sign functions") {
  const Parameters p = Parameters::table1();
  const double mi = p.mu_i, mv = p.mu_v;
  const auto zero = virodyn::asymptotic_sign(p, 0.0);
  CHECK(zero.h == doctest::Approx(-4.0 * mi * mi * std::pow(mv, 7) * std::pow(mi + mv, 3)));
  for (double n : {1e-3, 1.0, 300.0, 1e5, 1e8}) CHECK(virodyn::asymptotic_sign(p, n).d > 0.0);
  CHECK(virodyn::asymptotic_sign(p, 1e12).h > 0.0);

  const double n_star = virodyn::find_n_star(p);
  CHECK(n_star == doctest::Approx(840455.107).epsilon(1e-8));
  CHECK(std::abs(virodyn::asymptotic_sign(p, n_star).h) <= 1e-6 * std::abs(virodyn::asymptotic_sign(p, 2.0 * n_star).h));
  CHECK(virodyn::asymptotic_sign(p, n_star * (1.0 - 1e-6)).h < 0.0);
  CHECK(virodyn::asymptotic_sign(p, n_star * (1.0 + 1e-6)).h > 0.0);
  for (double n = 1e-3; n < n_star * 0.999; n *= 1.5) CHECK(virodyn::asymptotic_sign(p, n).h < 0.0);

  const auto changes = virodyn::h_sign_changes(p);
  REQUIRE(changes.size() == 1);
  CHECK(changes[0] == doctest::Approx(n_star).epsilon(1e-8));
}
