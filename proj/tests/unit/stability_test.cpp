#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "virodyn/errors.hpp"
#include "virodyn/stability.hpp"

using virodyn::Parameters;
using virodyn::Zone;

namespace {

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  const bool lo_negative = f(lo) < 0.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    ((f(mid) < 0.0) == lo_negative ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// d1 = -tr M, d2 = sum of principal 2x2 minors, d3 = -det M.
std::array<double, 3> char_poly(const Eigen::Matrix3d& m) {
  const double minors = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                        m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  return {-m.trace(), minors, -m.determinant()};
}

double d2_of(const Parameters& p, double lambda, double n, double r) {
  return virodyn::hurwitz_coefficients(p.with_nr(n, r), lambda).big_d2;
}

}  // namespace

TEST_CASE("Hurwitz coefficients match the mode matrix") {
  const Parameters base = Parameters::table1();
  for (double n : {50.0, 300.0, 1000.0}) {
    for (double r : {0.1, 2.0, 150.0}) {
      for (double lambda : {0.0, 39.47, 500.0}) {
        const Parameters p = base.with_nr(n, r);
        if (virodyn::reproduction_ratio(p) <= 1.0) {
          CHECK_THROWS_AS(virodyn::hurwitz_coefficients(p, lambda), virodyn::DomainError);
          continue;
        }
        const auto h = virodyn::hurwitz_coefficients(p, lambda);
        const auto c = char_poly(virodyn::mode_matrix(p, lambda));
        CHECK(h.d1 == doctest::Approx(c[0]).epsilon(1e-12));
        CHECK(h.d2 == doctest::Approx(c[1]).epsilon(1e-12));
        CHECK(h.d3 == doctest::Approx(c[2]).epsilon(1e-10));
        const auto q = virodyn::d2_quadratic(p, lambda);
        CHECK(q.d2_at(r) == doctest::Approx(h.big_d2).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("r-discriminant factors through the N-quadratic") {
  const Parameters base = Parameters::table1();
  for (double lambda : {0.0, 3.0, 100.0, 1000.0}) {
    for (double n : {50.0, 169.0, 300.0, 5000.0}) {
      const Parameters p = base.with_n(n);
      const auto qr = virodyn::d2_quadratic(p, lambda);
      const auto qn = virodyn::r_discriminant_quadratic(p, lambda);
      const double scale = p.gamma * p.gamma * std::pow(p.mu_v, 5) * n * n * p.t_max * p.t_max;
      const double rhs = scale * ((qn.a * n + qn.b) * n + qn.c);
      const double mag = qr.b * qr.b + 4.0 * std::abs(qr.a * qr.c);
      CHECK(std::abs(qr.discriminant() - rhs) <= 1e-10 * mag);
      CHECK(qn.delta == doctest::Approx(qn.b * qn.b - 4.0 * qn.a * qn.c));
    }
  }
}

TEST_CASE("mode-0 window at N = 300") {
  const Parameters p = Parameters::table1();
  const auto w = virodyn::mode_window_at(p, 0.0, 300.0);
  REQUIRE(w.r1.has_value());
  REQUIRE(w.r2.has_value());
  auto f = [&](double r) { return d2_of(p, 0.0, 300.0, r); };
  CHECK(*w.r1 == doctest::Approx(bisect(f, 0.1, 50.0)).epsilon(1e-10));
  CHECK(*w.r2 == doctest::Approx(bisect(f, 50.0, 2000.0)).epsilon(1e-10));
  CHECK(*w.r1 == doctest::Approx(2.1846).epsilon(1e-4));
  CHECK(*w.r2 == doctest::Approx(464.1225).epsilon(1e-6));
  CHECK(f(0.5 * (*w.r1 + *w.r2)) < 0.0);
}

TEST_CASE("window opens at N_2,0") {
  const Parameters p = Parameters::table1();
  const auto w = virodyn::mode_window_at(p, 0.0, 300.0);
  REQUIRE(w.n1.has_value());
  REQUIRE(w.n2.has_value());
  // Independent oracle: sign of B^2 - 4AC in N at fixed lambda.
  auto disc = [&](double n) { return virodyn::d2_quadratic(p.with_n(n), 0.0).discriminant(); };
  CHECK(*w.n1 == doctest::Approx(bisect(disc, 100.0, 155.0)).epsilon(1e-9));
  CHECK(*w.n2 == doctest::Approx(bisect(disc, 155.0, 250.0)).epsilon(1e-9));
  CHECK(*w.n1 == doctest::Approx(140.016).epsilon(1e-5));
  CHECK(*w.n2 == doctest::Approx(169.807).epsilon(1e-5));
  CHECK_FALSE(virodyn::mode_window_at(p, 0.0, 150.0).r1.has_value());
  CHECK_FALSE(virodyn::mode_window_at(p, 0.0, 30.0).r1.has_value());
  REQUIRE(w.n0.has_value());
  // B_0 turns negative before the window opens.
  CHECK(*w.n1 < *w.n0);
  CHECK(*w.n0 < *w.n2);
  CHECK(virodyn::d2_quadratic(p.with_n(*w.n0), 0.0).b == doctest::Approx(0.0).scale(1e6));
}

TEST_CASE("N_2,0 approaches its large-T_max asymptote") {
  const Parameters base = Parameters::table1();
  const double mi = base.mu_i, mv = base.mu_v, mt = base.mu_t;
  const double lead = mi * mi + 3.0 * mi * mv + mv * mv + 2.0 * std::sqrt(mi * mt * mv * (mi + mv));
  double prev_gap = HUGE_VAL;
  for (double scale : {1.0, 10.0, 100.0, 1000.0}) {
    Parameters p = base;
    p.t_max *= scale;
    const double n2 = *virodyn::mode_window_at(p, 0.0, 1.0).n2;
    const double gap = std::abs(n2 * p.gamma * mi * p.t_max / lead - 1.0);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-3);
}

TEST_CASE("thresholds for d_V = 1, ell = 1") {
  const Parameters p = Parameters::table1();
  const auto t = virodyn::thresholds(p);
  CHECK(t.lambda2 == doctest::Approx(1239.5));
  CHECK(t.lambda0 == doctest::Approx(2489.5));
  const auto table = virodyn::build_mode_table_covering(p.ell, t.lambda2);
  CHECK(table[static_cast<std::size_t>(t.k2)].lambda < t.lambda2);
  CHECK(table[static_cast<std::size_t>(t.k2) + 1].lambda >= t.lambda2);
  CHECK(table[static_cast<std::size_t>(t.k2)].n == 29);
  CHECK_FALSE(t.degenerate);

  Parameters small = p;
  small.alpha = 500.0;
  CHECK_THROWS_AS(virodyn::thresholds(small), virodyn::DomainError);
}

TEST_CASE("classification of sample points") {
  const Parameters p = Parameters::table1();
  CHECK(virodyn::classify_point(p.with_nr(100.0, 0.01)).zone == Zone::kUninfected);
  CHECK(std::isnan(virodyn::classify_point(p.with_nr(100.0, 0.01)).d2_mode0));
  CHECK(virodyn::classify_point(p.with_nr(300.0, 1.0)).zone == Zone::kInfectedStable);
  CHECK(virodyn::classify_point(p.with_nr(300.0, 200.0)).zone == Zone::kPInterior);
  CHECK(virodyn::classify_point(p.with_nr(300.0, 500.0)).zone == Zone::kInfectedStable);
  const double r1 = *virodyn::mode_window_at(p, 0.0, 300.0).r1;
  CHECK(virodyn::classify_point(p.with_nr(300.0, r1)).zone == Zone::kPBoundary);

  const double nc = virodyn::n_crit(p, 0.4);
  const auto edge = virodyn::classify_point(p.with_nr(nc, 0.4));
  CHECK(edge.boundary_ambiguous);
  CHECK(edge.zone == Zone::kUninfected);

  const auto v = virodyn::classify_point(p.with_nr(300.0, 200.0));
  REQUIRE(v.per_mode.size() == static_cast<std::size_t>(v.k2) + 1);
  CHECK(v.per_mode[0].in_pk);
}

TEST_CASE("mode 0 governs: P_k membership implies P_0 membership") {
  const Parameters p = Parameters::table1();
  const auto ctx = virodyn::StabilityContext::build(p);
  for (double n = 150.0; n <= 3000.0; n *= 1.3) {
    for (double r = 0.5; r <= 5000.0; r *= 1.7) {
      const auto v = virodyn::classify_point(p.with_nr(n, r), ctx);
      for (const auto& m : v.per_mode) {
        if (m.in_pk) CHECK(v.per_mode[0].in_pk);
      }
    }
  }
}

TEST_CASE("zero diffusion collapses to mode 0") {
  Parameters p = Parameters::table1();
  p.d_v = 0.0;
  const auto v = virodyn::classify_point(p.with_nr(300.0, 200.0));
  CHECK(v.zone == Zone::kPInterior);
  CHECK(v.k2 == 0);
}

TEST_CASE("Routh-Hurwitz agrees with eigenvalues") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> log_n(1.5, 4.0), log_r(-2.0, 3.5), log_l(-1.0, 3.5);
  int checked = 0;
  for (int k = 0; k < 3000; ++k) {
    const Parameters p = Parameters::table1().with_nr(std::pow(10.0, log_n(rng)), std::pow(10.0, log_r(rng)));
    if (virodyn::reproduction_ratio(p) <= 1.0) continue;
    const double lambda = std::pow(10.0, log_l(rng));
    const auto h = virodyn::hurwitz_coefficients(p, lambda);
    Eigen::EigenSolver<Eigen::Matrix3d> es(virodyn::mode_matrix(p, lambda));
    const double top = es.eigenvalues().real().maxCoeff();
    const auto roots = virodyn::mode_eigenvalues(p, lambda);
    CHECK(roots[0].real() == doctest::Approx(top).epsilon(1e-8).scale(1.0));
    CHECK(virodyn::orlando_product(roots) ==
          doctest::Approx(h.big_d2).epsilon(1e-7).scale(std::abs(h.d1 * h.d2)));
    if (std::abs(top) > 1e-8) {
      CHECK(virodyn::routh_hurwitz_stable(h) == (top < 0.0));
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("cubic roots are ordered and exact for known factors") {
  // (x + 1)(x^2 + 4) = x^3 + x^2 + 4x + 4
  const auto roots = virodyn::cubic_roots(1.0, 4.0, 4.0);
  CHECK(roots[0].real() == doctest::Approx(0.0).scale(1.0));
  CHECK(roots[0].imag() == doctest::Approx(2.0));
  CHECK(roots[1].imag() == doctest::Approx(-2.0));
  CHECK(roots[2].real() == doctest::Approx(-1.0));
  CHECK(roots[2].imag() == 0.0);
}

TEST_CASE("nesting of windows across modes") {
  const Parameters p = Parameters::table1();
  const auto ctx = virodyn::StabilityContext::build(p);
  const std::int64_t last = std::min<std::int64_t>(ctx.thresholds.k2, 20);
  for (std::int64_t k = 0; k < last; ++k) {
    const auto a = virodyn::mode_window(p, ctx.table, k, 2000.0);
    const auto b = virodyn::mode_window(p, ctx.table, k + 1, 2000.0);
    REQUIRE(a.n2.has_value());
    REQUIRE(b.n2.has_value());
    CHECK(*a.n2 < *b.n2);
    if (b.r1 && a.r1) {
      CHECK(*a.r1 <= *b.r1);
      CHECK(*b.r1 < *b.r2);
      CHECK(*b.r2 <= *a.r2);
    }
  }
}

TEST_CASE("essential spectrum") {
  const Parameters p = Parameters::table1().with_nr(300.0, 2.0);
  const auto e = virodyn::essential_spectrum(p);
  CHECK(e[0] == doctest::Approx(virodyn::mode_matrix(p, 0.0)(0, 0)));
  CHECK(e[1] == -p.mu_i);
}

TEST_CASE("sweep is independent of worker count") {
  const Parameters p = Parameters::table1();
  const virodyn::SweepRange n{50.0, 1200.0, 13};
  const virodyn::SweepRange r{0.0, 600.0, 17};
  std::ostringstream one, many;
  virodyn::write_sweep_csv(one, virodyn::sweep(p, n, r, 1));
  virodyn::write_sweep_csv(many, virodyn::sweep(p, n, r, 3));
  CHECK(one.str() == many.str());
  CHECK(one.str().rfind("N,r,R0,zone,D2_mode0,K2,in_P0,", 0) == 0);
  CHECK_THROWS_AS(virodyn::sweep(p, {1.0, 0.5, 4}, r, 1), virodyn::DomainError);
}
