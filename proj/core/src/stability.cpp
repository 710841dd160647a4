#include "virodyn/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "virodyn/csv.hpp"
#include "virodyn/errors.hpp"

namespace virodyn {
namespace {

void require_infected(const Parameters& p) {
  if (!(reproduction_ratio(p) > 1.0)) {
    throw DomainError("linearization at the infected state requires R0 > 1");
  }
}

std::complex<double> newton_polish(std::complex<double> z, double d1, double d2, double d3) {
  const std::complex<double> f = ((z + d1) * z + d2) * z + d3;
  const std::complex<double> df = (3.0 * z + 2.0 * d1) * z + d2;
  if (std::abs(df) == 0.0) return z;
  return z - f / df;
}

}  // namespace

std::string to_string(Zone zone) {
  switch (zone) {
    case Zone::kUninfected:
      return "U";
    case Zone::kInfectedStable:
      return "I_stable";
    case Zone::kPBoundary:
      return "P_boundary";
    case Zone::kPInterior:
      return "P_interior";
  }
  return "?";
}

Eigen::Matrix3d mode_matrix(const Parameters& p, double lambda_k) {
  require_infected(p);
  const double n = p.n_burst;
  const double logistic = p.mu_v * p.r / (p.gamma * n * p.t_max);
  const double uptake = p.alpha * p.gamma * n / p.mu_v;
  Eigen::Matrix3d m;
  m << -(logistic + uptake), 0.0, -p.mu_v / n,
      uptake - p.mu_t + p.r * (1.0 - p.mu_v / (p.gamma * n * p.t_max)), -p.mu_i, p.mu_v / n,
      0.0, n * p.mu_i, -p.d_v * lambda_k - p.mu_v;
  return m;
}

HurwitzData hurwitz_coefficients(const Parameters& p, double lambda_k) {
  require_infected(p);
  const double n = p.n_burst;
  const double dl = p.d_v * lambda_k;
  const double logistic = p.mu_v * p.r / (p.gamma * n * p.t_max);
  const double uptake = p.alpha * p.gamma * n / p.mu_v;
  HurwitzData h;
  h.lambda_k = lambda_k;
  h.d1 = dl + p.mu_i + p.mu_v + logistic + uptake;
  h.d2 = p.mu_i * dl + p.alpha * p.gamma * n + uptake * (p.mu_i + dl) +
         logistic * (p.mu_i + p.mu_v + dl);
  h.d3 = p.mu_i * p.mu_v * (p.r - p.mu_t) + p.mu_i * uptake * (p.mu_v + dl) +
         p.mu_i * logistic * (dl - p.mu_v);
  h.big_d2 = h.d1 * h.d2 - h.d3;
  return h;
}

QuadraticInR d2_quadratic(const Parameters& p, double lambda_k) {
  const double al = p.alpha, ga = p.gamma, mt = p.mu_t, mi = p.mu_i, mv = p.mu_v;
  const double tm = p.t_max, n = p.n_burst;
  const double dl = p.d_v * lambda_k;
  const double agn = al * ga * n;
  QuadraticInR q;
  q.a = mv * mv * mv * mv * (mi + mv + dl);
  q.b = ga * mv * mv * n * tm *
        (mv * dl * dl + 2.0 * agn * dl + 2.0 * mv * mv * dl + 2.0 * mi * mv * dl -
         ga * mi * mv * n * tm + 2.0 * agn * mi + 2.0 * agn * mv + mi * mi * mv + 3.0 * mi * mv * mv +
         mv * mv * mv);
  q.c = n * n * ga * ga * tm * tm *
        (mi * mv * mv * dl * dl + agn * mv * dl * dl + agn * agn * dl + 2.0 * agn * mv * mv * dl +
         mi * mv * mv * mv * dl + mi * mi * mv * mv * dl + 2.0 * agn * mi * mv * dl +
         agn * mv * mv * mv + agn * mi * mv * mv + agn * mi * mi * mv + agn * agn * mv +
         agn * agn * mi + mi * mt * mv * mv * mv);
  q.denominator = ga * ga * mv * mv * n * n * tm * tm;
  return q;
}

QuadraticInN r_discriminant_quadratic(const Parameters& p, double lambda_k) {
  const double al = p.alpha, ga = p.gamma, mt = p.mu_t, mi = p.mu_i, mv = p.mu_v;
  const double tm = p.t_max;
  const double dl = p.d_v * lambda_k;
  const double poly = dl * dl + 2.0 * (mi + mv) * dl + mi * mi + 3.0 * mi * mv + mv * mv;
  QuadraticInN q;
  q.a = ga * ga * mi * tm * (mi * mv * tm - 4.0 * al * dl - 4.0 * al * (mi + mv));
  q.b = -2.0 * ga * mi * mv * (poly * tm - 4.0 * al * dl - 4.0 * al * (mi + mv));
  const double sq = dl * dl - mi * mi;
  q.c = mv * (sq * sq + 4.0 * mv * dl * dl * dl + 6.0 * mv * (mi + mv) * dl * dl +
              4.0 * mv * (mv * mv + 3.0 * mi * mv + mi * (2.0 * mi - mt)) * dl +
              2.0 * mi * mi * mv * (3.0 * mi - 2.0 * mt) + 6.0 * mi * mv * mv * mv +
              mi * mv * mv * (11.0 * mi - 4.0 * mt) + mv * mv * mv * mv);
  q.delta = q.b * q.b - 4.0 * q.a * q.c;
  return q;
}

bool routh_hurwitz_stable(const HurwitzData& h) {
  return h.d1 > 0.0 && h.d3 > 0.0 && h.big_d2 > 0.0;
}

std::array<std::complex<double>, 3> cubic_roots(double d1, double d2, double d3) {
  Eigen::Matrix3d companion;
  companion << -d1, -d2, -d3,
      1.0, 0.0, 0.0,
      0.0, 1.0, 0.0;
  Eigen::EigenSolver<Eigen::Matrix3d> solver(companion, /*computeEigenvectors=*/false);
  const auto& ev = solver.eigenvalues();
  std::array<std::complex<double>, 3> roots;
  for (int j = 0; j < 3; ++j) {
    roots[j] = newton_polish(ev[j], d1, d2, d3);
    // Real coefficients: a root that was real stays real after polishing.
    if (ev[j].imag() == 0.0) roots[j] = {roots[j].real(), 0.0};
  }
  std::sort(roots.begin(), roots.end(), [](const auto& x, const auto& y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  return roots;
}

std::array<std::complex<double>, 3> mode_eigenvalues(const Parameters& p, double lambda_k) {
  const HurwitzData h = hurwitz_coefficients(p, lambda_k);
  return cubic_roots(h.d1, h.d2, h.d3);
}

double orlando_product(const std::array<std::complex<double>, 3>& nu) {
  return -((nu[0] + nu[1]) * (nu[1] + nu[2]) * (nu[0] + nu[2])).real();
}

Thresholds thresholds(const Parameters& p) {
  if (!(p.d_v > 0.0)) {
    throw DomainError("Lambda thresholds require d_V > 0");
  }
  const double lambda2 = p.mu_i * p.mu_v * p.t_max / (4.0 * p.alpha * p.d_v) - (p.mu_i + p.mu_v) / p.d_v;
  if (!(lambda2 > 0.0)) {
    throw DomainError("Lambda_2 <= 0: T_max too small for the largeness hypothesis");
  }
  return thresholds(p, build_mode_table_covering(p.ell, lambda2 * (1.0 + kBoundaryTolerance)));
}

Thresholds thresholds(const Parameters& p, const ModeTable& table) {
  if (!(p.d_v > 0.0)) {
    throw DomainError("Lambda thresholds require d_V > 0");
  }
  Thresholds t;
  t.lambda0 = p.mu_i * p.mu_v * p.t_max / (2.0 * p.alpha * p.d_v) - (p.mu_i + p.mu_v) / p.d_v;
  t.lambda2 = p.mu_i * p.mu_v * p.t_max / (4.0 * p.alpha * p.d_v) - (p.mu_i + p.mu_v) / p.d_v;
  if (!(t.lambda2 > 0.0)) {
    throw DomainError("Lambda_2 <= 0: T_max too small for the largeness hypothesis");
  }
  if (table.entries.empty() || table.entries.back().lambda < t.lambda2) {
    throw DomainError("mode table does not reach Lambda_2");
  }
  t.k2 = 0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const double lk = table[k].lambda;
    if (std::abs(lk - t.lambda2) < kBoundaryTolerance * t.lambda2) t.degenerate = true;
    if (lk < t.lambda2) t.k2 = static_cast<std::int64_t>(k);
  }
  return t;
}

ModeWindow mode_window_at(const Parameters& p, double lambda_k, double n, std::int64_t k) {
  if (!(n > 0.0)) {
    throw DomainError("mode_window requires N > 0");
  }
  const double dl = p.d_v * lambda_k;
  ModeWindow w;
  w.k = k;
  w.lambda = lambda_k;
  const QuadraticInN qn = r_discriminant_quadratic(p, lambda_k);
  w.a_k = qn.a;
  w.b_k = qn.b;
  w.c_k = qn.c;
  w.delta_k = qn.delta;

  const double n0_den = p.gamma * (2.0 * p.alpha * dl + 2.0 * p.alpha * p.mu_i + 2.0 * p.alpha * p.mu_v -
                                   p.mu_i * p.mu_v * p.t_max);
  if (n0_den < 0.0) {
    w.n0 = -p.mu_v *
           (dl * dl + 2.0 * (p.mu_i + p.mu_v) * dl + 3.0 * p.mu_i * p.mu_v + p.mu_i * p.mu_i +
            p.mu_v * p.mu_v) /
           n0_den;
  }
  if (qn.a > 0.0 && qn.delta >= 0.0) {
    const double root = std::sqrt(qn.delta);
    // -b > 0 here, so the smaller root uses the conjugate form.
    w.n1 = 2.0 * qn.c / (-qn.b + root);
    w.n2 = (-qn.b + root) / (2.0 * qn.a);
  }

  const QuadraticInR qr = d2_quadratic(p.with_n(n), lambda_k);
  if (qr.b < 0.0) {
    const double disc = qr.discriminant();
    const bool at_double_root = w.n2 && std::abs(n - *w.n2) <= 1e-12 * *w.n2;
    if (disc >= 0.0 && !at_double_root) {
      const double root = std::sqrt(disc);
      w.r1 = 2.0 * qr.c / (-qr.b + root);
      w.r2 = (-qr.b + root) / (2.0 * qr.a);
    } else if (at_double_root) {
      w.r1 = -qr.b / (2.0 * qr.a);
      w.r2 = w.r1;
    }
  }
  return w;
}

ModeWindow mode_window(const Parameters& p, const ModeTable& table, std::int64_t k, double n) {
  if (k < 0 || static_cast<std::size_t>(k) >= table.size()) {
    throw std::out_of_range("mode index outside table");
  }
  return mode_window_at(p, table[static_cast<std::size_t>(k)].lambda, n, k);
}

std::array<double, 2> essential_spectrum(const Parameters& p) {
  const double n = p.n_burst;
  return {-p.mu_v * p.r / (p.gamma * n * p.t_max) - p.alpha * p.gamma * n / p.mu_v, -p.mu_i};
}

StabilityContext StabilityContext::build(const Parameters& p) {
  StabilityContext ctx;
  if (p.d_v > 0.0) {
    ctx.thresholds = virodyn::thresholds(p);
    const double reach = ctx.thresholds.lambda2 * (1.0 + kBoundaryTolerance);
    ctx.table = build_mode_table_covering(p.ell, reach);
    ctx.thresholds = virodyn::thresholds(p, ctx.table);
  } else {
    // Without diffusion every mode shares the mode-0 matrix.
    ctx.table = build_mode_table(p.ell, 0);
    ctx.thresholds.lambda0 = std::numeric_limits<double>::infinity();
    ctx.thresholds.lambda2 = std::numeric_limits<double>::infinity();
    ctx.thresholds.k2 = 0;
  }
  return ctx;
}

RegionVerdict classify_point(const Parameters& p) {
  return classify_point(p, StabilityContext::build(p));
}

RegionVerdict classify_point(const Parameters& p, const StabilityContext& ctx) {
  RegionVerdict v;
  v.r0 = reproduction_ratio(p);
  v.k2 = ctx.thresholds.k2;
  v.degenerate = ctx.thresholds.degenerate;
  v.governing_mode = 0;
  v.d2_mode0 = std::numeric_limits<double>::quiet_NaN();
  if (std::abs(v.r0 - 1.0) <= kBoundaryTolerance) {
    v.boundary_ambiguous = true;
    v.zone = Zone::kUninfected;
    return v;
  }
  if (v.r0 < 1.0) {
    v.zone = Zone::kUninfected;
    return v;
  }

  v.d2_mode0 = hurwitz_coefficients(p, 0.0).big_d2;
  v.per_mode.reserve(static_cast<std::size_t>(v.k2) + 1);
  Zone mode0_zone = Zone::kInfectedStable;
  for (std::int64_t k = 0; k <= v.k2; ++k) {
    const QuadraticInR q = d2_quadratic(p, ctx.table[static_cast<std::size_t>(k)].lambda);
    const double value = q.numerator_at(p.r);
    const double scale = q.a * p.r * p.r + std::abs(q.b) * p.r + q.c;
    const bool on_edge = std::abs(value) <= kBoundaryTolerance * scale;
    v.per_mode.push_back({k, on_edge || value < 0.0});
    if (k == 0) {
      mode0_zone = on_edge ? Zone::kPBoundary : (value < 0.0 ? Zone::kPInterior : Zone::kInfectedStable);
    }
  }
  v.zone = mode0_zone;
  return v;
}

double SweepRange::at(int i) const {
  if (steps <= 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
}

int default_worker_count() {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers <= 0) workers = 1;
  if (const char* env = std::getenv("VIRODYN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) workers = std::min(workers, cap);
  }
  return workers;
}

std::vector<SweepRow> sweep(const Parameters& base, const SweepRange& n_range, const SweepRange& r_range,
                            int workers) {
  if (n_range.steps < 2 || r_range.steps < 2) {
    throw DomainError("sweep needs at least two steps per axis");
  }
  if (!(n_range.lo > 0.0) || !(n_range.hi > n_range.lo) || !(r_range.lo >= 0.0) ||
      !(r_range.hi > r_range.lo)) {
    throw DomainError("sweep ranges must be positive and increasing");
  }
  const StabilityContext ctx = StabilityContext::build(base);
  const std::size_t total = static_cast<std::size_t>(n_range.steps) * static_cast<std::size_t>(r_range.steps);
  std::vector<SweepRow> rows(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      for (std::size_t idx = next++; idx < total; idx = next++) {
        const int i = static_cast<int>(idx / static_cast<std::size_t>(r_range.steps));
        const int j = static_cast<int>(idx % static_cast<std::size_t>(r_range.steps));
        SweepRow& row = rows[idx];
        row.n = n_range.at(i);
        row.r = r_range.at(j);
        row.verdict = classify_point(base.with_nr(row.n, row.r), ctx);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (workers <= 0) workers = default_worker_count();
  workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), total));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, int max_modes) {
  std::int64_t k2 = 0;
  for (const auto& row : rows) k2 = std::max(k2, row.verdict.k2);
  const std::int64_t columns = std::min<std::int64_t>(k2 + 1, std::max(max_modes, 0));
  out << "N,r,R0,zone,D2_mode0,K2";
  for (std::int64_t k = 0; k < columns; ++k) out << ",in_P" << k;
  out << '\n';
  for (const auto& row : rows) {
    const RegionVerdict& v = row.verdict;
    out << format_number(row.n) << ',' << format_number(row.r) << ',' << format_number(v.r0) << ','
        << to_string(v.zone) << ',' << format_number(v.d2_mode0) << ',' << v.k2;
    for (std::int64_t k = 0; k < columns; ++k) {
      const bool in = static_cast<std::size_t>(k) < v.per_mode.size() && v.per_mode[k].in_pk;
      out << ',' << (in ? 1 : 0);
    }
    out << '\n';
  }
}

}  // namespace virodyn
