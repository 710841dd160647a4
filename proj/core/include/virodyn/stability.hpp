#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "virodyn/model.hpp"
#include "virodyn/spectral.hpp"

namespace virodyn {

// Relative band used for zone assignment on R0 - 1 and on the Hurwitz
// determinant, and for the Lambda_2 resonance check.
inline constexpr double kBoundaryTolerance = 1e-9;

// Coefficients of the characteristic cubic nu^3 + d1 nu^2 + d2 nu + d3 of the
// mode matrix, and the leading Hurwitz determinant d1 d2 - d3.
struct HurwitzData {
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
  double big_d2 = 0.0;
  double lambda_k = 0.0;
};

// D2_k = (A r^2 + B r + C) / (gamma^2 mu_v^2 N^2 t_max^2).
struct QuadraticInR {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double denominator = 1.0;

  double numerator_at(double r) const { return (a * r + b) * r + c; }
  double d2_at(double r) const { return numerator_at(r) / denominator; }
  double discriminant() const { return b * b - 4.0 * a * c; }
};

// Sign carrier of the r-discriminant as a quadratic a N^2 + b N + c.
struct QuadraticInN {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double delta = 0.0;  // b^2 - 4 a c
};

struct ModeWindow {
  std::int64_t k = 0;
  double lambda = 0.0;
  double a_k = 0.0;
  double b_k = 0.0;
  double c_k = 0.0;
  double delta_k = 0.0;
  std::optional<double> n0;  // zero of B_k(N); absent when lambda >= Lambda_0
  std::optional<double> n1;  // roots of a N^2 + b N + c; absent unless a_k > 0
  std::optional<double> n2;
  std::optional<double> r1;  // D2_k < 0 for r1 < r < r2
  std::optional<double> r2;
};

struct Thresholds {
  double lambda0 = 0.0;
  double lambda2 = 0.0;
  std::int64_t k2 = 0;         // largest distinct index with lambda_k < Lambda_2
  bool degenerate = false;     // some lambda_k within tolerance of Lambda_2
};

enum class Zone { kUninfected, kInfectedStable, kPBoundary, kPInterior };

std::string to_string(Zone zone);

struct ModeMembership {
  std::int64_t k = 0;
  bool in_pk = false;
};

struct RegionVerdict {
  Zone zone = Zone::kUninfected;
  std::vector<ModeMembership> per_mode;  // k = 0..K2, empty in U
  std::int64_t governing_mode = 0;
  double r0 = 0.0;
  double d2_mode0 = 0.0;  // NaN in U
  std::int64_t k2 = 0;
  bool boundary_ambiguous = false;  // |R0 - 1| within tolerance
  bool degenerate = false;          // Lambda_2 resonance
};

// Mode table and thresholds depend only on the fixed constants, not on (N, r),
// so sweeps build them once.
struct StabilityContext {
  ModeTable table;
  Thresholds thresholds;

  static StabilityContext build(const Parameters& p);
};

Eigen::Matrix3d mode_matrix(const Parameters& p, double lambda_k);

HurwitzData hurwitz_coefficients(const Parameters& p, double lambda_k);

QuadraticInR d2_quadratic(const Parameters& p, double lambda_k);

QuadraticInN r_discriminant_quadratic(const Parameters& p, double lambda_k);

// True iff all roots of the cubic lie in Re < 0 (d1 > 0, d3 > 0, D2 > 0).
bool routh_hurwitz_stable(const HurwitzData& h);

// Roots of the characteristic cubic of the mode matrix: companion-matrix
// eigensolve followed by one Newton step per root. Ordered by descending real
// part, ties by descending imaginary part.
std::array<std::complex<double>, 3> mode_eigenvalues(const Parameters& p, double lambda_k);

std::array<std::complex<double>, 3> cubic_roots(double d1, double d2, double d3);

// -(nu1 + nu2)(nu2 + nu3)(nu1 + nu3)
double orlando_product(const std::array<std::complex<double>, 3>& roots);

// DomainError if Lambda_2 <= 0.
Thresholds thresholds(const Parameters& p);
Thresholds thresholds(const Parameters& p, const ModeTable& table);

ModeWindow mode_window_at(const Parameters& p, double lambda_k, double n, std::int64_t k = 0);
ModeWindow mode_window(const Parameters& p, const ModeTable& table, std::int64_t k, double n);

// Essential-spectrum points of the linearization at the infected state.
std::array<double, 2> essential_spectrum(const Parameters& p);

RegionVerdict classify_point(const Parameters& p);
RegionVerdict classify_point(const Parameters& p, const StabilityContext& ctx);

struct SweepRange {
  double lo = 0.0;
  double hi = 0.0;
  int steps = 2;

  double at(int i) const;
};

struct SweepRow {
  double n = 0.0;
  double r = 0.0;
  RegionVerdict verdict;
};

// Grid points in N-major order. Work is split over worker threads; the
// result order does not depend on the worker count.
std::vector<SweepRow> sweep(const Parameters& base, const SweepRange& n_range,
                            const SweepRange& r_range, int workers = 0);

// Columns: N,r,R0,zone,D2_mode0,K2,in_P0,...; at most max_modes mode columns.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, int max_modes = 8);

// Honors VIRODYN_THREADS as an upper bound on hardware concurrency.
int default_worker_count();

}  // namespace virodyn
