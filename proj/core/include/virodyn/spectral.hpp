#pragma once

#include <cstdint>
#include <vector>

namespace virodyn {

// One distinct eigenvalue of -Laplacian on the periodic square (0, ell)^2:
// lambda = 4 pi^2 n / ell^2 with n = k1^2 + k2^2.
struct ModeEntry {
  double lambda = 0.0;
  std::int64_t n = 0;
  std::int64_t multiplicity = 1;
  std::int64_t cumulative_multiplicity = 1;  // count of eigenvalues <= lambda
};

// Sorted (strictly ascending) distinct periodic-Laplacian eigenvalues.
struct ModeTable {
  std::vector<ModeEntry> entries;
  double ell = 1.0;

  std::size_t size() const { return entries.size(); }
  const ModeEntry& operator[](std::size_t k) const { return entries[k]; }
};

enum class IndexConvention {
  kDistinct,                 // 0-based over distinct values
  kWithMultiplicity1Based,  // 1-based over the multiplicity-expanded sequence
};

double laplacian_eigenvalue(std::int64_t n, double ell);

// Enumerates lattice points (k1, k2) with k1^2 + k2^2 <= n_max.
ModeTable build_mode_table(double ell, std::int64_t n_max);

// Smallest table whose last entry lies at or above lambda_max.
ModeTable build_mode_table_covering(double ell, double lambda_max);

// r2(n): number of (k1, k2) in Z^2 with k1^2 + k2^2 = n, from the prime
// factorization of n. Zero for non-representable n.
std::int64_t multiplicity(std::int64_t n);

// Throws std::out_of_range when k is outside the table.
double paper_index(const ModeTable& table, std::int64_t k, IndexConvention convention);

}  // namespace virodyn
