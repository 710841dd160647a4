#include "virodyn/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "virodyn/errors.hpp"

namespace virodyn {

double laplacian_eigenvalue(std::int64_t n, double ell) {
  return 4.0 * std::numbers::pi * std::numbers::pi * static_cast<double>(n) / (ell * ell);
}

ModeTable build_mode_table(double ell, std::int64_t n_max) {
  if (!(ell > 0.0) || n_max < 0) {
    throw DomainError("build_mode_table requires ell > 0 and n_max >= 0");
  }
  std::int64_t bound = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n_max)));
  while ((bound + 1) * (bound + 1) <= n_max) ++bound;

  std::vector<std::int64_t> counts(static_cast<std::size_t>(n_max) + 1, 0);
  for (std::int64_t k1 = -bound; k1 <= bound; ++k1) {
    for (std::int64_t k2 = -bound; k2 <= bound; ++k2) {
      const std::int64_t n = k1 * k1 + k2 * k2;
      if (n <= n_max) ++counts[static_cast<std::size_t>(n)];
    }
  }

  ModeTable table;
  table.ell = ell;
  std::int64_t cumulative = 0;
  for (std::int64_t n = 0; n <= n_max; ++n) {
    const std::int64_t m = counts[static_cast<std::size_t>(n)];
    if (m == 0) continue;
    cumulative += m;
    table.entries.push_back(ModeEntry{laplacian_eigenvalue(n, ell), n, m, cumulative});
  }
  return table;
}

ModeTable build_mode_table_covering(double ell, double lambda_max) {
  const double scale = 4.0 * std::numbers::pi * std::numbers::pi / (ell * ell);
  auto n_max = static_cast<std::int64_t>(std::ceil(std::max(lambda_max, 0.0) / scale));
  // Extend until some representable n sits at or past lambda_max.
  for (;;) {
    ModeTable t = build_mode_table(ell, n_max);
    if (t.entries.back().lambda >= lambda_max) {
      while (t.entries.size() > 1 && t.entries[t.entries.size() - 2].lambda >= lambda_max) {
        t.entries.pop_back();
      }
      return t;
    }
    n_max = n_max + 8;
  }
}

std::int64_t multiplicity(std::int64_t n) {
  if (n < 1) {
    throw DomainError("multiplicity requires n >= 1");
  }
  std::int64_t product = 1;
  std::int64_t rest = n;
  while (rest % 2 == 0) rest /= 2;
  for (std::int64_t p = 3; p * p <= rest; p += 2) {
    if (rest % p != 0) continue;
    std::int64_t e = 0;
    while (rest % p == 0) {
      rest /= p;
      ++e;
    }
    if (p % 4 == 1) {
      product *= e + 1;
    } else if (e % 2 == 1) {
      return 0;
    }
  }
  if (rest > 1) {
    if (rest % 4 == 1) {
      product *= 2;
    } else {
      return 0;
    }
  }
  return 4 * product;
}

double paper_index(const ModeTable& table, std::int64_t k, IndexConvention convention) {
  if (convention == IndexConvention::kDistinct) {
    if (k < 0 || static_cast<std::size_t>(k) >= table.entries.size()) {
      throw std::out_of_range("distinct mode index " + std::to_string(k) + " outside table");
    }
    return table.entries[static_cast<std::size_t>(k)].lambda;
  }
  if (k < 1 || table.entries.empty() || k > table.entries.back().cumulative_multiplicity) {
    throw std::out_of_range("expanded mode index " + std::to_string(k) + " outside table");
  }
  for (const auto& e : table.entries) {
    if (k <= e.cumulative_multiplicity) return e.lambda;
  }
  throw std::out_of_range("expanded mode index outside table");
}

}  // namespace virodyn
