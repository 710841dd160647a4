#include "virodyn/csv.hpp"

#include <cmath>
#include <cstdio>

namespace virodyn {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.11e", value);
  return buf;
}

}  // namespace virodyn
