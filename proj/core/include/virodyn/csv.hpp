#pragma once

#include <string>

namespace virodyn {

// Scientific notation with 12 significant digits ("%.11e"); "nan" / "inf"
// spelled out. Used for every float written to CSV or matrix files.
std::string format_number(double value);

}  // namespace virodyn
