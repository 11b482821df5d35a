#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace endqt {

// All floating-point artifact output goes through 12 significant digits so
// emitted files are stable across runs.
inline std::string fmt12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

// Rounds to 12 significant digits; used before handing doubles to the JSON
// writer.
inline double round12(double x) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  const double mag = std::pow(10.0, 11 - std::floor(std::log10(std::fabs(x))));
  return std::round(x * mag) / mag;
}

}  // namespace endqt
