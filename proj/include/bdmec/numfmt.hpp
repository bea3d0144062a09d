#pragma once

#include <cstdio>
#include <string>

namespace bdmec {

// Shortest decimal form that parses back to the identical double. Keeps
// config files and result rows byte-stable across runs.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lg", &back);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lg", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

}  // namespace bdmec
