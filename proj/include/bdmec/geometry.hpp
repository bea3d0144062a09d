#pragma once

#include <cmath>

namespace bdmec {

// Cartesian position in meters. UEs and the AP sit on the ground (z = 0);
// the UAV hovers at z = H.
struct Position {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double distance(const Position& a, const Position& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Directional cosine seen by a linear array at `at` toward `to`. All arrays
// in this model are oriented along the global x axis, so the cosine is the
// x component of the unit direction vector.
inline double directional_cosine(const Position& at, const Position& to) {
  const double d = distance(at, to);
  if (d == 0.0) return 0.0;
  return (to.x - at.x) / d;
}

}  // namespace bdmec
