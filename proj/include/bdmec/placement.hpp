#pragma once

#include <vector>

#include "bdmec/config.hpp"
#include "bdmec/geometry.hpp"

namespace bdmec {

struct PlacementResult {
  Position uav;
  bool feasible = false;
  double pl_total = 0.0;  // summed linear path loss over all assisted links
};

// Positions the IRS carrier at the UE barycenter in the horizontal plane and
// scans a 1 m height grid over [h_min, h_max] for the height that minimizes
// the summed linear path loss of the UE->UAV and UAV->AP links, subject to
// the distance caps. Infeasibility is a result state, not an error. The scan
// uses the line-of-sight excess loss, matching the dominant-probability case
// of the assisted links.
PlacementResult place_uav(const std::vector<Position>& ue_positions, const Position& ap_position,
                          const SystemConfig& cfg);

// Objective of the height scan at one candidate height, exposed so tests can
// re-scan the grid independently.
double placement_path_loss(const std::vector<Position>& ue_positions, const Position& ap_position,
                           const Position& uav, const SystemConfig& cfg);

}  // namespace bdmec
