#include "bdmec/placement.hpp"

#include <limits>

#include "bdmec/channel.hpp"

namespace bdmec {

double placement_path_loss(const std::vector<Position>& ue_positions, const Position& ap_position,
                           const Position& uav, const SystemConfig& cfg) {
  double total = 0.0;
  for (const auto& q : ue_positions) {
    const double pl_db = path_loss_db(distance(q, uav), cfg.alpha_ue_uav, true, cfg);
    total += std::pow(10.0, pl_db / 10.0);
  }
  const double pl_db = path_loss_db(distance(uav, ap_position), cfg.alpha_uav_ap, true, cfg);
  total += std::pow(10.0, pl_db / 10.0);
  return total;
}

PlacementResult place_uav(const std::vector<Position>& ue_positions, const Position& ap_position,
                          const SystemConfig& cfg) {
  PlacementResult res;
  double cx = 0.0;
  double cy = 0.0;
  for (const auto& q : ue_positions) {
    cx += q.x;
    cy += q.y;
  }
  cx /= static_cast<double>(ue_positions.size());
  cy /= static_cast<double>(ue_positions.size());

  double best_pl = std::numeric_limits<double>::infinity();
  double best_h = cfg.h_min_m;
  bool feasible = false;

  // 1 m grid; h_max is always included even when off-grid.
  for (double h = cfg.h_min_m;; h += 1.0) {
    if (h > cfg.h_max_m) {
      if (h - 1.0 < cfg.h_max_m) h = cfg.h_max_m; else break;
    }
    const Position uav{cx, cy, h};
    bool ok = distance(uav, ap_position) <= cfg.d_ub_max_m;
    for (const auto& q : ue_positions) {
      if (!ok) break;
      ok = distance(q, uav) <= cfg.d_nu_max_m;
    }
    if (ok) {
      const double pl = placement_path_loss(ue_positions, ap_position, uav, cfg);
      if (pl < best_pl) {
        best_pl = pl;
        best_h = h;
      }
      feasible = true;
    }
    if (h == cfg.h_max_m) break;
  }

  res.uav = Position{cx, cy, best_h};
  res.feasible = feasible;
  res.pl_total = feasible ? best_pl : std::numeric_limits<double>::infinity();
  return res;
}

}  // namespace bdmec
