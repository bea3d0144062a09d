#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bdmec/config.hpp"
#include "bdmec/task.hpp"

namespace bdmec {

// Joint computation-side decision: per-user local and edge capacity fractions
// and the local share beta of each task.
struct ComputeAllocation {
  Eigen::VectorXd f_local;
  Eigen::VectorXd f_edge;
  Eigen::VectorXd beta;
};

// Per-user timing and energy decomposition of one allocation.
struct LatencyBreakdown {
  Eigen::VectorXd t_local;
  Eigen::VectorXd t_offload;
  Eigen::VectorXd t_edge_compute;
  Eigen::VectorXd t_edge_total;  // t_offload + t_edge_compute
  Eigen::VectorXd t_task;        // max(t_local, t_edge_total)
  Eigen::VectorXd e_local;
  Eigen::VectorXd e_offload;
  double t_hover = 0.0;          // max over users of t_edge_total

  double worst_latency() const { return t_task.size() ? t_task.maxCoeff() : 0.0; }
};

namespace compute {

// Evaluates the timing/energy model. Degenerate splits skip the associated
// division: beta = 0 yields zero local time, beta = 1 yields zero edge time.
// Throws std::invalid_argument when a needed divisor is zero.
LatencyBreakdown latency_energy(const std::vector<UserTask>& tasks, const ComputeAllocation& alloc,
                                const Eigen::VectorXd& rates_bps, const Eigen::VectorXd& p,
                                const SystemConfig& cfg);

// Closed-form split that equalizes local and edge completion times for one
// user, given its capacity products a = f_local*f_user_max and
// b = f_edge*f_mec_max.
double beta_closed_form(const UserTask& task, double f_local, double f_edge, double rate_bps,
                        const SystemConfig& cfg);

// Min-max allocation of local and edge capacity for fixed beta: bisection on
// the target latency with per-user closed-form feasibility. Throws
// InfeasibleError when no finite latency is achievable.
ComputeAllocation solve_allocation(const std::vector<UserTask>& tasks, const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& rates_bps, const Eigen::VectorXd& p,
                                   const SystemConfig& cfg);

// Variant for the fixed-computation baseline: the local fraction is pinned
// at 1 and only the edge shares are optimized. Throws InfeasibleError when
// full local speed cannot fit the energy budget.
ComputeAllocation solve_allocation_fixed_local(const std::vector<UserTask>& tasks,
                                               const Eigen::VectorXd& beta,
                                               const Eigen::VectorXd& rates_bps,
                                               const Eigen::VectorXd& p, const SystemConfig& cfg);

struct ComputeTrace {
  std::vector<double> objective;  // worst-case latency per iteration
};

// Alternates the closed-form split and the min-max capacity allocation until
// the relative objective change drops below cfg.epsilon (or cfg.i_max).
std::pair<ComputeAllocation, ComputeTrace> alternating_optimize(
    const std::vector<UserTask>& tasks, const Eigen::VectorXd& rates_bps,
    const Eigen::VectorXd& p, const SystemConfig& cfg);

// Same, warm-started from a caller-provided allocation.
std::pair<ComputeAllocation, ComputeTrace> alternating_optimize_from(
    const std::vector<UserTask>& tasks, const Eigen::VectorXd& rates_bps,
    const Eigen::VectorXd& p, const SystemConfig& cfg, ComputeAllocation start);

// Default starting point: uniform edge shares, largest energy-feasible local
// fraction (energy evaluated at the all-local split).
ComputeAllocation initial_allocation(const std::vector<UserTask>& tasks,
                                     const Eigen::VectorXd& p, const SystemConfig& cfg);

}  // namespace compute
}  // namespace bdmec
