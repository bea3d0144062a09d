#include "bdmec/compute.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bdmec/errors.hpp"

namespace bdmec {
namespace compute {
namespace {

void check_sizes(const std::vector<UserTask>& tasks, const Eigen::VectorXd& v, const char* what) {
  if (static_cast<std::size_t>(v.size()) != tasks.size()) {
    throw std::invalid_argument(std::string("compute: ") + what + " size != task count");
  }
}

}  // namespace

LatencyBreakdown latency_energy(const std::vector<UserTask>& tasks, const ComputeAllocation& alloc,
                                const Eigen::VectorXd& rates_bps, const Eigen::VectorXd& p,
                                const SystemConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(tasks.size());
  check_sizes(tasks, alloc.beta, "beta");
  check_sizes(tasks, alloc.f_local, "f_local");
  check_sizes(tasks, alloc.f_edge, "f_edge");
  check_sizes(tasks, rates_bps, "rates");
  check_sizes(tasks, p, "powers");

  LatencyBreakdown b;
  b.t_local = Eigen::VectorXd::Zero(n);
  b.t_offload = Eigen::VectorXd::Zero(n);
  b.t_edge_compute = Eigen::VectorXd::Zero(n);
  b.t_edge_total = Eigen::VectorXd::Zero(n);
  b.t_task = Eigen::VectorXd::Zero(n);
  b.e_local = Eigen::VectorXd::Zero(n);
  b.e_offload = Eigen::VectorXd::Zero(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const UserTask& task = tasks[static_cast<std::size_t>(i)];
    const double beta = alloc.beta[i];
    if (beta > 0.0) {
      const double f_l = alloc.f_local[i] * cfg.f_user_max_hz;
      if (f_l <= 0.0) throw std::invalid_argument("latency_energy: beta > 0 with zero local capacity");
      b.t_local[i] = beta * task.c_total / f_l;
      b.e_local[i] = cfg.eps_ceff * f_l * f_l * beta * task.c_total;
    }
    if (beta < 1.0) {
      if (rates_bps[i] <= 0.0) throw std::invalid_argument("latency_energy: beta < 1 with zero rate");
      const double f_s = alloc.f_edge[i] * cfg.f_mec_max_hz;
      if (f_s <= 0.0) throw std::invalid_argument("latency_energy: beta < 1 with zero edge capacity");
      b.t_offload[i] = (1.0 - beta) * task.s_bits / rates_bps[i];
      b.t_edge_compute[i] = (1.0 - beta) * task.c_total / f_s;
      b.e_offload[i] = p[i] * b.t_offload[i];
    }
    b.t_edge_total[i] = b.t_offload[i] + b.t_edge_compute[i];
    b.t_task[i] = std::max(b.t_local[i], b.t_edge_total[i]);
  }
  b.t_hover = n ? b.t_edge_total.maxCoeff() : 0.0;
  return b;
}

double beta_closed_form(const UserTask& task, double f_local, double f_edge, double rate_bps,
                        const SystemConfig& cfg) {
  const double a = f_local * cfg.f_user_max_hz;
  const double b = f_edge * cfg.f_mec_max_hz;
  const double rc = rate_bps * task.c_total;
  const double denom = rc * (a + b) + task.s_bits * a * b;
  if (denom <= 0.0) {
    throw std::invalid_argument("beta_closed_form: zero denominator (no capacity and no rate)");
  }
  return a * (rc + b * task.s_bits) / denom;
}

namespace {

struct UserBounds {
  double t_off = 0.0;        // fixed offload time for this beta
  double local_cycles = 0.0; // beta * C
  double edge_cycles = 0.0;  // (1 - beta) * C
  double fl_cap = 0.0;       // energy-feasible local fraction cap
};

std::vector<UserBounds> user_bounds(const std::vector<UserTask>& tasks, const Eigen::VectorXd& beta,
                                    const Eigen::VectorXd& rates_bps, const Eigen::VectorXd& p,
                                    const SystemConfig& cfg) {
  std::vector<UserBounds> ub(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto ei = static_cast<Eigen::Index>(i);
    const double bt = beta[ei];
    UserBounds& u = ub[i];
    u.local_cycles = bt * tasks[i].c_total;
    u.edge_cycles = (1.0 - bt) * tasks[i].c_total;
    if (bt < 1.0) {
      if (rates_bps[ei] <= 0.0) {
        throw InfeasibleError("solve_allocation: user " + std::to_string(i) +
                              " offloads with zero rate");
      }
      u.t_off = (1.0 - bt) * tasks[i].s_bits / rates_bps[ei];
    }
    const double offload_energy = (p[ei] + cfg.p_rx_w) * u.t_off;
    if (bt > 0.0) {
      const double budget = cfg.e_max_j - offload_energy;
      if (budget <= 0.0) {
        throw InfeasibleError("solve_allocation: user " + std::to_string(i) +
                              " has no energy budget left for local computation");
      }
      u.fl_cap = std::min(
          1.0, std::sqrt(budget / (cfg.eps_ceff * u.local_cycles)) / cfg.f_user_max_hz);
    } else if (offload_energy > cfg.e_max_j * (1.0 + 1e-12)) {
      throw InfeasibleError("solve_allocation: user " + std::to_string(i) +
                            " violates the energy cap through offloading alone");
    }
    u.fl_cap = std::min(u.fl_cap, 1.0);
  }
  return ub;
}

bool feasible_at(const std::vector<UserBounds>& ub, double target, const SystemConfig& cfg) {
  if (target <= 0.0) return false;
  double fs_sum = 0.0;
  for (const auto& u : ub) {
    if (u.local_cycles > 0.0) {
      const double fl_req = u.local_cycles / (target * cfg.f_user_max_hz);
      if (fl_req > u.fl_cap * (1.0 + 1e-12)) return false;
    }
    if (u.edge_cycles > 0.0 || u.t_off > 0.0) {
      if (target <= u.t_off) return false;
      const double fs_req = u.edge_cycles / ((target - u.t_off) * cfg.f_mec_max_hz);
      if (fs_req > 1.0 + 1e-12) return false;
      fs_sum += fs_req;
    }
  }
  return fs_sum <= 1.0 + 1e-12;
}

}  // namespace

ComputeAllocation solve_allocation(const std::vector<UserTask>& tasks, const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& rates_bps, const Eigen::VectorXd& p,
                                   const SystemConfig& cfg) {
  const std::size_t n = tasks.size();
  check_sizes(tasks, beta, "beta");
  check_sizes(tasks, rates_bps, "rates");
  check_sizes(tasks, p, "powers");
  const auto ub = user_bounds(tasks, beta, rates_bps, p, cfg);

  // A concrete feasible point caps the search: full energy-feasible local
  // fraction and a uniform edge split.
  double hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const UserBounds& u = ub[i];
    double t_local = 0.0;
    if (u.local_cycles > 0.0) {
      t_local = u.local_cycles / (u.fl_cap * cfg.f_user_max_hz);
    }
    double t_edge = u.t_off;
    if (u.edge_cycles > 0.0) {
      t_edge += u.edge_cycles * static_cast<double>(n) / cfg.f_mec_max_hz;
    }
    hi = std::max(hi, std::max(t_local, t_edge));
  }
  hi = std::max(hi, std::numeric_limits<double>::min());
  for (int guard = 0; guard < 80 && !feasible_at(ub, hi, cfg); ++guard) hi *= 2.0;

  double lo = 0.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (feasible_at(ub, mid, cfg)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  ComputeAllocation alloc;
  alloc.beta = beta;
  alloc.f_local = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  alloc.f_edge = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ei = static_cast<Eigen::Index>(i);
    const UserBounds& u = ub[i];
    if (u.local_cycles > 0.0) {
      alloc.f_local[ei] = std::min(u.fl_cap, u.local_cycles / (hi * cfg.f_user_max_hz));
    }
    if (u.edge_cycles > 0.0) {
      alloc.f_edge[ei] = std::min(1.0, u.edge_cycles / ((hi - u.t_off) * cfg.f_mec_max_hz));
    }
  }
  return alloc;
}

ComputeAllocation solve_allocation_fixed_local(const std::vector<UserTask>& tasks,
                                               const Eigen::VectorXd& beta,
                                               const Eigen::VectorXd& rates_bps,
                                               const Eigen::VectorXd& p, const SystemConfig& cfg) {
  const std::size_t n = tasks.size();
  check_sizes(tasks, beta, "beta");
  check_sizes(tasks, rates_bps, "rates");
  check_sizes(tasks, p, "powers");
  auto ub = user_bounds(tasks, beta, rates_bps, p, cfg);
  for (std::size_t i = 0; i < n; ++i) {
    if (ub[i].local_cycles <= 0.0) continue;
    const double e_local = cfg.eps_ceff * cfg.f_user_max_hz * cfg.f_user_max_hz *
                           ub[i].local_cycles;
    const double e_rest = (p[static_cast<Eigen::Index>(i)] + cfg.p_rx_w) * ub[i].t_off;
    if (e_local + e_rest > cfg.e_max_j * (1.0 + 1e-12)) {
      throw InfeasibleError("solve_allocation_fixed_local: user " + std::to_string(i) +
                            " exceeds the energy cap at full local speed");
    }
    ub[i].fl_cap = 1.0;  // pinned
  }

  double hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const UserBounds& u = ub[i];
    const double t_local = u.local_cycles / cfg.f_user_max_hz;
    double t_edge = u.t_off;
    if (u.edge_cycles > 0.0) t_edge += u.edge_cycles * static_cast<double>(n) / cfg.f_mec_max_hz;
    hi = std::max(hi, std::max(t_local, t_edge));
  }
  hi = std::max(hi, std::numeric_limits<double>::min());
  for (int guard = 0; guard < 80 && !feasible_at(ub, hi, cfg); ++guard) hi *= 2.0;

  // The local time is fixed at beta*C/f_max, so it only floors the target.
  double lo = 0.0;
  for (const auto& u : ub) lo = std::max(lo, u.local_cycles / cfg.f_user_max_hz);
  lo = std::max(0.0, lo * (1.0 - 1e-12));
  for (int it = 0; it < 200 && (hi - lo) > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (feasible_at(ub, mid, cfg)) hi = mid; else lo = mid;
  }

  ComputeAllocation alloc;
  alloc.beta = beta;
  alloc.f_local = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  alloc.f_edge = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (ub[i].edge_cycles > 0.0) {
      alloc.f_edge[static_cast<Eigen::Index>(i)] =
          std::min(1.0, ub[i].edge_cycles / ((hi - ub[i].t_off) * cfg.f_mec_max_hz));
    }
  }
  return alloc;
}

ComputeAllocation initial_allocation(const std::vector<UserTask>& tasks,
                                     const Eigen::VectorXd& /*p*/, const SystemConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(tasks.size());
  ComputeAllocation alloc;
  alloc.beta = Eigen::VectorXd::Ones(n);
  alloc.f_edge = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  alloc.f_local = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double cap =
        std::sqrt(cfg.e_max_j / (cfg.eps_ceff * tasks[static_cast<std::size_t>(i)].c_total)) /
        cfg.f_user_max_hz;
    alloc.f_local[i] = std::min(1.0, cap);
  }
  return alloc;
}

std::pair<ComputeAllocation, ComputeTrace> alternating_optimize_from(
    const std::vector<UserTask>& tasks, const Eigen::VectorXd& rates_bps,
    const Eigen::VectorXd& p, const SystemConfig& cfg, ComputeAllocation start) {
  ComputeAllocation alloc = std::move(start);
  ComputeTrace trace;
  double prev = latency_energy(tasks, alloc, rates_bps, p, cfg).worst_latency();
  for (std::size_t it = 0; it < cfg.i_max; ++it) {
    Eigen::VectorXd beta(alloc.beta.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
      beta[i] = beta_closed_form(tasks[static_cast<std::size_t>(i)], alloc.f_local[i],
                                 alloc.f_edge[i], rates_bps[i], cfg);
    }
    alloc = solve_allocation(tasks, beta, rates_bps, p, cfg);
    const double obj = latency_energy(tasks, alloc, rates_bps, p, cfg).worst_latency();
    trace.objective.push_back(obj);
    const double err = std::abs(obj - prev) / std::max(obj, 1e-300);
    prev = obj;
    if (err < cfg.epsilon) break;
  }
  return {alloc, trace};
}

std::pair<ComputeAllocation, ComputeTrace> alternating_optimize(
    const std::vector<UserTask>& tasks, const Eigen::VectorXd& rates_bps,
    const Eigen::VectorXd& p, const SystemConfig& cfg) {
  return alternating_optimize_from(tasks, rates_bps, p, cfg,
                                   initial_allocation(tasks, p, cfg));
}

}  // namespace compute
}  // namespace bdmec
