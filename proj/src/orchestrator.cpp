#include "bdmec/orchestrator.hpp"

#include <cmath>
#include <limits>

#include "bdmec/errors.hpp"
#include "bdmec/rng.hpp"

namespace bdmec {

namespace {
constexpr double kOuterEps = 1e-3;
constexpr std::size_t kOuterIMax = 20;
}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Proposed: return "proposed";
    case Scheme::Binary: return "binary";
    case Scheme::Edge: return "edge";
    case Scheme::Local: return "local";
    case Scheme::FixedCompute: return "fixed-compute";
  }
  return "?";
}

std::string to_string(ArchVariant a) {
  switch (a) {
    case ArchVariant::SC: return "sc";
    case ArchVariant::GC: return "gc";
    case ArchVariant::FC: return "fc";
    case ArchVariant::RandomPhase: return "random-phase";
    case ArchVariant::RandomPower: return "random-power";
    case ArchVariant::NoIrs: return "no-irs";
    case ArchVariant::FixedBuilding: return "fixed-building";
  }
  return "?";
}

std::optional<Scheme> parse_scheme(const std::string& name) {
  for (const Scheme s : {Scheme::Proposed, Scheme::Binary, Scheme::Edge, Scheme::Local,
                         Scheme::FixedCompute}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::optional<ArchVariant> parse_arch(const std::string& name) {
  for (const ArchVariant a : {ArchVariant::SC, ArchVariant::GC, ArchVariant::FC,
                              ArchVariant::RandomPhase, ArchVariant::RandomPower,
                              ArchVariant::NoIrs, ArchVariant::FixedBuilding}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

double system_objective(const LatencyBreakdown& breakdown, const SystemConfig& cfg) {
  return cfg.w1 * cfg.p_hover_w * breakdown.t_hover + cfg.w2 * breakdown.worst_latency();
}

namespace {

IrsArch irs_arch_of(ArchVariant v) {
  switch (v) {
    case ArchVariant::SC: return IrsArch::SingleConnected;
    case ArchVariant::FC: return IrsArch::FullyConnected;
    default: return IrsArch::GroupConnected;
  }
}

PhaseShift random_diagonal_phase(std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> thetas(k);
  for (auto& t : thetas) t = rng.uniform(0.0, 2.0 * M_PI);
  return PhaseShift::single_connected(thetas);
}

double energy_slack(const LatencyBreakdown& b, const Eigen::VectorXd& p,
                    const SystemConfig& cfg) {
  double slack = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < b.t_offload.size(); ++i) {
    const double used = b.e_local[i] + b.e_offload[i] + cfg.p_rx_w * b.t_offload[i];
    slack = std::min(slack, cfg.e_max_j - used);
    (void)p;
  }
  return slack;
}

MetricsReport make_metrics(const std::vector<UserTask>& tasks, const ComputeAllocation& calloc,
                           const Eigen::VectorXd& rates_bps, const Eigen::VectorXd& sinr,
                           const Eigen::VectorXd& p, const SystemConfig& cfg,
                           std::vector<double> trace) {
  const LatencyBreakdown b = compute::latency_energy(tasks, calloc, rates_bps, p, cfg);
  MetricsReport m;
  m.rate_bps = rates_bps;
  m.sinr = sinr;
  m.beta = calloc.beta;
  m.f_local = calloc.f_local;
  m.f_edge = calloc.f_edge;
  m.p = p;
  m.min_rate_bps = rates_bps.minCoeff();
  m.worst_latency_s = b.worst_latency();
  m.hover_time_s = b.t_hover;
  m.objective = system_objective(b, cfg);
  m.energy_slack_j = energy_slack(b, p, cfg);
  m.trace = std::move(trace);
  return m;
}

Eigen::VectorXd rates_of(const ChannelSet& ch, const CommAllocation& comm,
                         const SystemConfig& cfg, Eigen::VectorXd* sinr_out = nullptr) {
  const auto heff = all_effective_channels(ch, assemble(comm.phi));
  const auto n = static_cast<Eigen::Index>(ch.n_users());
  Eigen::VectorXd rates(n);
  if (sinr_out) sinr_out->resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto rp = sinr_for(heff, comm.w, comm.p, static_cast<std::size_t>(i),
                             cfg.noise_power_w(), cfg.bandwidth_hz);
    rates[i] = rp.rate_bps;
    if (sinr_out) (*sinr_out)[i] = rp.sinr;
  }
  return rates;
}

}  // namespace

BcdResult run_bcd(const Scenario& scenario, ArchVariant arch, const BcdOptions& options) {
  const SystemConfig& cfg = scenario.cfg;
  if (scenario.tasks.size() != cfg.n_users || scenario.ue.size() != cfg.n_users) {
    throw std::invalid_argument("run_bcd: scenario sizes do not match n_users");
  }

  // Stage 1: carrier placement. The barycenter does not depend on any
  // optimized variable, so this runs once per scenario.
  Position uav;
  if (arch == ArchVariant::FixedBuilding) {
    uav = scenario.building;
  } else {
    const PlacementResult placed = place_uav(scenario.ue, scenario.ap, cfg);
    if (!placed.feasible) {
      throw InfeasibleError("placement: no height within [h_min, h_max] satisfies the distance caps");
    }
    uav = placed.uav;
  }

  BcdResult res;
  res.channels = draw_channels(cfg, ScenarioGeometry{scenario.ue, scenario.ap, uav}, scenario.seed);
  if (arch == ArchVariant::NoIrs) res.channels.g_irs_ap.setZero();
  ChannelSet& ch = res.channels;

  comm::CommOptions comm_options;
  comm_options.optimize_phase_shift =
      arch == ArchVariant::SC || arch == ArchVariant::GC || arch == ArchVariant::FC ||
      arch == ArchVariant::FixedBuilding;
  comm_options.optimize_power = arch != ArchVariant::RandomPower;

  ComputeAllocation calloc = compute::initial_allocation(scenario.tasks,
                                                         Eigen::VectorXd(), cfg);
  auto [comm_alloc, fp] =
      comm::initial_comm_state(ch, irs_arch_of(arch), calloc.beta, scenario.tasks, cfg);
  if (options.initial_phi) {
    check_feasible(*options.initial_phi);
    if (options.initial_phi->n_elements() != cfg.n_elements) {
      throw std::invalid_argument("run_bcd: initial reflection state has wrong size");
    }
    comm_alloc.phi = *options.initial_phi;
  }
  if (arch == ArchVariant::RandomPhase) {
    comm_alloc.phi = random_diagonal_phase(cfg.n_elements, scenario.seed ^ 0x9e3779b97f4a7c15ULL);
  }
  if (arch == ArchVariant::RandomPower) {
    Rng rng(scenario.seed ^ 0xda3e39cb94b95bdbULL);
    for (Eigen::Index i = 0; i < comm_alloc.p.size(); ++i) {
      comm_alloc.p[i] = rng.uniform(0.05 * cfg.p_max_w, cfg.p_max_w);
    }
  }

  Eigen::VectorXd rates = rates_of(ch, comm_alloc, cfg);

  struct State {
    ComputeAllocation calloc;
    CommAllocation comm;
    FpState fp;
    Eigen::VectorXd rates;
    Eigen::VectorXd sinr;
    double objective = std::numeric_limits<double>::infinity();
  } best;

  double prev_obj = std::numeric_limits<double>::infinity();
  std::size_t stall = 0;
  for (std::size_t outer = 0; outer < kOuterIMax; ++outer) {
    // Computation side with the current rates.
    std::pair<ComputeAllocation, compute::ComputeTrace> cres =
        compute::alternating_optimize(scenario.tasks, rates, comm_alloc.p, cfg);
    calloc = cres.first;
    res.compute_trace = cres.second;

    // Communication side with the current split.
    comm::CommResult crest = comm::optimize(ch, calloc.beta, scenario.tasks, comm_alloc, fp, cfg,
                                            comm_options);
    comm_alloc = crest.alloc;
    fp = crest.fp;
    rates = crest.rates_bps;
    res.comm_trace = crest.trace;

    const LatencyBreakdown b =
        compute::latency_energy(scenario.tasks, calloc, rates, comm_alloc.p, cfg);
    const double obj = system_objective(b, cfg);

    // The reported trace follows the incumbent best.
    if (obj < best.objective) {
      best = State{calloc, comm_alloc, fp, rates, crest.sinr, obj};
      stall = 0;
    } else {
      ++stall;
    }
    res.trace.push_back(best.objective);

    if (stall >= 2) break;
    if (std::abs(obj - prev_obj) < kOuterEps * std::max(obj, 1e-300)) break;
    prev_obj = obj;
  }

  if (!std::isfinite(best.objective)) {
    throw InfeasibleError("outer loop: no feasible iterate");
  }

  res.alloc.compute = best.calloc;
  res.alloc.comm = best.comm;
  res.alloc.uav = uav;
  res.alloc.fp = best.fp;
  res.metrics = make_metrics(scenario.tasks, best.calloc, best.rates, best.sinr, best.comm.p, cfg,
                             res.trace);
  return res;
}

namespace {

// Local-only completion time of one user at its energy-feasible capacity.
double local_only_latency(const UserTask& task, const SystemConfig& cfg) {
  const double cap =
      std::min(1.0, std::sqrt(cfg.e_max_j / (cfg.eps_ceff * task.c_total)) / cfg.f_user_max_hz);
  return task.c_total / (cap * cfg.f_user_max_hz);
}

// Scheme solvers compete on the computation subproblem's objective, the
// worst-case task latency; the weighted utility is evaluated afterwards for
// reporting only.
double latency_of(const std::vector<UserTask>& tasks, const ComputeAllocation& a,
                  const Eigen::VectorXd& rates, const Eigen::VectorXd& p,
                  const SystemConfig& cfg) {
  return compute::latency_energy(tasks, a, rates, p, cfg).worst_latency();
}

// Best all-or-nothing split: all-edge, all-local, and a greedy mix seeded
// from the all-edge solution.
ComputeAllocation solve_binary(const std::vector<UserTask>& tasks, const Eigen::VectorXd& rates,
                               const Eigen::VectorXd& p, const SystemConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(tasks.size());
  ComputeAllocation best;
  double best_obj = std::numeric_limits<double>::infinity();
  const auto consider = [&](const Eigen::VectorXd& beta) {
    ComputeAllocation a = compute::solve_allocation(tasks, beta, rates, p, cfg);
    const double obj = latency_of(tasks, a, rates, p, cfg);
    if (obj < best_obj) {
      best_obj = obj;
      best = a;
    }
  };
  consider(Eigen::VectorXd::Zero(n));
  consider(Eigen::VectorXd::Ones(n));
  {
    const ComputeAllocation all_edge =
        compute::solve_allocation(tasks, Eigen::VectorXd::Zero(n), rates, p, cfg);
    const double t_edge = compute::latency_energy(tasks, all_edge, rates, p, cfg).worst_latency();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
    bool mixed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (local_only_latency(tasks[static_cast<std::size_t>(i)], cfg) < t_edge) {
        beta[i] = 1.0;
        mixed = true;
      }
    }
    if (mixed && beta.minCoeff() < 1.0) consider(beta);
  }
  return best;
}

// Fixed-computation baseline: full local capacity, split capped by the
// energy budget, edge shares via the min-max solver with the local side
// pinned.
ComputeAllocation solve_fixed_compute(const std::vector<UserTask>& tasks,
                                      const Eigen::VectorXd& rates, const Eigen::VectorXd& p,
                                      const SystemConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(tasks.size());
  ComputeAllocation alloc;
  alloc.beta = Eigen::VectorXd::Zero(n);
  alloc.f_local = Eigen::VectorXd::Ones(n);
  alloc.f_edge = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));

  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < cfg.i_max; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const UserTask& task = tasks[static_cast<std::size_t>(i)];
      double beta = compute::beta_closed_form(task, 1.0, alloc.f_edge[i], rates[i], cfg);
      // Energy cap at full local speed: E(b) = e_loc*b + e_off*(1-b) <= E_max.
      const double e_loc = cfg.eps_ceff * cfg.f_user_max_hz * cfg.f_user_max_hz * task.c_total;
      const double e_off = (p[i] + cfg.p_rx_w) * task.s_bits / rates[i];
      if (e_loc * beta + e_off * (1.0 - beta) > cfg.e_max_j) {
        if (e_loc > e_off) {
          beta = std::max(0.0, (cfg.e_max_j - e_off) / (e_loc - e_off));
        } else {
          throw InfeasibleError("fixed-compute: energy cap violated even without local work");
        }
      }
      alloc.beta[i] = beta;
    }
    alloc = compute::solve_allocation_fixed_local(tasks, alloc.beta, rates, p, cfg);
    const double obj = latency_of(tasks, alloc, rates, p, cfg);
    if (std::abs(obj - prev) < cfg.epsilon * std::max(obj, 1e-300)) break;
    prev = obj;
  }
  return alloc;
}

}  // namespace

std::map<Scheme, SchemeResult> run_scheme_comparison(const Scenario& scenario, ArchVariant arch) {
  const SystemConfig& cfg = scenario.cfg;
  const BcdResult bcd = run_bcd(scenario, arch);
  const Eigen::VectorXd& rates = bcd.metrics.rate_bps;
  const Eigen::VectorXd& sinr = bcd.metrics.sinr;
  const Eigen::VectorXd& p = bcd.alloc.comm.p;
  const auto& tasks = scenario.tasks;

  const auto pack = [&](Scheme scheme, const ComputeAllocation& a,
                        std::vector<double> trace) {
    SchemeResult r;
    r.scheme = scheme;
    r.arch = arch;
    r.alloc = bcd.alloc;
    r.alloc.compute = a;
    r.metrics = make_metrics(tasks, a, rates, sinr, p, cfg, std::move(trace));
    return r;
  };

  std::map<Scheme, SchemeResult> out;

  const ComputeAllocation binary = solve_binary(tasks, rates, p, cfg);
  const auto n = static_cast<Eigen::Index>(tasks.size());
  out.emplace(Scheme::Binary, pack(Scheme::Binary, binary, {}));
  out.emplace(Scheme::Edge,
              pack(Scheme::Edge,
                   compute::solve_allocation(tasks, Eigen::VectorXd::Zero(n), rates, p, cfg), {}));
  out.emplace(Scheme::Local,
              pack(Scheme::Local,
                   compute::solve_allocation(tasks, Eigen::VectorXd::Ones(n), rates, p, cfg), {}));
  out.emplace(Scheme::FixedCompute,
              pack(Scheme::FixedCompute, solve_fixed_compute(tasks, rates, p, cfg), {}));

  // Proposed: free split, best of a fresh solve, a warm start from the
  // binary point (so the relaxation can only improve on it), and the outer
  // loop's own allocation.
  ComputeAllocation best = bcd.alloc.compute;
  double best_obj = latency_of(tasks, best, rates, p, cfg);
  std::vector<double> best_trace = bcd.trace;
  const auto consider = [&](std::pair<ComputeAllocation, compute::ComputeTrace> cand) {
    const double obj = latency_of(tasks, cand.first, rates, p, cfg);
    if (obj < best_obj) {
      best_obj = obj;
      best = cand.first;
      best_trace = cand.second.objective;
    }
  };
  consider(compute::alternating_optimize(tasks, rates, p, cfg));
  consider(compute::alternating_optimize_from(tasks, rates, p, cfg, binary));
  out.emplace(Scheme::Proposed, pack(Scheme::Proposed, best, best_trace));
  return out;
}

SchemeResult run_baseline(const Scenario& scenario, Scheme scheme, ArchVariant arch) {
  auto comparison = run_scheme_comparison(scenario, arch);
  return comparison.at(scheme);
}

namespace {

// Re-partitions a block-diagonal reflection state into coarser blocks.
PhaseShift lift_phase(const PhaseShift& phi, IrsArch target_arch, std::size_t target_groups) {
  const std::size_t k = phi.n_elements();
  const CMatrix full = assemble(phi);
  PhaseShift out;
  out.arch = target_arch;
  const std::size_t kbar = k / target_groups;
  out.blocks.resize(target_groups);
  for (std::size_t g = 0; g < target_groups; ++g) {
    const auto off = static_cast<Eigen::Index>(g * kbar);
    out.blocks[g] = full.block(off, off, static_cast<Eigen::Index>(kbar),
                               static_cast<Eigen::Index>(kbar));
  }
  return out;
}

}  // namespace

std::map<ArchVariant, BcdResult> run_arch_comparison(const Scenario& scenario,
                                                     const std::vector<ArchVariant>& archs) {
  std::map<ArchVariant, BcdResult> out;
  const BcdResult* prev = nullptr;
  ArchVariant prev_arch = ArchVariant::SC;
  for (const ArchVariant arch : archs) {
    BcdOptions opts;
    const bool unitary_arch =
        arch == ArchVariant::SC || arch == ArchVariant::GC || arch == ArchVariant::FC;
    if (prev && unitary_arch) {
      const std::size_t prev_groups = groups_for_arch(irs_arch_of(prev_arch), scenario.cfg);
      const std::size_t groups = groups_for_arch(irs_arch_of(arch), scenario.cfg);
      if (groups <= prev_groups && prev_groups % groups == 0) {
        opts.initial_phi = lift_phase(prev->alloc.comm.phi, irs_arch_of(arch), groups);
      }
    }
    BcdResult r = run_bcd(scenario, arch, opts);
    // A coarser topology contains the previous one; never return a worse
    // point than the nested warm start.
    if (opts.initial_phi && prev && prev->metrics.min_rate_bps > r.metrics.min_rate_bps) {
      r = *prev;
    }
    auto [it, ok] = out.emplace(arch, std::move(r));
    (void)ok;
    prev = &it->second;
    prev_arch = arch;
  }
  return out;
}

bool audit_scheme(const SchemeResult& result) {
  const Eigen::VectorXd& beta = result.metrics.beta;
  switch (result.scheme) {
    case Scheme::Proposed:
      return (beta.array() >= -1e-12).all() && (beta.array() <= 1.0 + 1e-12).all();
    case Scheme::Binary:
      return ((beta.array() - 0.0).abs() < 1e-12 || (beta.array() - 1.0).abs() < 1e-12).all();
    case Scheme::Edge:
      return (beta.array().abs() < 1e-12).all();
    case Scheme::Local:
      return ((beta.array() - 1.0).abs() < 1e-12).all();
    case Scheme::FixedCompute:
      return ((result.metrics.f_local.array() - 1.0).abs() < 1e-12).all();
  }
  return false;
}

}  // namespace bdmec
