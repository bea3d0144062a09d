#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bdmec/channel.hpp"
#include "bdmec/comm.hpp"
#include "bdmec/compute.hpp"
#include "bdmec/config.hpp"
#include "bdmec/geometry.hpp"
#include "bdmec/placement.hpp"
#include "bdmec/task.hpp"

namespace bdmec {

// One fully specified problem instance; (cfg, seed) determines every draw.
struct Scenario {
  SystemConfig cfg;
  std::vector<UserTask> tasks;
  std::vector<Position> ue;
  Position ap;
  Position building{0.0, 0.0, 30.0};  // fixed IRS mount for the non-UAV baseline
  std::uint64_t seed = 0;
};

enum class Scheme { Proposed, Binary, Edge, Local, FixedCompute };

// IRS handling of one experiment cell. The first three optimize the phase
// response under the named topology; the rest are reference behaviours.
enum class ArchVariant { SC, GC, FC, RandomPhase, RandomPower, NoIrs, FixedBuilding };

std::string to_string(Scheme s);
std::string to_string(ArchVariant a);
std::optional<Scheme> parse_scheme(const std::string& name);
std::optional<ArchVariant> parse_arch(const std::string& name);

// Joint decision state.
struct Allocation {
  ComputeAllocation compute;
  CommAllocation comm;
  Position uav;
  FpState fp;
};

struct MetricsReport {
  Eigen::VectorXd rate_bps;
  Eigen::VectorXd sinr;
  Eigen::VectorXd beta;
  Eigen::VectorXd f_local;
  Eigen::VectorXd f_edge;
  Eigen::VectorXd p;
  double min_rate_bps = 0.0;
  double worst_latency_s = 0.0;
  double hover_time_s = 0.0;
  double objective = 0.0;
  double energy_slack_j = 0.0;  // min over users of E_max - consumed; < 0 flags a violation
  std::vector<double> trace;    // objective per outer iteration
};

// Weighted utility: hover energy plus worst-case task latency.
double system_objective(const LatencyBreakdown& breakdown, const SystemConfig& cfg);

struct BcdOptions {
  std::optional<PhaseShift> initial_phi;  // warm start for the reflection state
};

struct BcdResult {
  Allocation alloc;
  MetricsReport metrics;
  std::vector<double> trace;
  std::vector<comm::CommTraceRecord> comm_trace;
  compute::ComputeTrace compute_trace;
  ChannelSet channels;
};

// Outer loop: UAV placement once, then alternating computation-side and
// communication-side optimization until the utility stabilizes. Throws
// InfeasibleError annotated with the failing stage.
BcdResult run_bcd(const Scenario& scenario, ArchVariant arch = ArchVariant::GC,
                  const BcdOptions& options = {});

struct SchemeResult {
  Scheme scheme = Scheme::Proposed;
  ArchVariant arch = ArchVariant::GC;
  MetricsReport metrics;
  Allocation alloc;
};

// Every offloading scheme evaluated against the proposed scheme's optimized
// communication solution, as one consistent comparison. The proposed entry
// additionally warm-starts from the binary solution, so the feasible-set
// ordering proposed <= binary <= {edge, local} holds per instance.
std::map<Scheme, SchemeResult> run_scheme_comparison(const Scenario& scenario, ArchVariant arch);

SchemeResult run_baseline(const Scenario& scenario, Scheme scheme, ArchVariant arch);

// Architectures evaluated on one realization with nested warm starts
// (SC -> GC -> FC), so the topology ordering is realized per instance.
std::map<ArchVariant, BcdResult> run_arch_comparison(const Scenario& scenario,
                                                     const std::vector<ArchVariant>& archs);

// Re-checks a scheme's defining restriction on its returned allocation.
bool audit_scheme(const SchemeResult& result);

}  // namespace bdmec
