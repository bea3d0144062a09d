#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdmec/config.hpp"
#include "bdmec/orchestrator.hpp"

namespace bdmec {

// Scenario-generation constants: deployment region, fixed node positions,
// and the task-size distributions. Lives in the [scenario] config section.
struct ScenarioConfig {
  double area_m = 150.0;
  double ap_x = 75.0;
  double ap_y = 75.0;
  double building_x = 0.0;
  double building_y = 0.0;
  double building_z = 30.0;
  double s_min_bits = 100e3;
  double s_max_bits = 200e3;
  double c_min_cycles_per_bit = 500.0;
  double c_max_cycles_per_bit = 2000.0;
};

void apply_scenario_section(const std::vector<ConfigEntry>& entries, ScenarioConfig& sc);

// One Monte Carlo campaign: a sweep grid, trial count, and the cells
// (scheme x arch) to evaluate at every grid point.
struct ExperimentSpec {
  std::string preset = "convergence";
  SystemConfig cfg;
  ScenarioConfig scenario;
  std::string sweep_name = "none";
  std::vector<double> grid{0.0};
  std::size_t n_trials = 50;
  std::uint64_t base_seed = 1;
  std::vector<Scheme> schemes{Scheme::Proposed};
  std::vector<ArchVariant> archs{ArchVariant::GC};
  std::string out_path = "results.csv";
  bool write_traces = true;
};

// Fills sweep/schemes/archs for one of the named presets:
// convergence | rate-vs-K | latency-vs-N | latency-vs-cycles | hover-vs-bits
ExperimentSpec make_preset(const std::string& name, const SystemConfig& cfg,
                           const ScenarioConfig& scenario);

// Applies a sweep value (n_users, n_elements, task constants) to a config
// pair; used per grid point.
void apply_sweep(const std::string& sweep_name, double value, SystemConfig& cfg,
                 ScenarioConfig& scenario);

// Deterministic instance: UE positions then task draws from one seed.
Scenario make_scenario(const SystemConfig& cfg, const ScenarioConfig& sc, std::uint64_t seed);

struct ResultRow {
  std::string preset;
  std::string sweep;
  double grid_value = 0.0;
  std::size_t trial = 0;
  Scheme scheme = Scheme::Proposed;
  ArchVariant arch = ArchVariant::GC;
  bool feasible = false;
  std::string fail_stage;  // empty when feasible
  MetricsReport metrics;
  std::vector<comm::CommTraceRecord> comm_trace;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::string csv;          // data rows, one header line
  std::string summary_csv;  // grouped means and standard deviations
  std::string gaps_csv;     // pairwise percentage gaps
  bool any_feasible = false;
};

// Runs the whole campaign in memory; deterministic given the spec (trials
// execute concurrently but reduce in sorted order).
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Writes <out>, <out>.summary.csv, <out>.gaps.csv and, when enabled, one
// trace file per cell under <out>.traces/.
void write_experiment(const ExperimentResult& result, const ExperimentSpec& spec);

// Grouped means/stds over feasible rows; exposed for tests.
std::string emit_summary(const std::vector<ResultRow>& rows);
std::string emit_gaps(const std::vector<ResultRow>& rows);

}  // namespace bdmec
