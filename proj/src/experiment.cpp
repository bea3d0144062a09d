#include "bdmec/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include "bdmec/errors.hpp"
#include "bdmec/numfmt.hpp"
#include "bdmec/rng.hpp"

namespace bdmec {

void apply_scenario_section(const std::vector<ConfigEntry>& entries, ScenarioConfig& sc) {
  for (const auto& e : entries) {
    if (e.section != "scenario") continue;
    double v = 0.0;
    try {
      std::size_t pos = 0;
      v = std::stod(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw ConfigError("config line " + std::to_string(e.line) + ": key '" + e.key +
                        "' has non-numeric value");
    }
    if (e.key == "area_m") sc.area_m = v;
    else if (e.key == "ap_x") sc.ap_x = v;
    else if (e.key == "ap_y") sc.ap_y = v;
    else if (e.key == "building_x") sc.building_x = v;
    else if (e.key == "building_y") sc.building_y = v;
    else if (e.key == "building_z") sc.building_z = v;
    else if (e.key == "s_min_bits") sc.s_min_bits = v;
    else if (e.key == "s_max_bits") sc.s_max_bits = v;
    else if (e.key == "c_min_cycles_per_bit") sc.c_min_cycles_per_bit = v;
    else if (e.key == "c_max_cycles_per_bit") sc.c_max_cycles_per_bit = v;
    else {
      throw ConfigError("config line " + std::to_string(e.line) + ": unknown key '" + e.key +
                        "' in [scenario]");
    }
  }
}

ExperimentSpec make_preset(const std::string& name, const SystemConfig& cfg,
                           const ScenarioConfig& scenario) {
  ExperimentSpec spec;
  spec.preset = name;
  spec.cfg = cfg;
  spec.scenario = scenario;
  if (name == "convergence") {
    spec.sweep_name = "none";
    spec.grid = {0.0};
    spec.schemes = {Scheme::Proposed};
    spec.archs = {ArchVariant::SC, ArchVariant::GC, ArchVariant::FC};
    spec.n_trials = 10;
  } else if (name == "rate-vs-K") {
    spec.sweep_name = "n_elements";
    spec.grid = {4.0, 8.0, 16.0};
    spec.schemes = {Scheme::Proposed};
    spec.archs = {ArchVariant::SC, ArchVariant::GC, ArchVariant::FC};
  } else if (name == "latency-vs-N") {
    spec.sweep_name = "n_users";
    spec.grid = {2.0, 4.0, 6.0, 8.0};
    spec.schemes = {Scheme::Proposed, Scheme::Binary, Scheme::Edge, Scheme::Local,
                    Scheme::FixedCompute};
    spec.archs = {ArchVariant::GC};
  } else if (name == "latency-vs-cycles") {
    spec.sweep_name = "c_cycles_per_bit";
    spec.grid = {500.0, 1000.0, 2000.0, 4000.0};
    spec.schemes = {Scheme::Proposed, Scheme::Binary, Scheme::Edge, Scheme::Local,
                    Scheme::FixedCompute};
    spec.archs = {ArchVariant::GC};
  } else if (name == "hover-vs-bits") {
    spec.sweep_name = "s_bits";
    spec.grid = {50e3, 100e3, 200e3, 400e3};
    spec.schemes = {Scheme::Proposed, Scheme::Binary, Scheme::Edge};
    spec.archs = {ArchVariant::GC};
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return spec;
}

void apply_sweep(const std::string& sweep_name, double value, SystemConfig& cfg,
                 ScenarioConfig& scenario) {
  if (sweep_name == "none") return;
  if (sweep_name == "n_users") {
    cfg.n_users = static_cast<std::size_t>(value);
  } else if (sweep_name == "n_elements") {
    cfg.n_elements = static_cast<std::size_t>(value);
    if (cfg.n_elements % cfg.n_groups != 0) {
      cfg.n_groups = cfg.n_elements >= 2 ? 2 : 1;
    }
  } else if (sweep_name == "c_cycles_per_bit") {
    scenario.c_min_cycles_per_bit = value;
    scenario.c_max_cycles_per_bit = value;
  } else if (sweep_name == "s_bits") {
    scenario.s_min_bits = value;
    scenario.s_max_bits = value;
  } else {
    throw ConfigError("unknown sweep variable '" + sweep_name + "'");
  }
}

Scenario make_scenario(const SystemConfig& cfg, const ScenarioConfig& sc, std::uint64_t seed) {
  Scenario s;
  s.cfg = cfg;
  s.seed = seed;
  s.ap = Position{sc.ap_x, sc.ap_y, 0.0};
  s.building = Position{sc.building_x, sc.building_y, sc.building_z};
  Rng rng(seed ^ 0xa0761d6478bd642fULL);
  s.ue.reserve(cfg.n_users);
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    s.ue.push_back(Position{rng.uniform(0.0, sc.area_m), rng.uniform(0.0, sc.area_m), 0.0});
  }
  s.tasks.reserve(cfg.n_users);
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    const double bits = rng.uniform(sc.s_min_bits, sc.s_max_bits);
    const double cpb = rng.uniform(sc.c_min_cycles_per_bit, sc.c_max_cycles_per_bit);
    s.tasks.push_back(UserTask::make(bits, cpb));
  }
  return s;
}

namespace {

bool is_unitary_arch(ArchVariant a) {
  return a == ArchVariant::SC || a == ArchVariant::GC || a == ArchVariant::FC;
}

MetricsReport metrics_of(const BcdResult& r) { return r.metrics; }

ResultRow base_row(const ExperimentSpec& spec, double grid_value, std::size_t trial,
                   Scheme scheme, ArchVariant arch) {
  ResultRow row;
  row.preset = spec.preset;
  row.sweep = spec.sweep_name;
  row.grid_value = grid_value;
  row.trial = trial;
  row.scheme = scheme;
  row.arch = arch;
  return row;
}

std::vector<ResultRow> run_trial(const ExperimentSpec& spec, double grid_value,
                                 std::size_t trial) {
  SystemConfig cfg = spec.cfg;
  ScenarioConfig scen = spec.scenario;
  apply_sweep(spec.sweep_name, grid_value, cfg, scen);
  const Scenario scenario = make_scenario(cfg, scen, spec.base_seed + trial);

  std::vector<ResultRow> rows;
  const bool proposed_only =
      spec.schemes.size() == 1 && spec.schemes[0] == Scheme::Proposed;

  if (proposed_only) {
    // The unitary topologies run as one nested chain; other variants run
    // independently.
    std::vector<ArchVariant> chained;
    for (const ArchVariant a : {ArchVariant::SC, ArchVariant::GC, ArchVariant::FC}) {
      if (std::find(spec.archs.begin(), spec.archs.end(), a) != spec.archs.end()) {
        chained.push_back(a);
      }
    }
    std::map<ArchVariant, BcdResult> solved;
    std::string chain_error;
    if (!chained.empty()) {
      try {
        solved = run_arch_comparison(scenario, chained);
      } catch (const InfeasibleError& err) {
        chain_error = err.what();
      }
    }
    for (const ArchVariant arch : spec.archs) {
      ResultRow row = base_row(spec, grid_value, trial, Scheme::Proposed, arch);
      if (is_unitary_arch(arch)) {
        if (const auto it = solved.find(arch); it != solved.end()) {
          row.feasible = true;
          row.metrics = metrics_of(it->second);
          row.comm_trace = it->second.comm_trace;
        } else {
          row.fail_stage = chain_error;
        }
      } else {
        try {
          const BcdResult r = run_bcd(scenario, arch);
          row.feasible = true;
          row.metrics = metrics_of(r);
          row.comm_trace = r.comm_trace;
        } catch (const InfeasibleError& err) {
          row.fail_stage = err.what();
        }
      }
      rows.push_back(std::move(row));
    }
  } else {
    for (const ArchVariant arch : spec.archs) {
      try {
        const auto comparison = run_scheme_comparison(scenario, arch);
        for (const Scheme scheme : spec.schemes) {
          ResultRow row = base_row(spec, grid_value, trial, scheme, arch);
          const SchemeResult& sr = comparison.at(scheme);
          row.feasible = true;
          row.metrics = sr.metrics;
          rows.push_back(std::move(row));
        }
      } catch (const InfeasibleError& err) {
        for (const Scheme scheme : spec.schemes) {
          ResultRow row = base_row(spec, grid_value, trial, scheme, arch);
          row.fail_stage = err.what();
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

std::string csv_value(double v) {
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

void order_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.grid_value != b.grid_value) return a.grid_value < b.grid_value;
    if (a.trial != b.trial) return a.trial < b.trial;
    if (a.scheme != b.scheme) return static_cast<int>(a.scheme) < static_cast<int>(b.scheme);
    return static_cast<int>(a.arch) < static_cast<int>(b.arch);
  });
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "preset,sweep,grid,trial,scheme,arch,feasible,min_rate_bps,worst_latency_s,"
         "hover_time_s,objective,energy_slack_j,outer_iters\n";
  for (const auto& r : rows) {
    const double nan = std::nan("");
    out << r.preset << ',' << r.sweep << ',' << csv_value(r.grid_value) << ',' << r.trial << ','
        << to_string(r.scheme) << ',' << to_string(r.arch) << ',' << (r.feasible ? 1 : 0) << ','
        << csv_value(r.feasible ? r.metrics.min_rate_bps : nan) << ','
        << csv_value(r.feasible ? r.metrics.worst_latency_s : nan) << ','
        << csv_value(r.feasible ? r.metrics.hover_time_s : nan) << ','
        << csv_value(r.feasible ? r.metrics.objective : nan) << ','
        << csv_value(r.feasible ? r.metrics.energy_slack_j : nan) << ','
        << (r.feasible ? r.metrics.trace.size() : 0) << '\n';
  }
  return out.str();
}

struct GroupKey {
  double grid;
  Scheme scheme;
  ArchVariant arch;
  bool operator<(const GroupKey& o) const {
    if (grid != o.grid) return grid < o.grid;
    if (scheme != o.scheme) return static_cast<int>(scheme) < static_cast<int>(o.scheme);
    return static_cast<int>(arch) < static_cast<int>(o.arch);
  }
};

struct GroupStats {
  std::size_t n = 0;
  std::size_t n_infeasible = 0;
  double sum_rate = 0, sum_rate2 = 0;
  double sum_lat = 0, sum_lat2 = 0;
  double sum_hover = 0, sum_hover2 = 0;
  double sum_obj = 0, sum_obj2 = 0;
};

std::map<GroupKey, GroupStats> group_rows(const std::vector<ResultRow>& rows) {
  std::map<GroupKey, GroupStats> groups;
  for (const auto& r : rows) {
    GroupStats& g = groups[GroupKey{r.grid_value, r.scheme, r.arch}];
    if (!r.feasible) {
      ++g.n_infeasible;
      continue;
    }
    ++g.n;
    g.sum_rate += r.metrics.min_rate_bps;
    g.sum_rate2 += r.metrics.min_rate_bps * r.metrics.min_rate_bps;
    g.sum_lat += r.metrics.worst_latency_s;
    g.sum_lat2 += r.metrics.worst_latency_s * r.metrics.worst_latency_s;
    g.sum_hover += r.metrics.hover_time_s;
    g.sum_hover2 += r.metrics.hover_time_s * r.metrics.hover_time_s;
    g.sum_obj += r.metrics.objective;
    g.sum_obj2 += r.metrics.objective * r.metrics.objective;
  }
  return groups;
}

double mean_of(double sum, std::size_t n) { return n ? sum / static_cast<double>(n) : std::nan(""); }

double std_of(double sum, double sum2, std::size_t n) {
  if (n < 2) return std::nan("");
  const double m = sum / static_cast<double>(n);
  const double var = std::max(0.0, sum2 / static_cast<double>(n) - m * m);
  return std::sqrt(var * static_cast<double>(n) / static_cast<double>(n - 1));
}

}  // namespace

std::string emit_summary(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("emit_summary: no rows");
  const auto groups = group_rows(rows);
  std::ostringstream out;
  out << "grid,scheme,arch,n,n_infeasible,mean_min_rate_bps,std_min_rate_bps,"
         "mean_worst_latency_s,std_worst_latency_s,mean_hover_time_s,std_hover_time_s,"
         "mean_objective,std_objective\n";
  for (const auto& [key, g] : groups) {
    out << csv_value(key.grid) << ',' << to_string(key.scheme) << ',' << to_string(key.arch) << ','
        << g.n << ',' << g.n_infeasible << ',' << csv_value(mean_of(g.sum_rate, g.n)) << ','
        << csv_value(std_of(g.sum_rate, g.sum_rate2, g.n)) << ','
        << csv_value(mean_of(g.sum_lat, g.n)) << ','
        << csv_value(std_of(g.sum_lat, g.sum_lat2, g.n)) << ','
        << csv_value(mean_of(g.sum_hover, g.n)) << ','
        << csv_value(std_of(g.sum_hover, g.sum_hover2, g.n)) << ','
        << csv_value(mean_of(g.sum_obj, g.n)) << ','
        << csv_value(std_of(g.sum_obj, g.sum_obj2, g.n)) << '\n';
  }
  return out.str();
}

std::string emit_gaps(const std::vector<ResultRow>& rows) {
  const auto groups = group_rows(rows);
  std::ostringstream out;
  out << "grid,scheme,metric,better,worse,gap_percent\n";
  // Architecture gaps on the mean min-rate, per (grid, scheme).
  const std::vector<std::pair<ArchVariant, ArchVariant>> arch_pairs = {
      {ArchVariant::FC, ArchVariant::SC},
      {ArchVariant::GC, ArchVariant::SC},
      {ArchVariant::FC, ArchVariant::GC},
      {ArchVariant::GC, ArchVariant::FixedBuilding},
      {ArchVariant::FC, ArchVariant::FixedBuilding},
  };
  for (const auto& [key, g] : groups) {
    for (const auto& [hi, lo] : arch_pairs) {
      if (key.arch != hi) continue;
      const auto it = groups.find(GroupKey{key.grid, key.scheme, lo});
      if (it == groups.end() || it->second.n == 0 || g.n == 0) continue;
      const double base = mean_of(it->second.sum_rate, it->second.n);
      const double top = mean_of(g.sum_rate, g.n);
      if (base > 0) {
        out << csv_value(key.grid) << ',' << to_string(key.scheme) << ",min_rate,"
            << to_string(hi) << ',' << to_string(lo) << ','
            << csv_value(100.0 * (top - base) / base) << '\n';
      }
    }
  }
  // Scheme gaps against the proposed scheme on the mean worst-case latency.
  for (const auto& [key, g] : groups) {
    if (key.scheme == Scheme::Proposed || g.n == 0) continue;
    const auto it = groups.find(GroupKey{key.grid, Scheme::Proposed, key.arch});
    if (it == groups.end() || it->second.n == 0) continue;
    const double proposed = mean_of(it->second.sum_lat, it->second.n);
    const double other = mean_of(g.sum_lat, g.n);
    if (other > 0) {
      out << csv_value(key.grid) << ',' << to_string(key.scheme) << ",worst_latency,proposed,"
          << to_string(key.scheme) << ',' << csv_value(100.0 * (other - proposed) / other)
          << '\n';
    }
  }
  return out.str();
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.grid.empty()) throw ConfigError("experiment grid is empty");
  if (spec.n_trials < 1) throw ConfigError("n_trials must be >= 1");

  struct Cell {
    double grid;
    std::size_t trial;
  };
  std::vector<Cell> cells;
  for (const double g : spec.grid) {
    for (std::size_t t = 0; t < spec.n_trials; ++t) cells.push_back(Cell{g, t});
  }

  std::vector<std::future<std::vector<ResultRow>>> futures;
  futures.reserve(cells.size());
  for (const Cell& c : cells) {
    futures.push_back(std::async(std::launch::async, [&spec, c] {
      return run_trial(spec, c.grid, c.trial);
    }));
  }

  ExperimentResult result;
  for (auto& f : futures) {
    auto rows = f.get();
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  order_rows(result.rows);
  for (const auto& r : result.rows) result.any_feasible |= r.feasible;
  result.csv = rows_to_csv(result.rows);
  result.summary_csv = emit_summary(result.rows);
  result.gaps_csv = emit_gaps(result.rows);
  return result;
}

void write_experiment(const ExperimentResult& result, const ExperimentSpec& spec) {
  const auto write = [](const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
  };
  write(spec.out_path, result.csv);
  write(spec.out_path + ".summary.csv", result.summary_csv);
  write(spec.out_path + ".gaps.csv", result.gaps_csv);

  if (!spec.write_traces) return;
  const std::filesystem::path dir = spec.out_path + ".traces";
  std::filesystem::create_directories(dir);
  for (const auto& r : result.rows) {
    if (!r.feasible) continue;
    std::ostringstream name;
    name << csv_value(r.grid_value) << '_' << r.trial << '_' << to_string(r.scheme) << '_'
         << to_string(r.arch) << ".trace";
    std::ofstream out(dir / name.str(), std::ios::binary);
    for (std::size_t i = 0; i < r.metrics.trace.size(); ++i) {
      out << "iter=" << i << " objective=" << csv_value(r.metrics.trace[i]) << "\n";
    }
    for (const auto& t : r.comm_trace) {
      out << "comm_iter=" << t.iter << " min_rate_bps=" << csv_value(t.min_rate_bps)
          << " max_offload_latency_s=" << csv_value(t.max_offload_latency_s)
          << " surrogate=" << csv_value(t.surrogate) << " xi_norm_sq=" << csv_value(t.xi_norm_sq)
          << " kappa=" << csv_value(t.kappa) << "\n";
    }
  }
}

}  // namespace bdmec
