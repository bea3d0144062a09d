// Command-line front end: run experiment presets, validate configs, and
// replay serialized channel realizations.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "bdmec/errors.hpp"
#include "bdmec/experiment.hpp"
#include "bdmec/numfmt.hpp"
#include "bdmec/replay.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

struct LoadedConfig {
  bdmec::SystemConfig system;
  bdmec::ScenarioConfig scenario;
  std::string preset;
  std::size_t trials = 0;
  std::uint64_t base_seed = 0;
  bool has_preset = false, has_trials = false, has_seed = false;
};

LoadedConfig load(const std::string& path) {
  LoadedConfig out;
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw bdmec::ConfigError("cannot open config file '" + path + "'");
  const auto entries = bdmec::parse_config_sections(in);
  for (const auto& e : entries) {
    if (e.section != "system" && e.section != "scenario" && e.section != "experiment") {
      throw bdmec::ConfigError("config line " + std::to_string(e.line) + ": unknown section '[" +
                               e.section + "]'");
    }
    if (e.section == "experiment") {
      if (e.key == "preset") {
        out.preset = e.value;
        out.has_preset = true;
      } else if (e.key == "trials") {
        out.trials = std::stoul(e.value);
        out.has_trials = true;
      } else if (e.key == "base_seed") {
        out.base_seed = std::stoull(e.value);
        out.has_seed = true;
      } else {
        throw bdmec::ConfigError("config line " + std::to_string(e.line) + ": unknown key '" +
                                 e.key + "' in [experiment]");
      }
    }
  }
  bdmec::apply_system_section(entries, out.system);
  bdmec::apply_scenario_section(entries, out.scenario);
  const auto errors = bdmec::validate_config(out.system);
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& err : errors) msg += "\n  " + err;
    throw bdmec::ConfigError(msg);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BD-IRS UAV edge-computing resource optimization simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset = "convergence";
  std::uint64_t seed = 1;
  std::size_t trials = 0;
  std::vector<std::string> arch_names;
  std::vector<std::string> scheme_names;
  std::string out_path = "results.csv";

  auto* run = app.add_subcommand("run", "Run an experiment preset");
  run->add_option("--config", config_path, "Config file");
  run->add_option("--preset", preset,
                  "convergence | rate-vs-K | latency-vs-N | latency-vs-cycles | hover-vs-bits");
  run->add_option("--seed", seed, "Base seed");
  run->add_option("--trials", trials, "Monte Carlo trials per grid point");
  run->add_option("--arch", arch_names, "Architectures (sc gc fc random-phase random-power no-irs fixed-building)");
  run->add_option("--scheme", scheme_names, "Schemes (proposed binary edge local fixed-compute)");
  run->add_option("--out", out_path, "Output CSV path");

  auto* validate = app.add_subcommand("validate", "Validate a config file");
  validate->add_option("--config", config_path, "Config file")->required();

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "Re-run from a serialized channel realization");
  replay->add_option("--config", config_path, "Config file");
  replay->add_option("--channels", replay_path, "Replay file")->required();
  replay->add_option("--out", out_path, "Output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      load(config_path);
      std::cout << "ok\n";
      return kExitOk;
    }

    const LoadedConfig loaded = load(config_path);

    if (replay->parsed()) {
      const bdmec::ReplayRecord rec = bdmec::read_replay_file(replay_path);
      bdmec::SystemConfig cfg = loaded.system;
      cfg.n_users = rec.channels.n_users();
      cfg.n_antennas = rec.channels.n_antennas();
      cfg.n_elements = rec.channels.n_elements();
      if (rec.has_phase) cfg.n_groups = rec.phase.n_groups();
      if (cfg.n_groups > cfg.n_elements || cfg.n_elements % cfg.n_groups != 0) cfg.n_groups = 1;

      const bdmec::Scenario scenario =
          bdmec::make_scenario(cfg, loaded.scenario, loaded.has_seed ? loaded.base_seed : seed);
      Eigen::VectorXd beta0 = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cfg.n_users));
      const bdmec::IrsArch arch = rec.has_phase ? rec.phase.arch : bdmec::IrsArch::GroupConnected;
      auto [comm0, fp0] =
          bdmec::comm::initial_comm_state(rec.channels, arch, beta0, scenario.tasks, cfg);
      if (rec.has_phase) comm0.phi = rec.phase;
      const auto res =
          bdmec::comm::optimize(rec.channels, beta0, scenario.tasks, comm0, fp0, cfg);
      std::cout << "user,rate_bps,sinr,p_w\n";
      for (Eigen::Index i = 0; i < res.rates_bps.size(); ++i) {
        std::cout << i << ',' << bdmec::format_double(res.rates_bps[i]) << ','
                  << bdmec::format_double(res.sinr[i]) << ','
                  << bdmec::format_double(res.alloc.p[i]) << '\n';
      }
      return kExitOk;
    }

    // run
    bdmec::ExperimentSpec spec = bdmec::make_preset(
        loaded.has_preset && !run->count("--preset") ? loaded.preset : preset, loaded.system,
        loaded.scenario);
    if (loaded.has_trials) spec.n_trials = loaded.trials;
    if (loaded.has_seed) spec.base_seed = loaded.base_seed;
    if (run->count("--seed")) spec.base_seed = seed;
    if (trials > 0) spec.n_trials = trials;
    if (!arch_names.empty()) {
      spec.archs.clear();
      for (const auto& name : arch_names) {
        const auto a = bdmec::parse_arch(name);
        if (!a) throw bdmec::ConfigError("unknown architecture '" + name + "'");
        spec.archs.push_back(*a);
      }
    }
    if (!scheme_names.empty()) {
      spec.schemes.clear();
      for (const auto& name : scheme_names) {
        const auto s = bdmec::parse_scheme(name);
        if (!s) throw bdmec::ConfigError("unknown scheme '" + name + "'");
        spec.schemes.push_back(*s);
      }
    }
    spec.out_path = out_path;

    const bdmec::ExperimentResult result = bdmec::run_experiment(spec);
    bdmec::write_experiment(result, spec);
    std::cout << "wrote " << result.rows.size() << " rows to " << spec.out_path << "\n";
    if (!result.any_feasible) {
      std::cerr << "every cell was infeasible\n";
      return kExitInfeasible;
    }
    return kExitOk;
  } catch (const bdmec::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
