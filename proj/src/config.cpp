#include "bdmec/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "bdmec/errors.hpp"
#include "bdmec/numfmt.hpp"

namespace bdmec {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const ConfigEntry& e) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config line " + std::to_string(e.line) + ": key '" + e.key +
                      "' has non-numeric value '" + e.value + "'");
  }
}

std::size_t parse_count(const ConfigEntry& e) {
  const double v = parse_double(e);
  if (v < 0 || v != std::floor(v)) {
    throw ConfigError("config line " + std::to_string(e.line) + ": key '" + e.key +
                      "' must be a non-negative integer, got '" + e.value + "'");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<ConfigEntry> parse_config_sections(std::istream& in) {
  std::vector<ConfigEntry> entries;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    ConfigEntry e;
    e.section = section;
    e.key = trim(line.substr(0, eq));
    e.value = trim(line.substr(eq + 1));
    e.line = lineno;
    if (e.key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    if (e.section.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": key '" + e.key +
                        "' appears before any [section] header");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void apply_system_section(const std::vector<ConfigEntry>& entries, SystemConfig& cfg) {
  const std::map<std::string, std::function<void(const ConfigEntry&)>> setters = {
      {"n_users", [&](const ConfigEntry& e) { cfg.n_users = parse_count(e); }},
      {"n_antennas", [&](const ConfigEntry& e) { cfg.n_antennas = parse_count(e); }},
      {"n_elements", [&](const ConfigEntry& e) { cfg.n_elements = parse_count(e); }},
      {"n_groups", [&](const ConfigEntry& e) { cfg.n_groups = parse_count(e); }},
      {"bandwidth_hz", [&](const ConfigEntry& e) { cfg.bandwidth_hz = parse_double(e); }},
      {"noise_psd_dbm_hz", [&](const ConfigEntry& e) { cfg.noise_psd_dbm_hz = parse_double(e); }},
      {"pl0_db", [&](const ConfigEntry& e) { cfg.pl0_db = parse_double(e); }},
      {"alpha_direct", [&](const ConfigEntry& e) { cfg.alpha_direct = parse_double(e); }},
      {"alpha_ue_uav", [&](const ConfigEntry& e) { cfg.alpha_ue_uav = parse_double(e); }},
      {"alpha_uav_ap", [&](const ConfigEntry& e) { cfg.alpha_uav_ap = parse_double(e); }},
      {"eta_los_db", [&](const ConfigEntry& e) { cfg.eta_los_db = parse_double(e); }},
      {"eta_nlos_db", [&](const ConfigEntry& e) { cfg.eta_nlos_db = parse_double(e); }},
      {"p_los_direct", [&](const ConfigEntry& e) { cfg.p_los_direct = parse_double(e); }},
      {"p_los_irs", [&](const ConfigEntry& e) { cfg.p_los_irs = parse_double(e); }},
      {"f_user_max_hz", [&](const ConfigEntry& e) { cfg.f_user_max_hz = parse_double(e); }},
      {"f_mec_max_hz", [&](const ConfigEntry& e) { cfg.f_mec_max_hz = parse_double(e); }},
      {"e_max_j", [&](const ConfigEntry& e) { cfg.e_max_j = parse_double(e); }},
      {"p_hover_w", [&](const ConfigEntry& e) { cfg.p_hover_w = parse_double(e); }},
      {"p_rx_w", [&](const ConfigEntry& e) { cfg.p_rx_w = parse_double(e); }},
      {"eps_ceff", [&](const ConfigEntry& e) { cfg.eps_ceff = parse_double(e); }},
      {"gamma_min_db", [&](const ConfigEntry& e) { cfg.gamma_min_db = parse_double(e); }},
      {"w1", [&](const ConfigEntry& e) { cfg.w1 = parse_double(e); }},
      {"w2", [&](const ConfigEntry& e) { cfg.w2 = parse_double(e); }},
      {"d_ub_max_m", [&](const ConfigEntry& e) { cfg.d_ub_max_m = parse_double(e); }},
      {"d_nu_max_m", [&](const ConfigEntry& e) { cfg.d_nu_max_m = parse_double(e); }},
      {"h_min_m", [&](const ConfigEntry& e) { cfg.h_min_m = parse_double(e); }},
      {"h_max_m", [&](const ConfigEntry& e) { cfg.h_max_m = parse_double(e); }},
      {"epsilon", [&](const ConfigEntry& e) { cfg.epsilon = parse_double(e); }},
      {"i_max", [&](const ConfigEntry& e) { cfg.i_max = parse_count(e); }},
      {"p_max_w", [&](const ConfigEntry& e) { cfg.p_max_w = parse_double(e); }},
  };
  for (const auto& e : entries) {
    if (e.section != "system") continue;
    const auto it = setters.find(e.key);
    if (it == setters.end()) {
      throw ConfigError("config line " + std::to_string(e.line) + ": unknown key '" + e.key +
                        "' in [system]");
    }
    it->second(e);
  }
}

SystemConfig load_config(std::istream& in) {
  const auto entries = parse_config_sections(in);
  for (const auto& e : entries) {
    if (e.section != "system" && e.section != "scenario" && e.section != "experiment") {
      throw ConfigError("config line " + std::to_string(e.line) + ": unknown section '[" +
                        e.section + "]'");
    }
  }
  SystemConfig cfg;
  apply_system_section(entries, cfg);
  const auto errors = validate_config(cfg);
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& err : errors) msg += "\n  " + err;
    throw ConfigError(msg);
  }
  return cfg;
}

SystemConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return load_config(in);
}

void save_config(const SystemConfig& cfg, std::ostream& out) {
  out << "[system]\n";
  out << "n_users = " << cfg.n_users << "\n";
  out << "n_antennas = " << cfg.n_antennas << "\n";
  out << "n_elements = " << cfg.n_elements << "\n";
  out << "n_groups = " << cfg.n_groups << "\n";
  out << "bandwidth_hz = " << format_double(cfg.bandwidth_hz) << "\n";
  out << "noise_psd_dbm_hz = " << format_double(cfg.noise_psd_dbm_hz) << "\n";
  out << "pl0_db = " << format_double(cfg.pl0_db) << "\n";
  out << "alpha_direct = " << format_double(cfg.alpha_direct) << "\n";
  out << "alpha_ue_uav = " << format_double(cfg.alpha_ue_uav) << "\n";
  out << "alpha_uav_ap = " << format_double(cfg.alpha_uav_ap) << "\n";
  out << "eta_los_db = " << format_double(cfg.eta_los_db) << "\n";
  out << "eta_nlos_db = " << format_double(cfg.eta_nlos_db) << "\n";
  out << "p_los_direct = " << format_double(cfg.p_los_direct) << "\n";
  out << "p_los_irs = " << format_double(cfg.p_los_irs) << "\n";
  out << "f_user_max_hz = " << format_double(cfg.f_user_max_hz) << "\n";
  out << "f_mec_max_hz = " << format_double(cfg.f_mec_max_hz) << "\n";
  out << "e_max_j = " << format_double(cfg.e_max_j) << "\n";
  out << "p_hover_w = " << format_double(cfg.p_hover_w) << "\n";
  out << "p_rx_w = " << format_double(cfg.p_rx_w) << "\n";
  out << "eps_ceff = " << format_double(cfg.eps_ceff) << "\n";
  out << "gamma_min_db = " << format_double(cfg.gamma_min_db) << "\n";
  out << "w1 = " << format_double(cfg.w1) << "\n";
  out << "w2 = " << format_double(cfg.w2) << "\n";
  out << "d_ub_max_m = " << format_double(cfg.d_ub_max_m) << "\n";
  out << "d_nu_max_m = " << format_double(cfg.d_nu_max_m) << "\n";
  out << "h_min_m = " << format_double(cfg.h_min_m) << "\n";
  out << "h_max_m = " << format_double(cfg.h_max_m) << "\n";
  out << "epsilon = " << format_double(cfg.epsilon) << "\n";
  out << "i_max = " << cfg.i_max << "\n";
  out << "p_max_w = " << format_double(cfg.p_max_w) << "\n";
}

std::vector<std::string> validate_config(const SystemConfig& cfg) {
  std::vector<std::string> errors;
  const auto require = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  require(cfg.n_users >= 1, "n_users: N >= 1 required");
  require(cfg.n_antennas >= 1, "n_antennas: M >= 1 required");
  require(cfg.n_elements >= 1, "n_elements: K >= 1 required");
  require(cfg.n_groups >= 1 && cfg.n_groups <= cfg.n_elements,
          "n_groups: 1 <= L <= K required");
  if (cfg.n_groups >= 1) {
    require(cfg.n_elements % cfg.n_groups == 0, "n_groups: K mod L != 0");
  }
  require(cfg.bandwidth_hz > 0, "bandwidth_hz: must be > 0");
  require(cfg.f_user_max_hz > 0, "f_user_max_hz: must be > 0");
  require(cfg.f_mec_max_hz > 0, "f_mec_max_hz: must be > 0");
  require(cfg.e_max_j > 0, "e_max_j: must be > 0");
  require(cfg.p_hover_w > 0, "p_hover_w: must be > 0");
  require(cfg.p_rx_w > 0, "p_rx_w: must be > 0");
  require(cfg.p_max_w > 0, "p_max_w: must be > 0");
  require(cfg.eps_ceff > 0, "eps_ceff: must be > 0");
  require(cfg.p_los_direct >= 0 && cfg.p_los_direct <= 1,
          "p_los_direct: probability must lie in [0, 1]");
  require(cfg.p_los_irs >= 0 && cfg.p_los_irs <= 1,
          "p_los_irs: probability must lie in [0, 1]");
  require(cfg.h_min_m <= cfg.h_max_m, "h_min_m: must be <= h_max_m");
  require(cfg.h_min_m >= 1.0, "h_min_m: must be >= 1 m (path-loss reference distance)");
  require(cfg.w1 >= 0, "w1: must be >= 0");
  require(cfg.w2 >= 0, "w2: must be >= 0");
  require(cfg.w1 + cfg.w2 > 0, "w1, w2: w1 + w2 must be > 0");
  require(cfg.d_ub_max_m > 0, "d_ub_max_m: must be > 0");
  require(cfg.d_nu_max_m > 0, "d_nu_max_m: must be > 0");
  require(cfg.epsilon > 0, "epsilon: must be > 0");
  require(cfg.i_max >= 1, "i_max: must be >= 1");
  return errors;
}

}  // namespace bdmec
