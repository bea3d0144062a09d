#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace bdmec {

// Scenario constants shared by every module. Values are stored exactly as
// they appear in the config file (dB fields stay in dB); conversions to
// linear units happen through the helper methods so that a config round-trips
// bit-exactly through serialization.
struct SystemConfig {
  // Topology
  std::size_t n_users = 4;     // N
  std::size_t n_antennas = 8;  // M, AP array size
  std::size_t n_elements = 8;  // K, IRS cells
  std::size_t n_groups = 2;    // L, IRS groups (divides K)

  // Radio
  double bandwidth_hz = 20e6;
  double noise_psd_dbm_hz = -174.0;
  double pl0_db = 31.5;        // path loss at 1 m reference
  double alpha_direct = 3.5;   // UE-AP exponent
  double alpha_ue_uav = 2.2;   // UE-UAV exponent
  double alpha_uav_ap = 2.2;   // UAV-AP exponent
  double eta_los_db = 1.0;     // excess loss, line of sight
  double eta_nlos_db = 20.0;   // excess loss, blocked
  double p_los_direct = 0.05;
  double p_los_irs = 0.95;

  // Compute / energy
  double f_user_max_hz = 1e9;   // per-UE cycles/s at full allocation
  double f_mec_max_hz = 2e11;   // MEC cycles/s at full allocation
  double e_max_j = 2.0;         // per-UE energy budget
  double p_hover_w = 100.0;     // UAV hover power
  double p_rx_w = 0.1;          // constant UE receive/idle power
  double eps_ceff = 1e-28;      // switched-capacitance energy coefficient

  // QoS / objective
  double gamma_min_db = 0.0;    // per-UE SINR floor
  double w1 = 0.5;              // hover-energy weight
  double w2 = 0.5;              // worst-latency weight

  // Geometry bounds
  double d_ub_max_m = 100.0;    // UAV-AP distance cap
  double d_nu_max_m = 100.0;    // UE-UAV distance cap
  double h_min_m = 20.0;
  double h_max_m = 120.0;

  // Solver controls
  double epsilon = 1e-4;        // relative stop tolerance of iterative loops
  std::size_t i_max = 50;       // iteration cap of iterative loops
  double p_max_w = 0.1;         // per-UE transmit power cap

  std::size_t elements_per_group() const { return n_elements / n_groups; }
  double noise_power_w() const {
    return std::pow(10.0, (noise_psd_dbm_hz - 30.0) / 10.0) * bandwidth_hz;
  }
  double gamma_min_linear() const { return std::pow(10.0, gamma_min_db / 10.0); }
};

// Returns every violated invariant; empty means the config is usable.
std::vector<std::string> validate_config(const SystemConfig& cfg);

// Flat key-value config format with [section] headers and '#' comments.
// Unknown sections or keys are hard errors; [system] covers every
// SystemConfig field. Extra sections may be consumed by other modules
// through parse_config_sections.
SystemConfig load_config(std::istream& in);
SystemConfig load_config_file(const std::string& path);
void save_config(const SystemConfig& cfg, std::ostream& out);

struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

// Raw tokenizer used by load_config and by the harness for its own sections.
std::vector<ConfigEntry> parse_config_sections(std::istream& in);

// Applies all [system] entries onto cfg; rejects unknown keys.
void apply_system_section(const std::vector<ConfigEntry>& entries, SystemConfig& cfg);

}  // namespace bdmec
