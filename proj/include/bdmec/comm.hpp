#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "bdmec/channel.hpp"
#include "bdmec/phase_shift.hpp"
#include "bdmec/task.hpp"

namespace bdmec {

// Communication-side decision state.
struct CommAllocation {
  Eigen::VectorXd p;  // transmit powers
  CMatrix w;          // unit-norm receive beamformers, one column per user
  PhaseShift phi;
};

// Fractional-programming auxiliaries.
//  psi   : per-user SINR auxiliaries
//  zeta  : quadratic-transform multipliers
//  chi, gamma_aux : outer weights tracking (1/R, beta*S/R)
struct FpState {
  Eigen::VectorXd psi;
  Eigen::VectorXcd zeta;
  Eigen::VectorXd chi;
  Eigen::VectorXd gamma_aux;
  double theta_step = 0.5;

  // Per-user objective weights chi_n * gamma_n. When every weight vanishes
  // (nothing is offloaded) the solvers fall back to uniform weights so rate
  // still gets optimized.
  Eigen::VectorXd weights() const;
};

namespace comm {

// Current per-user SINR under (w, p, phi); the dual-transform optimum.
Eigen::VectorXd update_psi(const std::vector<CVector>& heff, const CMatrix& w,
                           const Eigen::VectorXd& p, double noise_w);

// Quadratic-transform multiplier: sqrt((1+psi) p) w^H h over the
// interference-plus-noise power seen by each user.
Eigen::VectorXcd update_zeta(const std::vector<CVector>& heff, const CMatrix& w,
                             const Eigen::VectorXd& p, const Eigen::VectorXd& psi,
                             double noise_w);

// MMSE receive beamformers, normalized to unit norm. Falls back to the first
// canonical basis vector for users with zero power or zero channel.
CMatrix mmse_beamformer(const std::vector<CVector>& heff, const Eigen::VectorXd& p,
                        const Eigen::VectorXd& psi, const Eigen::VectorXcd& zeta,
                        double noise_w);

// Quadratic-transform rate surrogate of one user at the given powers,
// spectral-efficiency units. Concave in p for fixed (w, psi, zeta).
double quad_rate(const std::vector<CVector>& heff, const CMatrix& w, const Eigen::VectorXd& p,
                 const Eigen::VectorXd& psi, const Eigen::VectorXcd& zeta, double noise_w,
                 std::size_t n);

// Dual-transform rate with the SINR still in ratio form; equals quad_rate at
// the zeta returned by update_zeta.
double dual_rate(const std::vector<CVector>& heff, const CMatrix& w, const Eigen::VectorXd& p,
                 const Eigen::VectorXd& psi, double noise_w, std::size_t n);

// Properly normalized dual transform: recovers log2(1 + sinr) exactly when
// psi equals the SINR and the multiplier is optimal. The multiplier of this
// form relates to update_zeta's by a 1/(1+psi) factor.
double quad_rate_normalized(const std::vector<CVector>& heff, const CMatrix& w,
                            const Eigen::VectorXd& p, const Eigen::VectorXd& psi,
                            const Eigen::VectorXcd& zeta_norm, double noise_w, std::size_t n);

// Max-min weighted power control under the exact linearized QoS polytope and
// per-user caps: projected gradient ascent on an annealed soft-min.
// Throws InfeasibleError when the QoS polytope is empty.
Eigen::VectorXd solve_power(const std::vector<CVector>& heff, const CMatrix& w,
                            const FpState& fp, const Eigen::VectorXd& p_init,
                            const SystemConfig& cfg);

// Smallest power vector meeting every SINR floor, if one exists within the
// caps (fixed-point of the QoS system).
std::optional<Eigen::VectorXd> min_qos_powers(const std::vector<CVector>& heff, const CMatrix& w,
                                              const SystemConfig& cfg);

// Damped step of (chi, gamma) toward the fixed point (1/r, beta*S/r), with r
// in spectral-efficiency units.
void update_chi_gamma(FpState& fp, const Eigen::VectorXd& rates_spectral,
                      const Eigen::VectorXd& beta, const std::vector<UserTask>& tasks);

struct CommTraceRecord {
  std::size_t iter = 0;
  double min_rate_bps = 0.0;
  double max_offload_latency_s = 0.0;  // max over users of beta*S/R
  double surrogate = 0.0;              // min weighted spectral rate
  double xi_norm_sq = 0.0;
  double kappa = 0.0;
};

struct CommResult {
  CommAllocation alloc;
  FpState fp;
  std::vector<CommTraceRecord> trace;
  Eigen::VectorXd rates_bps;
  Eigen::VectorXd sinr;
};

struct CommOptions {
  bool optimize_power = true;
  bool optimize_phase_shift = true;
};

// Initial communication state: uniform half-cap power scaled up until QoS
// holds (or the cap binds), identity reflection, MMSE beamformers, and
// auxiliaries evaluated at that point.
std::pair<CommAllocation, FpState> initial_comm_state(const ChannelSet& ch, IrsArch arch,
                                                      const Eigen::VectorXd& beta,
                                                      const std::vector<UserTask>& tasks,
                                                      const SystemConfig& cfg);

// Outer fractional-programming loop: beamformers, powers, phase shifts, then
// auxiliary updates, keeping the best iterate of the offload-latency proxy.
CommResult optimize(const ChannelSet& ch, const Eigen::VectorXd& beta,
                    const std::vector<UserTask>& tasks, CommAllocation comm0, FpState fp0,
                    const SystemConfig& cfg, const CommOptions& options = {});

}  // namespace comm
}  // namespace bdmec
