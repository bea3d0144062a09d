#pragma once

#include <cstddef>
#include <vector>

#include "bdmec/channel.hpp"
#include "bdmec/phase_shift.hpp"

namespace bdmec {

// Reflection-design objective in consolidated matrix form. Over the full
// block-diagonal Phi the (maximized) merit is
//     a_const + 2 Re{Tr(Phi X)} - Tr(Phi Z Phi^H Y),
// while each group update minimizes the per-group restriction
//     F_l(U) = a_const + Tr(U Z_ll U^H Y_ll) - 2 Re{Tr(U Xhat_l)}
// with the cross-group coupling folded into Xhat_l.
struct PhaseObjective {
  double a_const = 0.0;
  CMatrix x;  // K x K linear coefficient
  CMatrix y;  // K x K, Hermitian PSD
  CMatrix z;  // K x K, Hermitian PSD (zero when there is no interference)

  std::size_t n_elements() const { return static_cast<std::size_t>(x.rows()); }

  CMatrix block(const CMatrix& m, std::size_t row_group, std::size_t col_group,
                std::size_t kbar) const;
  // Linear coefficient of group l with every other group held at its current
  // value in phi.
  CMatrix xhat(const PhaseShift& phi, std::size_t l) const;

  double group_value(const PhaseShift& phi, std::size_t l, const CMatrix& u) const;
  double group_value(const PhaseShift& phi, std::size_t l) const;
  CMatrix group_gradient(const PhaseShift& phi, std::size_t l, const CMatrix& u) const;
  // Full maximized merit of the assembled matrix.
  double full_value(const PhaseShift& phi) const;
};

// Consolidates the fractional-programming quantities of one outer iteration
// into the (a, X, Y, Z) form above. `weights` are the per-user objective
// weights (the chi*Gamma products), `zeta` the quadratic-transform
// multipliers and `psi` the SINR auxiliaries.
PhaseObjective build_phase_objective(const ChannelSet& ch, const CMatrix& w,
                                     const Eigen::VectorXd& p,
                                     const Eigen::VectorXd& psi,
                                     const Eigen::VectorXcd& zeta,
                                     const Eigen::VectorXd& weights,
                                     double noise_w);

struct PhaseOptOptions {
  double xi_tol_scale = 1e-8;   // stop when ||Xi||_F^2 <= scale * Kbar^2
  std::size_t max_inner = 200;  // per-group iteration cap
  double kappa_init = 1.0;
  double kappa_min = 1e-12;
};

// One accepted descent step, for diagnostics and property tests.
struct PhaseStepRecord {
  std::size_t group = 0;
  std::size_t iter = 0;
  double f_before = 0.0;
  double f_after = 0.0;
  double xi_norm_sq = 0.0;
  double skew_residual = 0.0;
  double unitarity_defect = 0.0;
  double kappa = 0.0;
};

struct PhaseOptResult {
  PhaseShift phi;
  double f_full = 0.0;          // maximized merit at the returned point
  double xi_norm_sq_last = 0.0;
  double kappa_last = 0.0;
  std::size_t steps = 0;
};

// Sequential group sweep of Riemannian steepest descent with step doubling /
// halving. phi0 must satisfy the block-unitary constraints.
PhaseOptResult optimize_phase(const PhaseObjective& obj, const PhaseShift& phi0,
                              const PhaseOptOptions& opts = {},
                              std::vector<PhaseStepRecord>* log = nullptr);

}  // namespace bdmec
