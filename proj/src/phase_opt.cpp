#include "bdmec/phase_opt.hpp"

#include <stdexcept>

#include "bdmec/manifold.hpp"

namespace bdmec {

CMatrix PhaseObjective::block(const CMatrix& m, std::size_t row_group, std::size_t col_group,
                              std::size_t kbar) const {
  const auto kb = static_cast<Eigen::Index>(kbar);
  return m.block(static_cast<Eigen::Index>(row_group * kbar),
                 static_cast<Eigen::Index>(col_group * kbar), kb, kb);
}

CMatrix PhaseObjective::xhat(const PhaseShift& phi, std::size_t l) const {
  const std::size_t kbar = phi.block_dim();
  CMatrix acc = block(x, l, l, kbar);
  for (std::size_t g = 0; g < phi.n_groups(); ++g) {
    if (g == l) continue;
    acc -= block(z, l, g, kbar) * phi.blocks[g].adjoint() * block(y, g, l, kbar);
  }
  return acc;
}

double PhaseObjective::group_value(const PhaseShift& phi, std::size_t l, const CMatrix& u) const {
  const std::size_t kbar = phi.block_dim();
  const CMatrix zll = block(z, l, l, kbar);
  const CMatrix yll = block(y, l, l, kbar);
  const double quad = (u * zll * u.adjoint() * yll).trace().real();
  const double lin = (u * xhat(phi, l)).trace().real();
  return a_const + quad - 2.0 * lin;
}

double PhaseObjective::group_value(const PhaseShift& phi, std::size_t l) const {
  return group_value(phi, l, phi.blocks[l]);
}

CMatrix PhaseObjective::group_gradient(const PhaseShift& phi, std::size_t l,
                                       const CMatrix& u) const {
  const std::size_t kbar = phi.block_dim();
  return 2.0 * block(y, l, l, kbar) * u * block(z, l, l, kbar) - 2.0 * xhat(phi, l).adjoint();
}

double PhaseObjective::full_value(const PhaseShift& phi) const {
  const CMatrix full = assemble(phi);
  const double lin = (full * x).trace().real();
  const double quad = (full * z * full.adjoint() * y).trace().real();
  return a_const + 2.0 * lin - quad;
}

PhaseObjective build_phase_objective(const ChannelSet& ch, const CMatrix& w,
                                     const Eigen::VectorXd& p,
                                     const Eigen::VectorXd& psi,
                                     const Eigen::VectorXcd& zeta,
                                     const Eigen::VectorXd& weights, double /*noise_w*/) {
  const std::size_t n = ch.n_users();
  const auto k = static_cast<Eigen::Index>(ch.n_elements());

  PhaseObjective obj;
  obj.x = CMatrix::Zero(k, k);
  obj.y = CMatrix::Zero(k, k);
  obj.z = CMatrix::Zero(k, k);

  // Per-user quadratic weights: with a rank-one reflector every projected
  // row w^H G shares one direction, so the per-user interference exclusion
  // consolidates exactly into leave-one-out weights on Z.
  Eigen::VectorXd quad_weight(static_cast<Eigen::Index>(n));

  for (std::size_t i = 0; i < n; ++i) {
    const auto ei = static_cast<Eigen::Index>(i);
    const CVector wi = w.col(ei);
    const Eigen::RowVectorXcd w_through_irs = wi.adjoint() * ch.g_irs_ap;  // 1 x K
    const Complex zeta_hat =
        std::sqrt((1.0 + psi[ei]) * p[ei]) * zeta[ei] * weights[ei];
    obj.x += std::conj(zeta_hat) * (ch.h_ue_irs[i] * w_through_irs);
    obj.y += weights[ei] * std::norm(zeta[ei]) *
             (w_through_irs.adjoint() * w_through_irs);
    quad_weight[ei] = weights[ei] * std::norm(zeta[ei]) * w_through_irs.squaredNorm();

    // Constant part: direct-path linear term and direct-path interference.
    obj.a_const += 2.0 * std::real(std::conj(zeta_hat) * wi.dot(ch.h_direct[i]));
    double interf = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      interf += p[static_cast<Eigen::Index>(j)] * std::norm(wi.dot(ch.h_direct[j]));
    }
    obj.a_const -= weights[ei] * std::norm(zeta[ei]) * interf;
  }

  // Reflected interference covariance, each user's own signal excluded.
  // A single user has no interferers and keeps Z at zero.
  const double total = quad_weight.sum();
  if (n > 1 && total > 0.0) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto ej = static_cast<Eigen::Index>(j);
      const double leave_one_out = 1.0 - quad_weight[ej] / total;
      obj.z += leave_one_out * p[ej] * (ch.h_ue_irs[j] * ch.h_ue_irs[j].adjoint());
    }
  }
  return obj;
}

PhaseOptResult optimize_phase(const PhaseObjective& obj, const PhaseShift& phi0,
                              const PhaseOptOptions& opts,
                              std::vector<PhaseStepRecord>* log) {
  check_feasible(phi0);
  if (phi0.n_elements() != obj.n_elements()) {
    throw std::invalid_argument("optimize_phase: reflection state does not match objective size");
  }

  PhaseOptResult res;
  res.phi = phi0;
  PhaseShift& phi = res.phi;
  const std::size_t kbar = phi.block_dim();
  const double xi_tol = opts.xi_tol_scale * static_cast<double>(kbar * kbar);

  for (std::size_t l = 0; l < phi.n_groups(); ++l) {
    double kappa = opts.kappa_init;
    CMatrix u = phi.blocks[l];
    double f = obj.group_value(phi, l, u);

    for (std::size_t iter = 0; iter < opts.max_inner; ++iter) {
      const CMatrix grad = obj.group_gradient(phi, l, u);
      const CMatrix xi = riemannian_gradient(grad, u);
      const double xi2 = xi.squaredNorm();
      res.xi_norm_sq_last = xi2;
      if (xi2 <= xi_tol) break;

      // First-order decrease per unit step is half the squared Frobenius
      // norm (canonical metric on the unitary group); the step tests
      // compare against that rate. Candidates are re-orthonormalized before
      // evaluation so large steps cannot fake a decrease off the manifold.
      const double rate = 0.5 * xi2;
      const auto step_candidate = [&](const CMatrix& rot) { return polar_project(rot * u); };

      // Step doubling: as long as the doubled rotation still clears the
      // decrease threshold, keep squaring it.
      CMatrix rot = taylor_rotation(xi, kappa);
      CMatrix cand = step_candidate(rot);
      CMatrix rot2 = rot * rot;
      CMatrix cand2 = step_candidate(rot2);
      int guard = 0;
      while (guard < 60 && f - obj.group_value(phi, l, cand2) >= kappa * rate) {
        rot = rot2;
        cand = cand2;
        rot2 = rot * rot;
        cand2 = step_candidate(rot2);
        kappa *= 2.0;
        ++guard;
      }
      // Step halving: shrink until the single rotation achieves at least
      // half the proportional decrease.
      guard = 0;
      while (guard < 80 && kappa > opts.kappa_min &&
             f - obj.group_value(phi, l, cand) <= 0.5 * kappa * rate) {
        kappa *= 0.5;
        rot = taylor_rotation(xi, kappa);
        cand = step_candidate(rot);
        ++guard;
      }

      const CMatrix u_next = cand;
      const double f_next = obj.group_value(phi, l, u_next);
      if (!(f_next <= f)) break;  // no admissible step left

      if (log) {
        PhaseStepRecord rec;
        rec.group = l;
        rec.iter = iter;
        rec.f_before = f;
        rec.f_after = f_next;
        rec.xi_norm_sq = xi2;
        rec.skew_residual = (xi + xi.adjoint()).norm();
        rec.unitarity_defect =
            (u_next.adjoint() * u_next - CMatrix::Identity(u_next.rows(), u_next.cols())).norm();
        rec.kappa = kappa;
        log->push_back(rec);
      }

      const double decrease = f - f_next;
      u = u_next;
      f = f_next;
      ++res.steps;
      res.kappa_last = kappa;
      if (decrease <= 1e-15 * (1.0 + std::abs(f))) break;  // stalled
    }
    phi.blocks[l] = u;
  }

  res.f_full = obj.full_value(phi);
  return res;
}

}  // namespace bdmec
