#include "bdmec/comm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bdmec/errors.hpp"
#include "bdmec/phase_opt.hpp"

namespace bdmec {

Eigen::VectorXd FpState::weights() const {
  Eigen::VectorXd w = chi.cwiseProduct(gamma_aux);
  if (w.size() == 0 || w.maxCoeff() <= 0.0) {
    return Eigen::VectorXd::Ones(w.size());
  }
  return w;
}

namespace comm {
namespace {

constexpr double kLn2 = 0.6931471805599453;

double interference_plus_noise(const std::vector<CVector>& heff, const CVector& wn,
                               const Eigen::VectorXd& p, std::size_t n, double noise_w) {
  double acc = noise_w * wn.squaredNorm();
  for (std::size_t j = 0; j < heff.size(); ++j) {
    if (j == n) continue;
    acc += p[static_cast<Eigen::Index>(j)] * std::norm(wn.dot(heff[j]));
  }
  return acc;
}

}  // namespace

Eigen::VectorXd update_psi(const std::vector<CVector>& heff, const CMatrix& w,
                           const Eigen::VectorXd& p, double noise_w) {
  const auto n = static_cast<Eigen::Index>(heff.size());
  Eigen::VectorXd psi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const CVector wn = w.col(i);
    const double denom = interference_plus_noise(heff, wn, p, static_cast<std::size_t>(i), noise_w);
    psi[i] = p[i] * std::norm(wn.dot(heff[static_cast<std::size_t>(i)])) / denom;
  }
  return psi;
}

Eigen::VectorXcd update_zeta(const std::vector<CVector>& heff, const CMatrix& w,
                             const Eigen::VectorXd& p, const Eigen::VectorXd& psi,
                             double noise_w) {
  if (noise_w <= 0.0) throw std::invalid_argument("update_zeta: noise power must be positive");
  const auto n = static_cast<Eigen::Index>(heff.size());
  Eigen::VectorXcd zeta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const CVector wn = w.col(i);
    const double denom = interference_plus_noise(heff, wn, p, static_cast<std::size_t>(i), noise_w);
    zeta[i] = std::sqrt((1.0 + psi[i]) * p[i]) * wn.dot(heff[static_cast<std::size_t>(i)]) / denom;
  }
  return zeta;
}

CMatrix mmse_beamformer(const std::vector<CVector>& heff, const Eigen::VectorXd& p,
                        const Eigen::VectorXd& psi, const Eigen::VectorXcd& zeta,
                        double noise_w) {
  if (noise_w <= 0.0) throw std::invalid_argument("mmse_beamformer: noise power must be positive");
  const std::size_t users = heff.size();
  const auto m = static_cast<Eigen::Index>(heff[0].size());
  CMatrix w(m, static_cast<Eigen::Index>(users));
  for (std::size_t i = 0; i < users; ++i) {
    CMatrix cov = noise_w * CMatrix::Identity(m, m);
    for (std::size_t j = 0; j < users; ++j) {
      if (j == i) continue;
      cov += p[static_cast<Eigen::Index>(j)] * (heff[j] * heff[j].adjoint());
    }
    const auto ei = static_cast<Eigen::Index>(i);
    const CVector raw =
        zeta[ei] * std::sqrt((1.0 + psi[ei]) * p[ei]) * cov.llt().solve(heff[i]);
    const double norm = raw.norm();
    if (norm > 0.0) {
      w.col(ei) = raw / norm;
    } else {
      w.col(ei) = CVector::Zero(m);
      w(0, ei) = 1.0;
    }
  }
  return w;
}

double dual_rate(const std::vector<CVector>& heff, const CMatrix& w, const Eigen::VectorXd& p,
                 const Eigen::VectorXd& psi, double noise_w, std::size_t n) {
  const auto en = static_cast<Eigen::Index>(n);
  const CVector wn = w.col(en);
  const double denom = interference_plus_noise(heff, wn, p, n, noise_w);
  const double signal = p[en] * std::norm(wn.dot(heff[n]));
  return std::log2(1.0 + psi[en]) - psi[en] + (1.0 + psi[en]) * signal / denom;
}

double quad_rate(const std::vector<CVector>& heff, const CMatrix& w, const Eigen::VectorXd& p,
                 const Eigen::VectorXd& psi, const Eigen::VectorXcd& zeta, double noise_w,
                 std::size_t n) {
  const auto en = static_cast<Eigen::Index>(n);
  const CVector wn = w.col(en);
  const double denom = interference_plus_noise(heff, wn, p, n, noise_w);
  const double lin = 2.0 * std::sqrt((1.0 + psi[en]) * p[en]) *
                     std::real(std::conj(zeta[en]) * wn.dot(heff[n]));
  return std::log2(1.0 + psi[en]) - psi[en] + lin - std::norm(zeta[en]) * denom;
}

double quad_rate_normalized(const std::vector<CVector>& heff, const CMatrix& w,
                            const Eigen::VectorXd& p, const Eigen::VectorXd& psi,
                            const Eigen::VectorXcd& zeta_norm, double noise_w, std::size_t n) {
  const auto en = static_cast<Eigen::Index>(n);
  const CVector wn = w.col(en);
  const double total = interference_plus_noise(heff, wn, p, n, noise_w) +
                       p[en] * std::norm(wn.dot(heff[n]));
  const double lin = 2.0 * std::sqrt((1.0 + psi[en]) * p[en]) *
                     std::real(std::conj(zeta_norm[en]) * wn.dot(heff[n]));
  return std::log2(1.0 + psi[en]) +
         (-psi[en] + lin - std::norm(zeta_norm[en]) * total) / kLn2;
}

std::optional<Eigen::VectorXd> min_qos_powers(const std::vector<CVector>& heff, const CMatrix& w,
                                              const SystemConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(heff.size());
  const double gmin = cfg.gamma_min_linear();
  if (gmin <= 0.0) return Eigen::VectorXd::Zero(n);
  const double noise_w = cfg.noise_power_w();

  Eigen::MatrixXd gain(n, n);
  Eigen::VectorXd wnorm2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const CVector wi = w.col(i);
    wnorm2[i] = wi.squaredNorm();
    for (Eigen::Index j = 0; j < n; ++j) {
      gain(i, j) = std::norm(wi.dot(heff[static_cast<std::size_t>(j)]));
    }
    if (gain(i, i) <= 0.0) return std::nullopt;  // no useful signal path
  }

  // Monotone fixed-point iteration from zero; converges to the minimal
  // feasible point when one exists, diverges otherwise.
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  const double blowup = 1e6 * cfg.p_max_w;
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXd next(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double interf = noise_w * wnorm2[i];
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) interf += p[j] * gain(i, j);
      }
      next[i] = gmin * interf / gain(i, i);
    }
    const double delta = (next - p).cwiseAbs().maxCoeff();
    p = next;
    if (p.maxCoeff() > blowup) return std::nullopt;
    if (delta <= 1e-16 * std::max(1e-12, p.maxCoeff())) break;
  }
  if ((p.array() > cfg.p_max_w * (1.0 + 1e-9)).any()) return std::nullopt;
  return p.cwiseMin(cfg.p_max_w);
}

namespace {

// Cyclic projection onto the box intersected with the QoS half-spaces.
Eigen::VectorXd project_feasible(Eigen::VectorXd p, const Eigen::MatrixXd& gain,
                                 const Eigen::VectorXd& wnorm2, double gmin, double noise_w,
                                 double p_max) {
  const Eigen::Index n = p.size();
  p = p.cwiseMax(0.0).cwiseMin(p_max);
  if (gmin <= 0.0) return p;
  for (int sweep = 0; sweep < 400; ++sweep) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // a^T p >= b with a_i = gain(i,i), a_j = -gmin*gain(i,j), b = gmin*noise*|w|^2
      double lhs = p[i] * gain(i, i);
      double a2 = gain(i, i) * gain(i, i);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        lhs -= gmin * gain(i, j) * p[j];
        a2 += gmin * gmin * gain(i, j) * gain(i, j);
      }
      const double b = gmin * noise_w * wnorm2[i];
      if (lhs < b) {
        const double shift = (b - lhs) / a2;
        p[i] += shift * gain(i, i);
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j != i) p[j] -= shift * gmin * gain(i, j);
        }
        worst = std::max(worst, b - lhs);
      }
    }
    p = p.cwiseMax(0.0).cwiseMin(p_max);
    if (worst <= 1e-18) break;
  }
  return p;
}

}  // namespace

Eigen::VectorXd solve_power(const std::vector<CVector>& heff, const CMatrix& w,
                            const FpState& fp, const Eigen::VectorXd& p_init,
                            const SystemConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(heff.size());
  const double noise_w = cfg.noise_power_w();
  const double gmin = cfg.gamma_min_linear();
  const double p_max = cfg.p_max_w;

  Eigen::MatrixXd gain(n, n);
  Eigen::VectorXd wnorm2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const CVector wi = w.col(i);
    wnorm2[i] = wi.squaredNorm();
    for (Eigen::Index j = 0; j < n; ++j) {
      gain(i, j) = std::norm(wi.dot(heff[static_cast<std::size_t>(j)]));
    }
  }

  if (gmin > 0.0) {
    const auto pmin = min_qos_powers(heff, w, cfg);
    if (!pmin) {
      // Name the user whose floor is hardest to reach at full power.
      Eigen::Index tightest = 0;
      double worst = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        double interf = noise_w * wnorm2[i];
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j != i) interf += p_max * gain(i, j);
        }
        const double margin = p_max * gain(i, i) / interf / gmin;
        if (margin < worst) {
          worst = margin;
          tightest = i;
        }
      }
      throw InfeasibleError("solve_power: QoS polytope empty; tightest SINR floor is user " +
                            std::to_string(tightest));
    }
  }

  // Scale-free objective weights; only users with positive weight take part
  // in the max-min objective.
  Eigen::VectorXd weights = fp.weights();
  std::vector<Eigen::Index> active;
  const double wmax = weights.maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights[i] > 1e-12 * wmax) active.push_back(i);
  }
  if (active.empty()) for (Eigen::Index i = 0; i < n; ++i) active.push_back(i);
  double wsum = 0.0;
  for (const auto i : active) wsum += weights[i];
  weights *= static_cast<double>(active.size()) / wsum;

  const auto value_of = [&](const Eigen::VectorXd& p, Eigen::Index i) {
    return weights[i] * quad_rate(heff, w, p, fp.psi, fp.zeta, noise_w,
                                  static_cast<std::size_t>(i));
  };
  const auto softmin = [&](const Eigen::VectorXd& p, double tau) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto i : active) m = std::min(m, value_of(p, i));
    double s = 0.0;
    for (const auto i : active) s += std::exp(-(value_of(p, i) - m) / tau);
    return m - tau * std::log(s);
  };
  const auto grad_softmin = [&](const Eigen::VectorXd& p, double tau) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto i : active) m = std::min(m, value_of(p, i));
    double s = 0.0;
    std::vector<double> lam(active.size());
    for (std::size_t a = 0; a < active.size(); ++a) {
      lam[a] = std::exp(-(value_of(p, active[a]) - m) / tau);
      s += lam[a];
    }
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (std::size_t a = 0; a < active.size(); ++a) {
      const Eigen::Index i = active[a];
      const double share = lam[a] / s;
      const CVector wi = w.col(i);
      const double own = std::sqrt(1.0 + fp.psi[i]) *
                         std::real(std::conj(fp.zeta[i]) * wi.dot(heff[static_cast<std::size_t>(i)]));
      g[i] += share * weights[i] * own / std::sqrt(std::max(p[i], 1e-18 * p_max));
      const double z2 = std::norm(fp.zeta[i]);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) g[j] -= share * weights[i] * z2 * gain(i, j);
      }
    }
    return g;
  };
  const auto project = [&](const Eigen::VectorXd& p) {
    return project_feasible(p, gain, wnorm2, gmin, noise_w, p_max);
  };

  Eigen::VectorXd p = project(p_init);
  const double scale = std::max(1.0, std::abs(softmin(p, 1.0)));
  for (const double tau_rel : {1e-2, 1e-3, 1e-4}) {
    const double tau = tau_rel * scale;
    double step = 0.25 * p_max;
    for (int it = 0; it < 400; ++it) {
      const Eigen::VectorXd g = grad_softmin(p, tau);
      const double gnorm = g.norm();
      if (gnorm <= 1e-16) break;
      const double base = softmin(p, tau);
      Eigen::VectorXd cand;
      bool accepted = false;
      double eta = step / gnorm;
      for (int bt = 0; bt < 40; ++bt) {
        cand = project(p + eta * g);
        if (softmin(cand, tau) >= base - 1e-18) {
          accepted = true;
          break;
        }
        eta *= 0.5;
      }
      if (!accepted) break;
      const double moved = (cand - p).norm();
      p = cand;
      step = std::min(0.25 * p_max, eta * gnorm * 1.5);
      if (moved <= 1e-9 * p_max) break;
    }
  }

  // Fixed-point residual of the projection map at the final temperature.
  const double tau = 1e-4 * scale;
  const double probe = 1e-6 * std::max(p_max, p.norm());
  for (int polish = 0; polish < 200; ++polish) {
    const Eigen::VectorXd g = grad_softmin(p, tau);
    const Eigen::VectorXd moved = project(p + probe * g / std::max(g.norm(), 1e-30));
    if ((moved - p).norm() <= 1e-6 * std::max(1.0, p.norm()) * probe / probe) break;
    const double before = softmin(p, tau);
    if (softmin(moved, tau) < before) break;
    p = moved;
  }
  return project(p);
}

void update_chi_gamma(FpState& fp, const Eigen::VectorXd& rates_spectral,
                      const Eigen::VectorXd& beta, const std::vector<UserTask>& tasks) {
  const Eigen::Index n = rates_spectral.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rates_spectral[i] <= 0.0) {
      throw std::invalid_argument("update_chi_gamma: zero rate");
    }
    const double theta = fp.theta_step;
    fp.chi[i] = (1.0 - theta) * fp.chi[i] + theta / rates_spectral[i];
    fp.gamma_aux[i] = (1.0 - theta) * fp.gamma_aux[i] +
                      theta * beta[i] * tasks[static_cast<std::size_t>(i)].s_bits /
                          rates_spectral[i];
  }
}

namespace {

struct Evaluation {
  Eigen::VectorXd sinr;
  Eigen::VectorXd rates_spectral;
  Eigen::VectorXd rates_bps;
  double min_rate_bps = 0.0;
  double proxy_s = 0.0;      // max over users of beta*S/R
  double surrogate = 0.0;    // min active weighted spectral rate
};

Evaluation evaluate(const std::vector<CVector>& heff, const CMatrix& w, const Eigen::VectorXd& p,
                    const Eigen::VectorXd& beta, const std::vector<UserTask>& tasks,
                    const Eigen::VectorXd& weights, const SystemConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(heff.size());
  Evaluation ev;
  ev.sinr.resize(n);
  ev.rates_spectral.resize(n);
  ev.rates_bps.resize(n);
  const double noise_w = cfg.noise_power_w();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto rp = sinr_for(heff, w, p, static_cast<std::size_t>(i), noise_w, cfg.bandwidth_hz);
    ev.sinr[i] = rp.sinr;
    ev.rates_spectral[i] = std::log2(1.0 + rp.sinr);
    ev.rates_bps[i] = rp.rate_bps;
  }
  ev.min_rate_bps = ev.rates_bps.minCoeff();
  ev.proxy_s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (beta[i] <= 0.0) continue;
    const double s = beta[i] * tasks[static_cast<std::size_t>(i)].s_bits;
    ev.proxy_s = std::max(ev.proxy_s, ev.rates_bps[i] > 0.0
                                          ? s / ev.rates_bps[i]
                                          : std::numeric_limits<double>::infinity());
  }
  const double wmax = weights.maxCoeff();
  ev.surrogate = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights[i] > 1e-12 * wmax) {
      ev.surrogate = std::min(ev.surrogate, weights[i] * ev.rates_spectral[i]);
    }
  }
  return ev;
}

}  // namespace

std::pair<CommAllocation, FpState> initial_comm_state(const ChannelSet& ch, IrsArch arch,
                                                      const Eigen::VectorXd& beta,
                                                      const std::vector<UserTask>& tasks,
                                                      const SystemConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(ch.n_users());
  const double noise_w = cfg.noise_power_w();

  CommAllocation alloc;
  alloc.phi = PhaseShift::identity(arch, cfg.n_elements, groups_for_arch(arch, cfg));
  alloc.p = Eigen::VectorXd::Constant(n, 0.5 * cfg.p_max_w);

  const auto heff0 = all_effective_channels(ch, assemble(alloc.phi));
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(n);
  alloc.w = mmse_beamformer(heff0, alloc.p, zeros, ones, noise_w);

  // Uniform power, nudged up until the SINR floors hold or the cap binds.
  const double gmin = cfg.gamma_min_linear();
  for (int tries = 0; tries < 32; ++tries) {
    Eigen::VectorXd psi = update_psi(heff0, alloc.w, alloc.p, noise_w);
    if (gmin <= 0.0 || psi.minCoeff() >= gmin || alloc.p.maxCoeff() >= cfg.p_max_w) break;
    alloc.p = (alloc.p * 1.25).cwiseMin(cfg.p_max_w);
  }
  alloc.w = mmse_beamformer(heff0, alloc.p, zeros, ones, noise_w);

  FpState fp;
  fp.psi = update_psi(heff0, alloc.w, alloc.p, noise_w);
  fp.zeta = update_zeta(heff0, alloc.w, alloc.p, fp.psi, noise_w);
  fp.chi.resize(n);
  fp.gamma_aux.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double rate = std::log2(1.0 + fp.psi[i]);
    fp.chi[i] = rate > 0.0 ? 1.0 / rate : 0.0;
    fp.gamma_aux[i] =
        rate > 0.0 ? beta[i] * tasks[static_cast<std::size_t>(i)].s_bits / rate : 0.0;
  }
  return {alloc, fp};
}

CommResult optimize(const ChannelSet& ch, const Eigen::VectorXd& beta,
                    const std::vector<UserTask>& tasks, CommAllocation comm0, FpState fp0,
                    const SystemConfig& cfg, const CommOptions& options) {
  const double noise_w = cfg.noise_power_w();

  CommResult res;
  res.alloc = std::move(comm0);
  FpState fp = std::move(fp0);

  auto heff = all_effective_channels(ch, assemble(res.alloc.phi));
  Evaluation best_ev =
      evaluate(heff, res.alloc.w, res.alloc.p, beta, tasks, fp.weights(), cfg);
  CommAllocation best_alloc = res.alloc;
  FpState best_fp = fp;
  double prev_surrogate = best_ev.surrogate;

  double xi_last = 0.0;
  double kappa_last = 0.0;
  std::size_t stall = 0;
  constexpr std::size_t kPatience = 5;

  for (std::size_t it = 0; it < cfg.i_max; ++it) {
    res.alloc.w = mmse_beamformer(heff, res.alloc.p, fp.psi, fp.zeta, noise_w);
    if (options.optimize_power) {
      res.alloc.p = solve_power(heff, res.alloc.w, fp, res.alloc.p, cfg);
    }
    if (options.optimize_phase_shift) {
      const PhaseObjective obj = build_phase_objective(ch, res.alloc.w, res.alloc.p, fp.psi,
                                                       fp.zeta, fp.weights(), noise_w);
      const PhaseOptResult pres = optimize_phase(obj, res.alloc.phi);
      res.alloc.phi = pres.phi;
      xi_last = pres.xi_norm_sq_last;
      kappa_last = pres.kappa_last;
      heff = all_effective_channels(ch, assemble(res.alloc.phi));
    }

    const Evaluation ev =
        evaluate(heff, res.alloc.w, res.alloc.p, beta, tasks, fp.weights(), cfg);

    // The loop keeps exploring from the current iterate while the answer it
    // reports is the incumbent best of the offload-latency proxy.
    if (ev.proxy_s < best_ev.proxy_s) {
      best_ev = ev;
      best_alloc = res.alloc;
      best_fp = fp;
      stall = 0;
    } else {
      ++stall;
    }

    CommTraceRecord rec;
    rec.iter = it;
    rec.min_rate_bps = best_ev.min_rate_bps;
    rec.max_offload_latency_s = best_ev.proxy_s;
    rec.surrogate = ev.surrogate;
    rec.xi_norm_sq = xi_last;
    rec.kappa = kappa_last;
    res.trace.push_back(rec);

    fp.psi = update_psi(heff, res.alloc.w, res.alloc.p, noise_w);
    fp.zeta = update_zeta(heff, res.alloc.w, res.alloc.p, fp.psi, noise_w);
    const bool rates_ok = ev.rates_spectral.minCoeff() > 0.0;
    if (rates_ok) update_chi_gamma(fp, ev.rates_spectral, beta, tasks);

    if (stall >= kPatience) break;
    if (std::abs(ev.surrogate - prev_surrogate) <
        cfg.epsilon * std::max(1.0, std::abs(ev.surrogate))) {
      break;
    }
    prev_surrogate = ev.surrogate;
  }

  res.alloc = best_alloc;
  res.fp = best_fp;
  res.rates_bps = best_ev.rates_bps;
  res.sinr = best_ev.sinr;
  return res;
}

}  // namespace comm
}  // namespace bdmec
