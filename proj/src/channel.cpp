#include "bdmec/channel.hpp"

#include <stdexcept>

#include "bdmec/rng.hpp"

namespace bdmec {

CVector steering_from_cosine(double cosine, std::size_t n_elems, double spacing_ratio) {
  if (n_elems < 1) throw std::invalid_argument("steering vector needs at least one element");
  CVector v(n_elems);
  const double phase_step = -2.0 * M_PI * spacing_ratio * cosine;
  for (std::size_t i = 0; i < n_elems; ++i) {
    v[static_cast<Eigen::Index>(i)] = std::polar(1.0, phase_step * static_cast<double>(i));
  }
  return v;
}

CVector steering_vector(double theta, std::size_t n_elems, double spacing_ratio) {
  return steering_from_cosine(std::cos(theta), n_elems, spacing_ratio);
}

double path_loss_db(double d, double alpha, bool los, const SystemConfig& cfg) {
  if (d < 1.0) throw std::invalid_argument("path_loss_db: inside reference distance (d < 1 m)");
  const double eta = los ? cfg.eta_los_db : cfg.eta_nlos_db;
  return cfg.pl0_db + 10.0 * alpha * std::log10(d) + eta;
}

namespace {
constexpr double kSpacingRatio = 0.5;  // half-wavelength element spacing
}

ChannelSet draw_channels(const SystemConfig& cfg, const ScenarioGeometry& geo, std::uint64_t seed) {
  const std::size_t n = cfg.n_users;
  const std::size_t m = cfg.n_antennas;
  const std::size_t k = cfg.n_elements;
  if (geo.ue.size() != n) throw std::invalid_argument("draw_channels: UE position count != n_users");

  Rng rng(seed);
  ChannelSet ch;
  ch.h_direct.resize(n);
  ch.h_ue_irs.resize(n);
  ch.los_direct.resize(n);
  ch.los_ue_irs.resize(n);

  // All Bernoulli draws first, in a fixed order, so the stream layout does
  // not depend on the outcomes.
  for (std::size_t i = 0; i < n; ++i) ch.los_direct[i] = rng.bernoulli(cfg.p_los_direct) ? 1 : 0;
  ch.los_irs_ap = rng.bernoulli(cfg.p_los_irs) ? 1 : 0;
  for (std::size_t i = 0; i < n; ++i) ch.los_ue_irs[i] = rng.bernoulli(cfg.p_los_irs) ? 1 : 0;

  // Direct UE -> AP links.
  for (std::size_t i = 0; i < n; ++i) {
    const double d = distance(geo.ue[i], geo.ap);
    const bool los = ch.los_direct[i] != 0;
    const double amp = path_loss_amplitude(path_loss_db(d, cfg.alpha_direct, los, cfg));
    if (los) {
      ch.h_direct[i] = amp * steering_from_cosine(directional_cosine(geo.ap, geo.ue[i]), m, kSpacingRatio);
    } else {
      CVector fading(m);
      for (std::size_t a = 0; a < m; ++a) fading[static_cast<Eigen::Index>(a)] = rng.complex_gaussian();
      ch.h_direct[i] = amp * fading;
    }
  }

  // IRS -> AP link: rank-one product of the two array responses.
  {
    const double d = distance(geo.uav, geo.ap);
    const double amp =
        path_loss_amplitude(path_loss_db(d, cfg.alpha_uav_ap, ch.los_irs_ap != 0, cfg));
    const CVector ap_side = steering_from_cosine(directional_cosine(geo.ap, geo.uav), m, kSpacingRatio);
    const CVector irs_side = steering_from_cosine(directional_cosine(geo.uav, geo.ap), k, kSpacingRatio);
    ch.g_irs_ap = amp * (ap_side * irs_side.adjoint());
  }

  // UE -> IRS links.
  for (std::size_t i = 0; i < n; ++i) {
    const double d = distance(geo.ue[i], geo.uav);
    const double amp =
        path_loss_amplitude(path_loss_db(d, cfg.alpha_ue_uav, ch.los_ue_irs[i] != 0, cfg));
    ch.h_ue_irs[i] = amp * steering_from_cosine(directional_cosine(geo.uav, geo.ue[i]), k, kSpacingRatio);
  }
  return ch;
}

CVector effective_channel(const ChannelSet& ch, const CMatrix& phi, std::size_t n) {
  if (n >= ch.n_users()) throw std::invalid_argument("effective_channel: user index out of range");
  if (phi.rows() != ch.g_irs_ap.cols() || phi.cols() != ch.h_ue_irs[n].size()) {
    throw std::invalid_argument("effective_channel: reflection matrix dimension mismatch");
  }
  return ch.h_direct[n] + ch.g_irs_ap * (phi * ch.h_ue_irs[n]);
}

std::vector<CVector> all_effective_channels(const ChannelSet& ch, const CMatrix& phi) {
  std::vector<CVector> h(ch.n_users());
  for (std::size_t i = 0; i < ch.n_users(); ++i) h[i] = effective_channel(ch, phi, i);
  return h;
}

RatePoint sinr_for(const std::vector<CVector>& heff, const CMatrix& w,
                   const Eigen::VectorXd& p, std::size_t n, double noise_w,
                   double bandwidth_hz) {
  const std::size_t users = heff.size();
  if (n >= users) throw std::invalid_argument("sinr: user index out of range");
  const CVector wn = w.col(static_cast<Eigen::Index>(n));
  const double wnorm2 = wn.squaredNorm();
  if (wnorm2 == 0.0) throw std::invalid_argument("sinr: all-zero beamformer");

  const double signal = p[static_cast<Eigen::Index>(n)] * std::norm(wn.dot(heff[n]));
  double interference = 0.0;
  for (std::size_t j = 0; j < users; ++j) {
    if (j == n) continue;
    interference += p[static_cast<Eigen::Index>(j)] * std::norm(wn.dot(heff[j]));
  }
  RatePoint rp;
  rp.sinr = signal / (interference + noise_w * wnorm2);
  rp.rate_bps = bandwidth_hz * std::log2(1.0 + rp.sinr);
  return rp;
}

RatePoint sinr(const ChannelSet& ch, const CMatrix& phi, const CMatrix& w,
               const Eigen::VectorXd& p, std::size_t n, const SystemConfig& cfg) {
  return sinr_for(all_effective_channels(ch, phi), w, p, n, cfg.noise_power_w(),
                  cfg.bandwidth_hz);
}

}  // namespace bdmec
