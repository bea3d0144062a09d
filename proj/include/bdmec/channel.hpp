#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "bdmec/config.hpp"
#include "bdmec/geometry.hpp"

namespace bdmec {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

// One realization of all wireless links.
//  h_direct[n] : UE n -> AP,      length M
//  g_irs_ap    : IRS -> AP,       M x K, rank one (array response product)
//  h_ue_irs[n] : UE n -> IRS,     length K
// The UAV-side links always keep the array-response structure; their LoS flag
// only switches the excess-loss term. The direct link swaps to an i.i.d.
// complex Gaussian draw when blocked.
struct ChannelSet {
  std::vector<CVector> h_direct;
  CMatrix g_irs_ap;
  std::vector<CVector> h_ue_irs;
  std::vector<std::uint8_t> los_direct;  // per UE
  std::vector<std::uint8_t> los_ue_irs;  // per UE
  std::uint8_t los_irs_ap = 1;

  std::size_t n_users() const { return h_direct.size(); }
  std::size_t n_antennas() const { return h_direct.empty() ? 0 : static_cast<std::size_t>(h_direct[0].size()); }
  std::size_t n_elements() const { return static_cast<std::size_t>(g_irs_ap.cols()); }
};

// SINR plus the spectral rate it implies.
struct RatePoint {
  double sinr = 0.0;      // linear
  double rate_bps = 0.0;  // B * log2(1 + sinr)
};

struct ScenarioGeometry {
  std::vector<Position> ue;
  Position ap;
  Position uav;  // IRS carrier; may also be a fixed structure
};

// Uniform linear array response for a given directional cosine; every entry
// has unit modulus.
CVector steering_from_cosine(double cosine, std::size_t n_elems, double spacing_ratio);

// Same, with the cosine taken from an explicit angle.
CVector steering_vector(double theta, std::size_t n_elems, double spacing_ratio);

// Log-distance path loss with LoS-dependent excess term, in dB.
// Throws std::invalid_argument for d below the 1 m reference distance.
double path_loss_db(double d, double alpha, bool los, const SystemConfig& cfg);

inline double path_loss_amplitude(double pl_db) { return std::pow(10.0, -pl_db / 20.0); }

// Synthesizes every link for the given geometry. Deterministic in the seed.
ChannelSet draw_channels(const SystemConfig& cfg, const ScenarioGeometry& geo, std::uint64_t seed);

// h_direct[n] + G * Phi * h_ue_irs[n]; Phi is any K x K matrix (a disabled
// IRS is the zero matrix).
CVector effective_channel(const ChannelSet& ch, const CMatrix& phi, std::size_t n);

// Uplink receive SINR of user n under beamformers w (one column per user)
// and transmit powers p, for the composite channels heff.
RatePoint sinr_for(const std::vector<CVector>& heff, const CMatrix& w,
                   const Eigen::VectorXd& p, std::size_t n, double noise_w,
                   double bandwidth_hz);

RatePoint sinr(const ChannelSet& ch, const CMatrix& phi, const CMatrix& w,
               const Eigen::VectorXd& p, std::size_t n, const SystemConfig& cfg);

std::vector<CVector> all_effective_channels(const ChannelSet& ch, const CMatrix& phi);

}  // namespace bdmec
