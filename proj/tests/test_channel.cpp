#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "bdmec/channel.hpp"
#include "bdmec/comm.hpp"
#include "bdmec/replay.hpp"
#include "bdmec/rng.hpp"

using namespace bdmec;

namespace {

SystemConfig small_cfg(std::size_t n, std::size_t m, std::size_t k) {
  SystemConfig cfg;
  cfg.n_users = n;
  cfg.n_antennas = m;
  cfg.n_elements = k;
  cfg.n_groups = 1;
  return cfg;
}

ScenarioGeometry simple_geo(const SystemConfig& cfg, double area = 100.0) {
  ScenarioGeometry geo;
  Rng rng(99);
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    geo.ue.push_back(Position{rng.uniform(0.0, area), rng.uniform(0.0, area), 0.0});
  }
  geo.ap = Position{area / 2, 0.0, 0.0};
  geo.uav = Position{area / 2, area / 2, 60.0};
  return geo;
}

}  // namespace

TEST_CASE("steering vector basics") {
  CHECK(steering_vector(1.234, 1, 0.5).size() == 1);
  CHECK(steering_vector(0.7, 1, 0.5)[0] == Complex{1.0, 0.0});

  // Broadside: zero directional cosine.
  const CVector broadside = steering_from_cosine(0.0, 4, 0.5);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(broadside[i] == Complex{1.0, 0.0});

  // End-fire at half-wavelength spacing alternates sign.
  const CVector endfire = steering_from_cosine(1.0, 2, 0.5);
  CHECK(endfire[0].real() == doctest::Approx(1.0));
  CHECK(endfire[1].real() == doctest::Approx(-1.0));
  CHECK(std::abs(endfire[1].imag()) < 1e-12);
}

TEST_CASE("steering entries have unit modulus") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const CVector v = steering_vector(rng.uniform(0.0, 2 * M_PI), 16, rng.uniform(0.1, 1.0));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      CHECK(std::abs(std::abs(v[i]) - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("path loss formula") {
  SystemConfig cfg;
  cfg.pl0_db = 31.5;
  cfg.eta_los_db = 1.0;
  cfg.eta_nlos_db = 20.0;
  CHECK(path_loss_db(1.0, 2.0, true, cfg) == doctest::Approx(32.5));
  CHECK(path_loss_db(1.0, 2.0, false, cfg) == doctest::Approx(51.5));
  CHECK(path_loss_db(100.0, 2.0, true, cfg) == doctest::Approx(72.5));
  CHECK_THROWS_AS(path_loss_db(0.5, 2.0, true, cfg), std::invalid_argument);
}

TEST_CASE("channel draws are deterministic in the seed") {
  const SystemConfig cfg = small_cfg(3, 4, 8);
  const ScenarioGeometry geo = simple_geo(cfg);
  const ChannelSet a = draw_channels(cfg, geo, 42);
  const ChannelSet b = draw_channels(cfg, geo, 42);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.h_direct[i] == b.h_direct[i]);
    CHECK(a.h_ue_irs[i] == b.h_ue_irs[i]);
    CHECK(a.los_direct[i] == b.los_direct[i]);
  }
  CHECK(a.g_irs_ap == b.g_irs_ap);

  const ChannelSet c = draw_channels(cfg, geo, 43);
  bool any_different = false;
  for (std::size_t i = 0; i < 3; ++i) any_different |= a.h_direct[i] != c.h_direct[i];
  CHECK(any_different);
}

TEST_CASE("zero line-of-sight probability forces fading on every direct link") {
  SystemConfig cfg = small_cfg(6, 4, 4);
  cfg.p_los_direct = 0.0;
  const ChannelSet ch = draw_channels(cfg, simple_geo(cfg), 5);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(ch.los_direct[i] == 0);
    CHECK(ch.h_direct[i].norm() > 0.0);
  }
}

TEST_CASE("all line-of-sight unit-distance link has the reference amplitude") {
  SystemConfig cfg = small_cfg(1, 1, 1);
  cfg.p_los_direct = 1.0;
  cfg.p_los_irs = 1.0;
  cfg.eta_los_db = 1.0;
  ScenarioGeometry geo;
  geo.ue = {Position{0.0, 0.0, 0.0}};
  geo.ap = Position{1.0, 0.0, 0.0};
  geo.uav = Position{0.5, 0.0, std::sqrt(4.0 - 0.25)};  // 2 m from both ends
  const ChannelSet ch = draw_channels(cfg, geo, 1);
  // 31.5 dB reference loss + 1 dB excess, as amplitude.
  const double expected = std::pow(10.0, -32.5 / 20.0);
  CHECK(std::abs(ch.h_direct[0][0]) == doctest::Approx(expected).epsilon(1e-12));
  const double expected_irs =
      std::pow(10.0, -(31.5 + 10.0 * cfg.alpha_ue_uav * std::log10(2.0) + 1.0) / 20.0);
  CHECK(std::abs(ch.h_ue_irs[0][0]) == doctest::Approx(expected_irs).epsilon(1e-12));
}

TEST_CASE("rank-one reflected link") {
  const SystemConfig cfg = small_cfg(2, 4, 8);
  const ChannelSet ch = draw_channels(cfg, simple_geo(cfg), 10);
  const Eigen::JacobiSVD<CMatrix> svd(ch.g_irs_ap);
  CHECK(svd.singularValues()[0] > 0.0);
  for (Eigen::Index i = 1; i < svd.singularValues().size(); ++i) {
    CHECK(svd.singularValues()[i] <= 1e-12 * svd.singularValues()[0]);
  }
}

TEST_CASE("effective channel composition") {
  const SystemConfig cfg = small_cfg(2, 3, 4);
  const ChannelSet ch = draw_channels(cfg, simple_geo(cfg), 77);

  // Disabled reflection leaves the direct link.
  const CMatrix zero = CMatrix::Zero(4, 4);
  CHECK((effective_channel(ch, zero, 0) - ch.h_direct[0]).norm() == 0.0);

  // Zero direct link leaves the reflected product.
  ChannelSet blocked = ch;
  blocked.h_direct[1].setZero();
  const CMatrix eye = CMatrix::Identity(4, 4);
  const CVector via_irs = effective_channel(blocked, eye, 1);
  CHECK((via_irs - ch.g_irs_ap * ch.h_ue_irs[1]).norm() <= 1e-15 * via_irs.norm());

  CHECK_THROWS_AS(effective_channel(ch, CMatrix::Identity(3, 3), 0), std::invalid_argument);
}

TEST_CASE("scalar reflected path can cancel the direct path") {
  ChannelSet ch;
  ch.h_direct = {CVector::Ones(1)};
  ch.g_irs_ap = CMatrix::Ones(1, 1);
  ch.h_ue_irs = {CVector::Ones(1)};
  ch.los_direct = {1};
  ch.los_ue_irs = {1};
  CMatrix phi(1, 1);
  phi(0, 0) = std::polar(1.0, M_PI);
  CHECK(std::abs(effective_channel(ch, phi, 0)[0]) <= 1e-15);
}

TEST_CASE("effective channel is affine in the reflection matrix") {
  const SystemConfig cfg = small_cfg(2, 3, 4);
  const ChannelSet ch = draw_channels(cfg, simple_geo(cfg), 8);
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    CMatrix a(4, 4), b(4, 4);
    for (Eigen::Index r = 0; r < 4; ++r) {
      for (Eigen::Index c = 0; c < 4; ++c) {
        a(r, c) = rng.complex_gaussian();
        b(r, c) = rng.complex_gaussian();
      }
    }
    const CVector lhs = effective_channel(ch, a + b, 0);
    const CVector rhs = effective_channel(ch, a, 0) + effective_channel(ch, b, 0) - ch.h_direct[0];
    CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
  }
}

TEST_CASE("sinr basics") {
  // Single user, unit everything: SINR 1, spectral rate B.
  std::vector<CVector> h = {CVector::Ones(1)};
  CMatrix w = CMatrix::Ones(1, 1);
  Eigen::VectorXd p = Eigen::VectorXd::Ones(1);
  const RatePoint rp = sinr_for(h, w, p, 0, 1.0, 1.0);
  CHECK(rp.sinr == doctest::Approx(1.0));
  CHECK(rp.rate_bps == doctest::Approx(1.0));

  p[0] = 0.0;
  const RatePoint zero = sinr_for(h, w, p, 0, 1.0, 1.0);
  CHECK(zero.sinr == 0.0);
  CHECK(zero.rate_bps == 0.0);

  CMatrix wz = CMatrix::Zero(1, 1);
  CHECK_THROWS_AS(sinr_for(h, wz, Eigen::VectorXd::Ones(1), 0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("orthogonal users with matched beamformers see no interference") {
  std::vector<CVector> h(2, CVector::Zero(2));
  h[0][0] = 2.0;
  h[1][1] = 3.0;
  CMatrix w = CMatrix::Zero(2, 2);
  w(0, 0) = 1.0;
  w(1, 1) = 1.0;
  Eigen::VectorXd p(2);
  p << 0.5, 0.25;
  const double noise = 0.1;
  const RatePoint r0 = sinr_for(h, w, p, 0, noise, 1.0);
  const RatePoint r1 = sinr_for(h, w, p, 1, noise, 1.0);
  CHECK(r0.sinr == doctest::Approx(0.5 * 4.0 / noise));
  CHECK(r1.sinr == doctest::Approx(0.25 * 9.0 / noise));
}

TEST_CASE("sinr is invariant to a joint power and noise rescale") {
  const SystemConfig cfg = small_cfg(3, 4, 4);
  const ChannelSet ch = draw_channels(cfg, simple_geo(cfg), 13);
  const auto heff = all_effective_channels(ch, CMatrix::Identity(4, 4));
  Rng rng(5);
  CMatrix w(4, 3);
  for (Eigen::Index r = 0; r < 4; ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) w(r, c) = rng.complex_gaussian();
  }
  Eigen::VectorXd p(3);
  p << 0.1, 0.2, 0.05;
  for (const double c : {3.0, 1e4, 1e-3}) {
    for (std::size_t n = 0; n < 3; ++n) {
      const double base = sinr_for(heff, w, p, n, 1e-10, 1.0).sinr;
      const double scaled = sinr_for(heff, w, c * p, n, c * 1e-10, 1.0).sinr;
      CHECK(scaled == doctest::Approx(base).epsilon(1e-10));
    }
  }
}

TEST_CASE("mmse beamformer dominates random beamformers") {
  const SystemConfig cfg = small_cfg(3, 4, 4);
  const ChannelSet ch = draw_channels(cfg, simple_geo(cfg), 31);
  const auto heff = all_effective_channels(ch, CMatrix::Identity(4, 4));
  Eigen::VectorXd p = Eigen::VectorXd::Constant(3, 0.1);
  const double noise = cfg.noise_power_w();
  const Eigen::VectorXd psi = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXcd zeta = Eigen::VectorXcd::Ones(3);
  const CMatrix w_opt = comm::mmse_beamformer(heff, p, psi, zeta, noise);

  Rng rng(17);
  for (std::size_t n = 0; n < 3; ++n) {
    const double best = sinr_for(heff, w_opt, p, n, noise, 1.0).sinr;
    for (int t = 0; t < 100; ++t) {
      CMatrix w = w_opt;
      CVector rand_w(4);
      for (Eigen::Index i = 0; i < 4; ++i) rand_w[i] = rng.complex_gaussian();
      w.col(static_cast<Eigen::Index>(n)) = rand_w / rand_w.norm();
      CHECK(sinr_for(heff, w, p, n, noise, 1.0).sinr <= best * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("replay file round-trips the realization exactly") {
  const SystemConfig cfg = small_cfg(3, 4, 8);
  ReplayRecord rec;
  rec.channels = draw_channels(cfg, simple_geo(cfg), 23);
  rec.has_phase = true;
  rec.phase = PhaseShift::identity(IrsArch::GroupConnected, 8, 2);
  rec.phase.blocks[1] *= std::polar(1.0, 0.7);

  std::stringstream ss;
  write_replay(ss, rec);
  const ReplayRecord back = read_replay(ss);

  CHECK(back.channels.n_users() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.channels.h_direct[i] == rec.channels.h_direct[i]);
    CHECK(back.channels.h_ue_irs[i] == rec.channels.h_ue_irs[i]);
    CHECK(back.channels.los_direct[i] == rec.channels.los_direct[i]);
    CHECK(back.channels.los_ue_irs[i] == rec.channels.los_ue_irs[i]);
  }
  CHECK(back.channels.g_irs_ap == rec.channels.g_irs_ap);
  CHECK(back.channels.los_irs_ap == rec.channels.los_irs_ap);
  REQUIRE(back.has_phase);
  CHECK(back.phase.arch == IrsArch::GroupConnected);
  REQUIRE(back.phase.n_groups() == 2);
  CHECK(back.phase.blocks[0] == rec.phase.blocks[0]);
  CHECK(back.phase.blocks[1] == rec.phase.blocks[1]);
}
