#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bdmec/comm.hpp"
#include "bdmec/errors.hpp"
#include "bdmec/phase_opt.hpp"
#include "bdmec/rng.hpp"

using namespace bdmec;

namespace {

std::vector<CVector> random_channels(Rng& rng, std::size_t n, std::size_t m, double scale = 1.0) {
  std::vector<CVector> h(n);
  for (auto& v : h) {
    v = CVector(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      v[static_cast<Eigen::Index>(i)] = scale * rng.complex_gaussian();
    }
  }
  return h;
}

CMatrix unit_columns(Rng& rng, std::size_t m, std::size_t n) {
  CMatrix w(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c) {
    CVector v(static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < m; ++r) v[static_cast<Eigen::Index>(r)] = rng.complex_gaussian();
    w.col(static_cast<Eigen::Index>(c)) = v / v.norm();
  }
  return w;
}

}  // namespace

TEST_CASE("psi matches the current SINR") {
  Rng rng(1);
  const auto h = random_channels(rng, 2, 3);
  const CMatrix w = unit_columns(rng, 3, 2);
  Eigen::VectorXd p(2);
  p << 0.3, 0.7;
  const double noise = 0.2;
  const Eigen::VectorXd psi = comm::update_psi(h, w, p, noise);
  for (std::size_t n = 0; n < 2; ++n) {
    CHECK(psi[static_cast<Eigen::Index>(n)] ==
          doctest::Approx(sinr_for(h, w, p, n, noise, 1.0).sinr).epsilon(1e-12));
  }
  CHECK(comm::update_psi(h, w, Eigen::VectorXd::Zero(2), noise).norm() == 0.0);
}

TEST_CASE("zeta scalar case") {
  std::vector<CVector> h = {CVector::Ones(1)};
  CMatrix w = CMatrix::Ones(1, 1);
  Eigen::VectorXd p = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd psi = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXcd zeta = comm::update_zeta(h, w, p, psi, 1.0);
  CHECK(zeta[0].real() == doctest::Approx(std::sqrt(2.0)));
  CHECK(zeta[0].imag() == doctest::Approx(0.0));

  const Eigen::VectorXcd zero = comm::update_zeta(h, w, Eigen::VectorXd::Zero(1), psi, 1.0);
  CHECK(std::abs(zero[0]) == 0.0);
}

TEST_CASE("quadratic transform reproduces the ratio form at the optimal multiplier") {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + (t % 3);
    const std::size_t m = 4;
    const auto h = random_channels(rng, n, m);
    const CMatrix w = unit_columns(rng, m, n);
    Eigen::VectorXd p(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) p[static_cast<Eigen::Index>(i)] = rng.uniform(0.01, 1.0);
    const double noise = rng.uniform(0.05, 1.0);
    const Eigen::VectorXd psi = comm::update_psi(h, w, p, noise);
    const Eigen::VectorXcd zeta = comm::update_zeta(h, w, p, psi, noise);
    for (std::size_t i = 0; i < n; ++i) {
      const double quad = comm::quad_rate(h, w, p, psi, zeta, noise, i);
      const double dual = comm::dual_rate(h, w, p, psi, noise, i);
      CHECK(quad == doctest::Approx(dual).epsilon(1e-9));
      // The returned multiplier maximizes the quadratic form.
      Eigen::VectorXcd bumped = zeta;
      bumped[static_cast<Eigen::Index>(i)] *= 1.0 + 1e-3;
      CHECK(comm::quad_rate(h, w, p, psi, bumped, noise, i) <= quad + 1e-12);
    }
  }
}

TEST_CASE("normalized dual transform recovers the spectral rate at the SINR point") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + (t % 3);
    const std::size_t m = 4;
    const auto h = random_channels(rng, n, m);
    const CMatrix w = unit_columns(rng, m, n);
    Eigen::VectorXd p(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) p[static_cast<Eigen::Index>(i)] = rng.uniform(0.01, 1.0);
    const double noise = rng.uniform(0.05, 1.0);
    const Eigen::VectorXd psi = comm::update_psi(h, w, p, noise);
    const Eigen::VectorXcd zeta = comm::update_zeta(h, w, p, psi, noise);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ei = static_cast<Eigen::Index>(i);
      // The printed multiplier relates to the normalized-transform optimum
      // by a 1/(1+psi) factor.
      Eigen::VectorXcd znorm = zeta;
      znorm[ei] = zeta[ei] / (1.0 + psi[ei]);
      const double value = comm::quad_rate_normalized(h, w, p, psi, znorm, noise, i);
      const double direct = std::log2(1.0 + sinr_for(h, w, p, i, noise, 1.0).sinr);
      CHECK(value == doctest::Approx(direct).epsilon(1e-9));
    }
  }
}

TEST_CASE("mmse beamformer special cases") {
  Rng rng(4);
  // Single user: matched filter.
  {
    const auto h = random_channels(rng, 1, 4);
    Eigen::VectorXd p = Eigen::VectorXd::Ones(1);
    const CMatrix w = comm::mmse_beamformer(h, p, Eigen::VectorXd::Zero(1),
                                            Eigen::VectorXcd::Ones(1), 0.3);
    const CVector matched = h[0] / h[0].norm();
    CHECK(std::abs(std::abs(w.col(0).dot(matched)) - 1.0) <= 1e-10);
  }
  // Orthogonal channels: the interference inverse keeps the matched direction.
  {
    std::vector<CVector> h(2, CVector::Zero(4));
    h[0][0] = 1.5;
    h[1][2] = 2.0;
    Eigen::VectorXd p = Eigen::VectorXd::Ones(2);
    const CMatrix w = comm::mmse_beamformer(h, p, Eigen::VectorXd::Zero(2),
                                            Eigen::VectorXcd::Ones(2), 0.1);
    CHECK(std::abs(w.col(0)[0]) == doctest::Approx(1.0));
    CHECK(std::abs(w.col(1)[2]) == doctest::Approx(1.0));
  }
  // Zero power falls back to the first canonical basis vector.
  {
    const auto h = random_channels(rng, 1, 3);
    const CMatrix w = comm::mmse_beamformer(h, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1),
                                            Eigen::VectorXcd::Zero(1), 0.3);
    CHECK(w(0, 0) == Complex{1.0, 0.0});
    CHECK(w.col(0).norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("mmse beamformer is a per-user SINR stationary point") {
  Rng rng(5);
  const std::size_t n = 2, m = 4;
  const auto h = random_channels(rng, n, m);
  Eigen::VectorXd p(2);
  p << 0.4, 0.9;
  const double noise = 0.2;
  const Eigen::VectorXd psi = comm::update_psi(h, unit_columns(rng, m, n), p, noise);
  const CMatrix w = comm::mmse_beamformer(h, p, psi, Eigen::VectorXcd::Ones(2), noise);
  for (std::size_t u = 0; u < n; ++u) {
    const double base = sinr_for(h, w, p, u, noise, 1.0).sinr;
    for (int t = 0; t < 50; ++t) {
      CMatrix wp = w;
      CVector dir(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) dir[static_cast<Eigen::Index>(i)] = rng.complex_gaussian();
      CVector v = w.col(static_cast<Eigen::Index>(u)) + 1e-4 * dir / dir.norm();
      wp.col(static_cast<Eigen::Index>(u)) = v / v.norm();
      CHECK(sinr_for(h, wp, p, u, noise, 1.0).sinr <= base + 1e-7 * (1.0 + base));
    }
  }
}

TEST_CASE("minimal QoS powers solve the floor system") {
  SystemConfig cfg;
  cfg.n_users = 3;
  cfg.gamma_min_db = 0.0;
  cfg.p_max_w = 0.5;
  // Strong, orthogonal channels make the floors easy.
  std::vector<CVector> h(3, CVector::Zero(4));
  h[0][0] = 1e-5;
  h[1][1] = 1e-5;
  h[2][2] = 1e-5;
  const CMatrix w = comm::mmse_beamformer(h, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(3),
                                          Eigen::VectorXcd::Ones(3), cfg.noise_power_w());
  const auto pmin = comm::min_qos_powers(h, w, cfg);
  REQUIRE(pmin.has_value());
  for (std::size_t u = 0; u < 3; ++u) {
    const double g = sinr_for(h, w, *pmin, u, cfg.noise_power_w(), 1.0).sinr;
    CHECK(g >= cfg.gamma_min_linear() * (1.0 - 1e-6));
  }
  // An impossible floor is reported as empty.
  SystemConfig strict = cfg;
  strict.gamma_min_db = 90.0;
  CHECK_FALSE(comm::min_qos_powers(h, w, strict).has_value());
}

TEST_CASE("power solver: interference-free user saturates the cap") {
  SystemConfig cfg;
  cfg.n_users = 1;
  cfg.gamma_min_db = -300.0;  // effectively no floor
  std::vector<CVector> h = {CVector::Ones(2) * 1e-6};
  const CMatrix w = comm::mmse_beamformer(h, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1),
                                          Eigen::VectorXcd::Ones(1), cfg.noise_power_w());
  FpState fp;
  const Eigen::VectorXd pc = Eigen::VectorXd::Constant(1, cfg.p_max_w);
  fp.psi = comm::update_psi(h, w, pc, cfg.noise_power_w());
  fp.zeta = comm::update_zeta(h, w, pc, fp.psi, cfg.noise_power_w());
  fp.chi = Eigen::VectorXd::Ones(1);
  fp.gamma_aux = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd p = comm::solve_power(h, w, fp, Eigen::VectorXd::Constant(1, 0.01), cfg);
  CHECK(p[0] == doctest::Approx(cfg.p_max_w).epsilon(1e-6));
}

TEST_CASE("symmetric users get symmetric powers") {
  SystemConfig cfg;
  cfg.n_users = 2;
  cfg.gamma_min_db = -10.0;
  std::vector<CVector> h(2, CVector::Zero(2));
  h[0][0] = 1e-6;
  h[0][1] = 2e-7;
  h[1][0] = 2e-7;
  h[1][1] = 1e-6;
  const CMatrix w = comm::mmse_beamformer(h, Eigen::VectorXd::Constant(2, 0.05),
                                          Eigen::VectorXd::Zero(2), Eigen::VectorXcd::Ones(2),
                                          cfg.noise_power_w());
  FpState fp;
  const Eigen::VectorXd p0 = Eigen::VectorXd::Constant(2, 0.05);
  fp.psi = comm::update_psi(h, w, p0, cfg.noise_power_w());
  fp.zeta = comm::update_zeta(h, w, p0, fp.psi, cfg.noise_power_w());
  fp.chi = Eigen::VectorXd::Ones(2);
  fp.gamma_aux = Eigen::VectorXd::Ones(2);
  const Eigen::VectorXd p = comm::solve_power(h, w, fp, p0, cfg);
  CHECK(p[0] == doctest::Approx(p[1]).epsilon(1e-6));
}

TEST_CASE("power solver matches a dense grid on random pairs") {
  Rng rng(7);
  SystemConfig cfg;
  cfg.n_users = 2;
  cfg.gamma_min_db = -10.0;
  const double noise = cfg.noise_power_w();
  for (int t = 0; t < 20; ++t) {
    const auto h = random_channels(rng, 2, 3, 1e-6);
    const CMatrix w = comm::mmse_beamformer(h, Eigen::VectorXd::Constant(2, cfg.p_max_w),
                                            Eigen::VectorXd::Zero(2), Eigen::VectorXcd::Ones(2),
                                            noise);
    FpState fp;
    const Eigen::VectorXd p0 = Eigen::VectorXd::Constant(2, 0.5 * cfg.p_max_w);
    fp.psi = comm::update_psi(h, w, p0, noise);
    fp.zeta = comm::update_zeta(h, w, p0, fp.psi, noise);
    fp.chi = Eigen::VectorXd::Constant(2, rng.uniform(0.5, 2.0));
    fp.gamma_aux = Eigen::VectorXd::Constant(2, rng.uniform(0.5, 2.0));

    const Eigen::VectorXd got = comm::solve_power(h, w, fp, p0, cfg);
    const Eigen::VectorXd weights = fp.weights();
    const auto objective = [&](const Eigen::VectorXd& p) {
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t u = 0; u < 2; ++u) {
        worst = std::min(worst, weights[static_cast<Eigen::Index>(u)] *
                                    comm::quad_rate(h, w, p, fp.psi, fp.zeta, noise, u));
      }
      return worst;
    };

    double best = -std::numeric_limits<double>::infinity();
    const int steps = 200;
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; j <= steps; ++j) {
        Eigen::VectorXd p(2);
        p << cfg.p_max_w * i / steps, cfg.p_max_w * j / steps;
        bool qos = true;
        for (std::size_t u = 0; u < 2 && qos; ++u) {
          qos = sinr_for(h, w, p, u, noise, 1.0).sinr >= cfg.gamma_min_linear() - 1e-12;
        }
        if (qos) best = std::max(best, objective(p));
      }
    }
    CHECK(objective(got) >= best - 1e-3 * (std::abs(best) + 1e-12));
  }
}

TEST_CASE("empty QoS polytope raises a named error") {
  SystemConfig cfg;
  cfg.n_users = 2;
  cfg.gamma_min_db = 60.0;
  // Identical channels: both floors cannot hold at once at this level.
  std::vector<CVector> h(2, CVector::Ones(2) * 1e-6);
  const CMatrix w = comm::mmse_beamformer(h, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(2),
                                          Eigen::VectorXcd::Ones(2), cfg.noise_power_w());
  FpState fp;
  fp.psi = Eigen::VectorXd::Zero(2);
  fp.zeta = Eigen::VectorXcd::Ones(2);
  fp.chi = Eigen::VectorXd::Ones(2);
  fp.gamma_aux = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_WITH_AS(comm::solve_power(h, w, fp, Eigen::VectorXd::Constant(2, 0.05), cfg),
                       doctest::Contains("tightest"), InfeasibleError);
}

TEST_CASE("damped auxiliary update") {
  const std::vector<UserTask> tasks = {UserTask::make(4.0, 1.0)};
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd rate = Eigen::VectorXd::Constant(1, 2.0);

  FpState fp;
  fp.chi = Eigen::VectorXd::Zero(1);
  fp.gamma_aux = Eigen::VectorXd::Zero(1);
  fp.psi = Eigen::VectorXd::Zero(1);
  fp.zeta = Eigen::VectorXcd::Zero(1);

  fp.theta_step = 0.5;
  comm::update_chi_gamma(fp, rate, beta, tasks);
  CHECK(fp.chi[0] == doctest::Approx(0.25));
  CHECK(fp.gamma_aux[0] == doctest::Approx(1.0));

  // Full step jumps to the fixed point; zero step freezes the state.
  fp.chi[0] = 3.0;
  fp.gamma_aux[0] = 3.0;
  fp.theta_step = 1.0;
  comm::update_chi_gamma(fp, rate, beta, tasks);
  CHECK(fp.chi[0] == doctest::Approx(0.5));
  CHECK(fp.gamma_aux[0] == doctest::Approx(2.0));
  CHECK(fp.chi[0] * rate[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fp.gamma_aux[0] * rate[0] == doctest::Approx(beta[0] * tasks[0].s_bits).epsilon(1e-9));

  fp.theta_step = 0.0;
  comm::update_chi_gamma(fp, rate, beta, tasks);
  CHECK(fp.chi[0] == doctest::Approx(0.5));

  CHECK_THROWS_AS(comm::update_chi_gamma(fp, Eigen::VectorXd::Zero(1), beta, tasks),
                  std::invalid_argument);
}

namespace {

SystemConfig comm_cfg(std::size_t n, std::size_t m, std::size_t k) {
  SystemConfig cfg;
  cfg.n_users = n;
  cfg.n_antennas = m;
  cfg.n_elements = k;
  cfg.n_groups = (k % 2 == 0) ? 2 : 1;
  cfg.gamma_min_db = -10.0;
  return cfg;
}

ChannelSet draw_for(const SystemConfig& cfg, std::uint64_t seed) {
  ScenarioGeometry geo;
  Rng rng(seed * 13 + 5);
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    geo.ue.push_back(Position{rng.uniform(0.0, 150.0), rng.uniform(0.0, 150.0), 0.0});
  }
  geo.ap = Position{75.0, 0.0, 0.0};
  geo.uav = Position{75.0, 75.0, 60.0};
  return draw_channels(cfg, geo, seed);
}

std::vector<UserTask> tasks_for(std::size_t n, std::uint64_t seed) {
  Rng rng(seed * 7 + 3);
  std::vector<UserTask> tasks;
  for (std::size_t i = 0; i < n; ++i) {
    tasks.push_back(UserTask::make(rng.uniform(100e3, 200e3), rng.uniform(500.0, 2000.0)));
  }
  return tasks;
}

}  // namespace

TEST_CASE("communication loop keeps the offload proxy non-increasing") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SystemConfig cfg = comm_cfg(3, 4, 4);
    const ChannelSet ch = draw_for(cfg, seed);
    const auto tasks = tasks_for(3, seed);
    const Eigen::VectorXd beta = Eigen::VectorXd::Constant(3, 0.5);
    auto [c0, fp0] = comm::initial_comm_state(ch, IrsArch::GroupConnected, beta, tasks, cfg);
    const auto res = comm::optimize(ch, beta, tasks, c0, fp0, cfg);
    REQUIRE(!res.trace.empty());
    CHECK(res.trace.size() <= cfg.i_max);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < res.trace.size(); ++i) {
      CHECK(res.trace[i].max_offload_latency_s <= best + 1e-6 * std::max(1.0, best));
      best = std::min(best, res.trace[i].max_offload_latency_s);
    }
    // Unit-norm beamformers and QoS floors hold at the returned point.
    for (Eigen::Index c = 0; c < res.alloc.w.cols(); ++c) {
      CHECK(std::abs(res.alloc.w.col(c).norm() - 1.0) <= 1e-9);
    }
    CHECK(res.sinr.minCoeff() >= cfg.gamma_min_linear() - 1e-9);
    CHECK(res.alloc.phi.unitarity_defect() <= 1e-8);
  }
}

TEST_CASE("communication loop is deterministic") {
  const SystemConfig cfg = comm_cfg(2, 4, 4);
  const ChannelSet ch = draw_for(cfg, 3);
  const auto tasks = tasks_for(2, 3);
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(2, 0.4);
  auto [c0, fp0] = comm::initial_comm_state(ch, IrsArch::GroupConnected, beta, tasks, cfg);
  const auto a = comm::optimize(ch, beta, tasks, c0, fp0, cfg);
  const auto b = comm::optimize(ch, beta, tasks, c0, fp0, cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].min_rate_bps == b.trace[i].min_rate_bps);
    CHECK(a.trace[i].max_offload_latency_s == b.trace[i].max_offload_latency_s);
  }
  CHECK(a.rates_bps == b.rates_bps);
}

TEST_CASE("rerunning the loop from its own output stops quickly and keeps the point") {
  const SystemConfig cfg = comm_cfg(2, 4, 4);
  const ChannelSet ch = draw_for(cfg, 4);
  const auto tasks = tasks_for(2, 4);
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(2, 0.4);
  auto [c0, fp0] = comm::initial_comm_state(ch, IrsArch::GroupConnected, beta, tasks, cfg);
  const auto first = comm::optimize(ch, beta, tasks, c0, fp0, cfg);
  const auto second = comm::optimize(ch, beta, tasks, first.alloc, first.fp, cfg);
  CHECK(second.trace.size() <= 2);
  CHECK(second.rates_bps.minCoeff() >= first.rates_bps.minCoeff() * (1.0 - 1e-9));
}

TEST_CASE("single-element single-user loop matches a joint grid search") {
  SystemConfig cfg = comm_cfg(1, 1, 1);
  cfg.n_groups = 1;
  cfg.gamma_min_db = -300.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ChannelSet ch = draw_for(cfg, seed);
    const auto tasks = tasks_for(1, seed);
    const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 0.5);
    auto [c0, fp0] = comm::initial_comm_state(ch, IrsArch::SingleConnected, beta, tasks, cfg);
    const auto res = comm::optimize(ch, beta, tasks, c0, fp0, cfg);

    double best = 0.0;
    const CMatrix w = CMatrix::Ones(1, 1);
    for (int pi = 1; pi <= 100; ++pi) {
      for (int ti = 0; ti < 720; ++ti) {
        CMatrix phi(1, 1);
        phi(0, 0) = std::polar(1.0, 2.0 * M_PI * ti / 720.0);
        const auto heff = all_effective_channels(ch, phi);
        const Eigen::VectorXd p = Eigen::VectorXd::Constant(1, cfg.p_max_w * pi / 100.0);
        best = std::max(best,
                        sinr_for(heff, w, p, 0, cfg.noise_power_w(), cfg.bandwidth_hz).rate_bps);
      }
    }
    CHECK(res.rates_bps[0] >= best * (1.0 - 1e-3));
    CHECK(res.rates_bps[0] <= best * (1.0 + 1e-3));
  }
}
