#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "bdmec/config.hpp"
#include "bdmec/errors.hpp"
#include "bdmec/rng.hpp"
#include "bdmec/task.hpp"

using namespace bdmec;

TEST_CASE("group count must divide element count") {
  SystemConfig cfg;
  cfg.n_elements = 64;
  cfg.n_groups = 8;
  CHECK(validate_config(cfg).empty());

  cfg.n_elements = 32;
  cfg.n_groups = 5;
  const auto errors = validate_config(cfg);
  REQUIRE(!errors.empty());
  bool found = false;
  for (const auto& e : errors) found |= e.find("K mod L") != std::string::npos;
  CHECK(found);
}

TEST_CASE("reference parameter set validates") {
  SystemConfig cfg;
  cfg.bandwidth_hz = 20e6;
  cfg.noise_psd_dbm_hz = -174.0;
  cfg.pl0_db = 31.5;
  cfg.e_max_j = 2.0;
  CHECK(validate_config(cfg).empty());
  CHECK(cfg.noise_power_w() == doctest::Approx(7.962143411069941e-14).epsilon(1e-12));
}

TEST_CASE("every violation is reported with its field") {
  SystemConfig cfg;
  cfg.n_users = 0;
  cfg.bandwidth_hz = -1.0;
  cfg.w1 = 0.0;
  cfg.w2 = 0.0;
  cfg.h_min_m = 50.0;
  cfg.h_max_m = 10.0;
  const auto errors = validate_config(cfg);
  CHECK(errors.size() >= 4);
  bool users = false, bw = false, weights = false, heights = false;
  for (const auto& e : errors) {
    users |= e.find("n_users") != std::string::npos;
    bw |= e.find("bandwidth_hz") != std::string::npos;
    weights |= e.find("w1 + w2") != std::string::npos;
    heights |= e.find("h_min_m") != std::string::npos;
  }
  CHECK(users);
  CHECK(bw);
  CHECK(weights);
  CHECK(heights);
}

TEST_CASE("config round-trips bit-exactly") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    SystemConfig cfg;
    cfg.bandwidth_hz = rng.uniform(1e6, 1e8);
    cfg.noise_psd_dbm_hz = rng.uniform(-200.0, -100.0);
    cfg.pl0_db = rng.uniform(10.0, 60.0);
    cfg.alpha_direct = rng.uniform(2.0, 4.0);
    cfg.eta_los_db = rng.uniform(0.0, 3.0);
    cfg.eta_nlos_db = rng.uniform(10.0, 30.0);
    cfg.p_los_direct = rng.uniform(0.0, 1.0);
    cfg.f_user_max_hz = rng.uniform(1e8, 1e10);
    cfg.e_max_j = rng.uniform(0.1, 10.0);
    cfg.epsilon = rng.uniform(1e-6, 1e-3);
    cfg.p_max_w = rng.uniform(0.01, 1.0);

    std::stringstream ss;
    save_config(cfg, ss);
    const SystemConfig back = load_config(ss);
    CHECK(back.bandwidth_hz == cfg.bandwidth_hz);
    CHECK(back.noise_psd_dbm_hz == cfg.noise_psd_dbm_hz);
    CHECK(back.pl0_db == cfg.pl0_db);
    CHECK(back.alpha_direct == cfg.alpha_direct);
    CHECK(back.eta_los_db == cfg.eta_los_db);
    CHECK(back.eta_nlos_db == cfg.eta_nlos_db);
    CHECK(back.p_los_direct == cfg.p_los_direct);
    CHECK(back.f_user_max_hz == cfg.f_user_max_hz);
    CHECK(back.e_max_j == cfg.e_max_j);
    CHECK(back.epsilon == cfg.epsilon);
    CHECK(back.p_max_w == cfg.p_max_w);
  }
}

TEST_CASE("unknown keys and sections are hard errors") {
  {
    std::stringstream ss("[system]\nno_such_field = 3\n");
    CHECK_THROWS_AS(load_config(ss), ConfigError);
  }
  {
    std::stringstream ss("[mystery]\nn_users = 3\n");
    CHECK_THROWS_AS(load_config(ss), ConfigError);
  }
  {
    std::stringstream ss("n_users = 3\n");  // key before any section
    CHECK_THROWS_AS(load_config(ss), ConfigError);
  }
  {
    std::stringstream ss("[system]\nn_users = banana\n");
    CHECK_THROWS_AS(load_config(ss), ConfigError);
  }
}

TEST_CASE("comments and blank lines are tolerated") {
  std::stringstream ss("# header\n[system]\n\nn_users = 3  # trailing\n");
  const SystemConfig cfg = load_config(ss);
  CHECK(cfg.n_users == 3);
}

TEST_CASE("task cycle totals stay consistent") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const double s = rng.uniform(1e3, 1e6);
    const double c = rng.uniform(1.0, 1e4);
    const UserTask t = UserTask::make(s, c);
    CHECK(t.c_total == s * c);
    CHECK(t.s_bits > 0);
    CHECK(t.c_per_bit > 0);
  }
}
