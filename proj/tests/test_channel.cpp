// SPDX-License-Identifier: Apache-2.0
#include "isac/channel.hpp"
#include "isac/linalg.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

using namespace isac;

namespace {

bool near(const CVec& a, const CVec& b, double tol) { return (a - b).norm() <= tol; }

int svd_rank(const CMat& m, double rel) {
  Eigen::JacobiSVD<CMat> svd(m);
  const auto& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel * s(0)) ++r;
  return r;
}

ScenarioConfig unit_config() {
  ScenarioConfig c = desk_profile();
  c.ref_gain_rho = 1.0;
  c.nlos_paths = 0;
  return c;
}

}  // namespace

TEST_CASE("steering vectors") {
  CVec expect(4);
  expect << 1, 1, 1, 1;
  CHECK(near(steering(0.0, 4), expect, 1e-15));
  expect << 1, -1, 1, -1;
  CHECK(near(steering(kPi / 2, 4), expect, 1e-14));
  expect << cd{1, 0}, cd{0, 1}, cd{-1, 0}, cd{0, -1};
  CHECK(near(steering(kPi / 6, 4), expect, 1e-14));

  auto rng = make_rng(1, "steer");
  for (int i = 0; i < 100; ++i) {
    const int n = 1 + static_cast<int>(rng.uniform() * 64);
    const CVec a = steering(rng.uniform(-kPi / 2, kPi / 2), n);
    CHECK(a.squaredNorm() == doctest::Approx(n).epsilon(1e-12));
    for (int m = 0; m < n; ++m) CHECK(std::abs(a(m)) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("user channel") {
  ScenarioConfig c = unit_config();
  c.user_geometry[0] = {0.3, 1.0};
  auto rng = make_rng(1, "u");
  CHECK(near(user_channel(c, 0, rng), steering(0.3, c.m_t), 1e-14));

  c.user_geometry[0].distance = 100.0;
  c.pathloss_exp = 2.0;
  CHECK(user_channel(c, 0, rng).squaredNorm() == doctest::Approx(c.m_t * 1e-4).epsilon(1e-12));

  // NLoS energy: n_NL paths at -10 dB each.
  c.nlos_paths = 3;
  c.nlos_power = 0.1;
  const CVec los = std::sqrt(c.ref_gain_rho * std::pow(100.0, -2.0)) * steering(0.3, c.m_t);
  const int draws = 10000;
  double acc = 0.0;
  auto mc = make_rng(2, "nlos");
  for (int i = 0; i < draws; ++i) acc += (user_channel(c, 0, mc) - los).squaredNorm();
  const double expect_nlos = 3 * 0.1 * 1e-4 * c.m_t;
  CHECK(acc / draws == doctest::Approx(expect_nlos).epsilon(0.05));
}

TEST_CASE("AE channel") {
  ScenarioConfig c = unit_config();
  c.ae_geometry[0] = {0.0, 1.0};
  CHECK(near(ae_channel(c, 0), CVec::Ones(c.m_t), 1e-14));
  c.ae_geometry[0].distance = 100.0;
  CHECK(ae_channel(c, 0).squaredNorm() == doctest::Approx(c.m_t * 1e-4).epsilon(1e-12));
  c.ae_geometry[1] = {0.0, 200.0};
  CHECK(ae_channel(c, 0).squaredNorm() / ae_channel(c, 1).squaredNorm() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("round-trip channel") {
  ScenarioConfig c = unit_config();
  c.m_r = 5;
  c.ae_geometry[0] = {0.4, 1.0};
  c.rcs[0] = 1.0;
  const CMat h = roundtrip_channel(c, 0);
  CHECK(h.rows() == 5);
  CHECK(h.cols() == c.m_t);
  CHECK(svd_rank(h, 1e-10) == 1);
  CHECK(h.norm() == doctest::Approx(std::sqrt(5.0 * c.m_t)).epsilon(1e-12));
  c.ae_geometry[0].distance = 2.0;
  CHECK(roundtrip_channel(c, 0).norm() == doctest::Approx(h.norm() / 4.0).epsilon(1e-12));

  // Transmit side shares the direction of the AE channel.
  const ChannelSet ch = [&] {
    auto rng = make_rng(3, "ch");
    return make_channels(desk_profile(), rng);
  }();
  for (int t = 0; t < ch.t_aes(); ++t) {
    const CVec row = ch.h_roundtrip[t].row(0).adjoint();  // proportional to a_t
    const cd ip = ch.h_aes[t].dot(row);
    CHECK(ip.real() > 0.0);
    CHECK(std::abs(ip) / (row.norm() * ch.h_aes[t].norm()) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("clutter channel") {
  ScenarioConfig c = unit_config();
  c.clutter.clear();
  CHECK(clutter_channel(c).norm() == 0.0);
  c.clutter = {{0.2, cd{0.5, 0.1}}};
  CHECK(svd_rank(clutter_channel(c), 1e-10) == 1);
  c.clutter = default_clutter(c);
  CHECK(svd_rank(clutter_channel(c), 1e-10) == 3);
}

TEST_CASE("channel set shapes and determinism") {
  const ScenarioConfig c = desk_profile();
  auto r1 = make_rng(11, "channels");
  auto r2 = make_rng(11, "channels");
  const ChannelSet a = make_channels(c, r1);
  const ChannelSet b = make_channels(c, r2);
  CHECK(a.m_t() == c.m_t);
  CHECK(a.m_r() == c.m_r);
  CHECK(a.k_users() == c.k_users);
  CHECK(a.t_aes() == c.t_aes);
  CHECK(a.h_users == b.h_users);
  CHECK(a.h_clutter == b.h_clutter);
  for (int t = 0; t < c.t_aes; ++t) {
    CHECK(a.h_aes[t] == b.h_aes[t]);
    CHECK(a.h_roundtrip[t] == b.h_roundtrip[t]);
    CHECK(svd_rank(a.h_roundtrip[t], 1e-10) == 1);
    CHECK(a.ae_angles[t] == c.ae_geometry[t].angle);
  }

  ScenarioConfig los = c;
  los.nlos_power = 0.0;
  auto r3 = make_rng(11, "channels");
  const ChannelSet l = make_channels(los, r3);
  for (int k = 0; k < c.k_users; ++k) {
    const CVec a_k = steering(c.user_geometry[k].angle, c.m_t);
    const cd ratio = l.h_users(0, k) / a_k(0);
    CHECK(near(l.h_users.col(k), ratio * a_k, 1e-12 * l.h_users.col(k).norm()));
  }
}

TEST_CASE("estimated AE channels replace only the AE parts") {
  const ScenarioConfig c = desk_profile();
  auto rng = make_rng(4, "channels");
  const ChannelSet truth = make_channels(c, rng);
  const ChannelSet est = with_ae_estimates(truth, c, {0.1, -0.2}, {120.0, 90.0});
  CHECK(est.h_users == truth.h_users);
  CHECK(est.h_clutter == truth.h_clutter);
  CHECK(near(est.h_aes[0], ae_channel_at(c, 0.1, 120.0), 1e-18));
  CHECK(est.ae_distances[1] == 90.0);
  CHECK_THROWS_AS(with_ae_estimates(truth, c, {0.1}, {1.0}), std::invalid_argument);
}

TEST_CASE("channel dump") {
  const ScenarioConfig c = desk_profile();
  auto rng = make_rng(4, "channels");
  const ChannelSet ch = make_channels(c, rng);
  const auto path = std::filesystem::temp_directory_path() / "isac_channel_dump.csv";
  write_channel_dump(ch, path);
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  CHECK(line == "# h_users 8 2");
  std::getline(is, line);
  const auto comma = line.find(',');
  CHECK(std::stod(line.substr(0, comma)) == doctest::Approx(ch.h_users(0, 0).real()).epsilon(1e-15));
  int headers = 1;
  while (std::getline(is, line))
    if (!line.empty() && line[0] == '#') ++headers;
  CHECK(headers == 2 + 2 * c.t_aes);
  std::filesystem::remove(path);
}
