// SPDX-License-Identifier: Apache-2.0
#include "isac/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace isac;

namespace {

CMat random_cmat(RandomStream& rng, int r, int c) {
  CMat m(r, c);
  for (int i = 0; i < m.size(); ++i) m(i) = rng.complex_normal();
  return m;
}

CVec random_unit(RandomStream& rng, int n) {
  CVec v = random_cmat(rng, n, 1).col(0);
  return v / v.norm();
}

// Hand-built channel set with unit-scale entries.
ChannelSet toy_channels(int m_t, int k, int t_aes, RandomStream& rng) {
  ChannelSet ch;
  ch.h_users = random_cmat(rng, m_t, k);
  for (int t = 0; t < t_aes; ++t) {
    ch.h_aes.push_back(random_cmat(rng, m_t, 1).col(0));
    const CVec g = random_cmat(rng, m_t, 1).col(0);
    ch.h_roundtrip.push_back(g * ch.h_aes.back().adjoint());
    ch.ae_angles.push_back(0.0);
    ch.ae_distances.push_back(1.0);
  }
  ch.h_clutter = random_cmat(rng, m_t, m_t) * 0.1;
  return ch;
}

ScenarioConfig toy_config(int m_t, int k, int t_aes) {
  ScenarioConfig c = desk_profile();
  c.m_t = c.m_r = m_t;
  c.k_users = k;
  c.t_aes = t_aes;
  c.noise_comm = c.noise_eav = c.noise_sense = 1.0;
  c.frame_len_l = 16;
  return c;
}

// Brute-force SCNR quotient, written out from the definition.
double scnr_direct(const ChannelSet& ch, const CMat& wc, int t, const CVec& u, int l, double sigma_s) {
  const CMat x = wc * wc.adjoint();
  const double num = l * (u.adjoint() * ch.h_roundtrip[t] * x * ch.h_roundtrip[t].adjoint() * u)(0).real();
  const double den = l * (u.adjoint() * ch.h_clutter * x * ch.h_clutter.adjoint() * u)(0).real() +
                     static_cast<double>(wc.cols()) * sigma_s;
  return num / den;
}

}  // namespace

TEST_CASE("user SINR examples") {
  ChannelSet ch;
  ch.h_users = CMat::Ones(1, 1);
  ch.h_clutter = CMat::Zero(1, 1);
  BeamformerPair bf{CMat::Ones(1, 1), CMat(1, 0)};
  CHECK(user_sinr(ch, bf, 0, 1.0) == doctest::Approx(1.0));

  ch.h_users = CMat::Zero(2, 1);
  ch.h_users(0, 0) = 1.0;
  bf.w_comm = 2.0 * CMat::Identity(2, 2);
  ch.h_users.conservativeResize(2, 2);
  ch.h_users.col(1) = CVec::Zero(2);
  ch.h_users(1, 1) = 1.0;
  CHECK(user_sinr(ch, bf, 0, 1.0) == doctest::Approx(4.0));

  // Beam orthogonal to the user.
  BeamformerPair orth{CMat::Zero(2, 2), CMat(2, 0)};
  orth.w_comm(1, 0) = 1.0;
  CHECK(user_sinr(ch, orth, 0, 1.0) == 0.0);
}

TEST_CASE("AE SINR examples") {
  ChannelSet ch;
  ch.h_users = CMat::Identity(2, 1);
  ch.h_aes = {CVec::Unit(2, 0)};
  ch.h_clutter = CMat::Zero(2, 2);
  // V spans the complement of h_e, |h_e^H w|^2 = sigma_e^2.
  BeamformerPair bf{CMat::Identity(2, 1), CMat::Zero(2, 1)};
  bf.v_sense(1, 0) = 5.0;
  CHECK(ae_sinr(ch, bf, 0, 0, 1.0) == doctest::Approx(1.0));

  // Leaking V: doubling it makes the jamming term four times larger.
  bf.v_sense(0, 0) = 1.0;
  const double s1 = ae_sinr(ch, bf, 0, 0, 1.0);
  CHECK(s1 == doctest::Approx(1.0 / (1.0 + 1.0)));
  bf.v_sense *= 2.0;
  CHECK(ae_sinr(ch, bf, 0, 0, 1.0) == doctest::Approx(1.0 / (4.0 + 1.0)));

  BeamformerPair orth{CMat::Zero(2, 1), CMat(2, 0)};
  orth.w_comm(1, 0) = 3.0;
  CHECK(ae_sinr(ch, orth, 0, 0, 1.0) == 0.0);
}

TEST_CASE("secrecy rate examples") {
  // Construct SINRs directly: h = 1, w = sqrt(gamma_c) with unit noise; AE with w leakage.
  ChannelSet ch;
  ch.h_users = CMat::Ones(1, 1);
  ch.h_aes = {CVec::Ones(1) * (1.0 / std::sqrt(3.0))};
  ch.h_clutter = CMat::Zero(1, 1);
  BeamformerPair bf{CMat::Constant(1, 1, cd{std::sqrt(3.0), 0.0}), CMat(1, 0)};
  CHECK(user_sinr(ch, bf, 0, 1.0) == doctest::Approx(3.0));
  CHECK(ae_sinr(ch, bf, 0, 0, 1.0) == doctest::Approx(1.0));
  CHECK(sum_secrecy_rate(ch, bf, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));

  // Equal user and AE SINR clamps to zero.
  ch.h_aes = {CVec::Ones(1)};
  CHECK(sum_secrecy_rate(ch, bf, 1.0, 1.0) == doctest::Approx(0.0));

  // Two decoupled users each contributing one bit.
  ChannelSet two;
  two.h_users = CMat::Identity(2, 2);
  two.h_aes = {CVec::Ones(2) * (1.0 / std::sqrt(3.0))};
  two.h_clutter = CMat::Zero(2, 2);
  BeamformerPair bf2{std::sqrt(3.0) * CMat::Identity(2, 2), CMat(2, 0)};
  CHECK(sum_secrecy_rate(two, bf2, 1.0, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("secrecy rate bounds and phase invariance") {
  auto rng = make_rng(21, "sec");
  for (int trial = 0; trial < 200; ++trial) {
    const ChannelSet ch = toy_channels(4, 3, 2, rng);
    BeamformerPair bf{random_cmat(rng, 4, 3), random_cmat(rng, 4, 2) * 0.5};
    const double sec = sum_secrecy_rate(ch, bf, 1.0, 1.0);
    CHECK(sec >= 0.0);
    CHECK(sec <= sum_rate(ch, bf, 1.0) + 1e-12);

    BeamformerPair rot = bf;
    for (int j = 0; j < 3; ++j) rot.w_comm.col(j) *= std::polar(1.0, rng.uniform(0.0, 6.28));
    for (int j = 0; j < 2; ++j) rot.v_sense.col(j) *= std::polar(1.0, rng.uniform(0.0, 6.28));
    for (int k = 0; k < 3; ++k) {
      CHECK(user_sinr(ch, rot, k, 1.0) == doctest::Approx(user_sinr(ch, bf, k, 1.0)).epsilon(1e-12));
      for (int t = 0; t < 2; ++t)
        CHECK(ae_sinr(ch, rot, t, k, 1.0) == doctest::Approx(ae_sinr(ch, bf, t, k, 1.0)).epsilon(1e-12));
    }

    // Covariance forms agree with the beam forms.
    const CMat r_v = bf.v_sense * bf.v_sense.adjoint();
    CHECK(user_sinr_cov(ch, bf.w_comm, r_v, 1, 1.0) == doctest::Approx(user_sinr(ch, bf, 1, 1.0)).epsilon(1e-12));
    CHECK(ae_sinr_cov(ch, bf.w_comm, r_v, 1, 2, 1.0) == doctest::Approx(ae_sinr(ch, bf, 1, 2, 1.0)).epsilon(1e-12));
    CHECK(sum_secrecy_rate_cov(ch, bf.w_comm, r_v, 1.0, 1.0) == doctest::Approx(sec).epsilon(1e-12));
  }
}

TEST_CASE("sensing symbols are orthogonal") {
  auto rng = make_rng(3, "sym");
  for (int n : {1, 3, 6}) {
    const CMat s = sensing_symbols(n, 16, rng);
    CHECK(s.rows() == n);
    CHECK(s.cols() == 16);
    CHECK((s * s.adjoint() - 16.0 * CMat::Identity(n, n)).norm() < 1e-12);
  }
  CHECK_THROWS_AS(sensing_symbols(5, 4, rng), std::invalid_argument);
}

TEST_CASE("matched filter") {
  auto rng = make_rng(4, "mf");
  const int m_r = 4;
  const int l = 16;
  const int streams = 3;
  const ChannelSet ch = toy_channels(m_r, 2, 2, rng);
  const CMat wc = random_cmat(rng, m_r, streams);
  const CMat s = sensing_symbols(streams, l, rng);
  const CMat h_total = ch.h_roundtrip[0] + ch.h_roundtrip[1] + ch.h_clutter;
  const CMat y = h_total * wc * s;
  CHECK((matched_filter(y, s) - l * h_total * wc).norm() < 1e-10 * (l * h_total * wc).norm());

  // Noise-only moment.
  const double sigma = 0.5;
  double acc = 0.0;
  const int draws = 1000;
  for (int i = 0; i < draws; ++i) {
    CMat n(m_r, l);
    for (int j = 0; j < n.size(); ++j) n(j) = rng.complex_normal(sigma);
    acc += matched_filter(n, s).squaredNorm();
  }
  CHECK(acc / draws == doctest::Approx(l * streams * m_r * sigma).epsilon(0.05));

  // Single snapshot is an outer product, and the filter is linear.
  const CVec yv = random_cmat(rng, m_r, 1).col(0);
  const CMat sv = random_cmat(rng, streams, 1);
  CHECK((matched_filter(yv, sv) - yv * sv.adjoint()).norm() < 1e-14);
  const CMat y2 = random_cmat(rng, m_r, l);
  CHECK((matched_filter(2.0 * y + y2, s) - 2.0 * matched_filter(y, s) - matched_filter(y2, s)).norm() < 1e-10);
  CHECK_THROWS_AS(matched_filter(random_cmat(rng, m_r, l), random_cmat(rng, streams, l - 1)), std::invalid_argument);
}

TEST_CASE("sensing SCNR") {
  const int m = 4;
  ScenarioConfig cfg = toy_config(m, 1, 1);
  auto rng = make_rng(5, "scnr");
  ChannelSet ch = toy_channels(m, 1, 1, rng);
  ch.h_clutter.setZero();
  const CVec g = random_cmat(rng, m, 1).col(0);
  const CVec a = random_cmat(rng, m, 1).col(0);
  ch.h_roundtrip[0] = g * a.adjoint();
  const double p = 2.0;
  BeamformerPair bf{a / a.norm() * std::sqrt(p), CMat(m, 0)};
  const CVec u = g / g.norm();
  const double expect = cfg.frame_len_l * p * g.squaredNorm() * a.squaredNorm() / (1 * cfg.noise_sense);
  CHECK(sensing_scnr(ch, bf, 0, u, cfg) == doctest::Approx(expect).epsilon(1e-12));

  // u orthogonal to g.
  CVec uo = random_unit(rng, m);
  uo -= u * u.dot(uo);
  uo.normalize();
  CHECK(sensing_scnr(ch, bf, 0, uo, cfg) == doctest::Approx(0.0));

  // Scaling the beams by c multiplies the SCNR by c^2 without clutter.
  BeamformerPair scaled = bf;
  scaled.w_comm *= 3.0;
  CHECK(sensing_scnr(ch, scaled, 0, u, cfg) == doctest::Approx(9.0 * expect).epsilon(1e-12));

  // General instance against the direct quotient.
  const ChannelSet gen = toy_channels(m, 2, 2, rng);
  const BeamformerPair gb{random_cmat(rng, m, 2), random_cmat(rng, m, 1)};
  const CVec gu = random_unit(rng, m);
  CHECK(sensing_scnr(gen, gb, 1, gu, cfg) ==
        doctest::Approx(scnr_direct(gen, gb.combined(), 1, gu, cfg.frame_len_l, cfg.noise_sense)).epsilon(1e-12));
}

TEST_CASE("receive beamformer maximizes the quotient") {
  const int m = 5;
  ScenarioConfig cfg = toy_config(m, 2, 2);
  auto rng = make_rng(6, "rx");
  for (int trial = 0; trial < 20; ++trial) {
    const ChannelSet ch = toy_channels(m, 2, 2, rng);
    const BeamformerPair bf{random_cmat(rng, m, 2), random_cmat(rng, m, 2)};
    for (int t = 0; t < 2; ++t) {
      const CVec u = receive_beamformer(ch, bf, t, cfg);
      CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-10));
      const double best = sensing_scnr(ch, bf, t, u, cfg);
      for (int probe = 0; probe < 100; ++probe)
        CHECK(sensing_scnr(ch, bf, t, random_unit(rng, m), cfg) <= best * (1.0 + 1e-12));

      // Scaling both quotient matrices (beams and noise together) leaves u unchanged up to phase.
      ScenarioConfig scaled = cfg;
      scaled.noise_sense *= 4.0;
      BeamformerPair bf2 = bf;
      bf2.w_comm *= 2.0;
      bf2.v_sense *= 2.0;
      const CVec u2 = receive_beamformer(ch, bf2, t, scaled);
      CHECK(std::abs(u.dot(u2)) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  // Without clutter and with a rank-one target, u aligns with g.
  ChannelSet ch = toy_channels(m, 2, 1, rng);
  ch.h_clutter.setZero();
  const CVec g = random_cmat(rng, m, 1).col(0);
  ch.h_roundtrip[0] = g * random_cmat(rng, m, 1).col(0).adjoint();
  const BeamformerPair bf{random_cmat(rng, m, 2), CMat(m, 0)};
  const CVec u = receive_beamformer(ch, bf, 0, cfg);
  CHECK(std::abs(u.dot(g)) / g.norm() == doctest::Approx(1.0).epsilon(1e-10));

  const ReceiveBank bank = receive_bank_cov(ch, bf.transmit_covariance(), bf.n_streams(), cfg);
  REQUIRE(bank.u.size() == 1);
  CHECK((bank.u[0] - u).norm() < 1e-12);
}

TEST_CASE("beamformer pair helpers") {
  auto rng = make_rng(7, "pair");
  const BeamformerPair bf{random_cmat(rng, 4, 2), random_cmat(rng, 4, 3)};
  CHECK(bf.n_streams() == 5);
  CHECK(bf.power() == doctest::Approx(bf.combined().squaredNorm()));
  CHECK((bf.transmit_covariance() - bf.combined() * bf.combined().adjoint()).norm() < 1e-12);
}
