// SPDX-License-Identifier: Apache-2.0
#include "isac/channel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace isac {

CVec steering(double angle, int n) {
  CVec a(n);
  const double phase = kPi * std::sin(angle);
  for (int m = 0; m < n; ++m) a(m) = std::polar(1.0, phase * m);
  return a;
}

CVec user_channel(const ScenarioConfig& cfg, int k, RandomStream& rng) {
  const Placement& u = cfg.user_geometry.at(k);
  CVec h = steering(u.angle, cfg.m_t);
  for (int i = 0; i < cfg.nlos_paths; ++i) {
    const double psi = rng.uniform(-kPi / 2, kPi / 2);
    const cd alpha = rng.complex_normal(cfg.nlos_power);
    h += alpha * steering(psi, cfg.m_t);
  }
  return std::sqrt(cfg.ref_gain_rho * std::pow(u.distance, -cfg.pathloss_exp)) * h;
}

CVec ae_channel_at(const ScenarioConfig& cfg, double angle, double distance) {
  return std::sqrt(cfg.ref_gain_rho / (distance * distance)) * steering(angle, cfg.m_t);
}

CVec ae_channel(const ScenarioConfig& cfg, int t) {
  const Placement& p = cfg.ae_geometry.at(t);
  return ae_channel_at(cfg, p.angle, p.distance);
}

CMat roundtrip_channel_at(const ScenarioConfig& cfg, double angle, double distance, double rcs) {
  const double g = std::sqrt(rcs * cfg.ref_gain_rho * std::pow(distance, -4.0));
  return g * steering(angle, cfg.m_r) * steering(angle, cfg.m_t).adjoint();
}

CMat roundtrip_channel(const ScenarioConfig& cfg, int t) {
  const Placement& p = cfg.ae_geometry.at(t);
  return roundtrip_channel_at(cfg, p.angle, p.distance, cfg.rcs.at(t));
}

CMat clutter_channel(const ScenarioConfig& cfg) {
  CMat h = CMat::Zero(cfg.m_r, cfg.m_t);
  for (const auto& s : cfg.clutter) h += s.gain * steering(s.angle, cfg.m_r) * steering(s.angle, cfg.m_t).adjoint();
  return h;
}

ChannelSet make_channels(const ScenarioConfig& cfg, RandomStream& rng) {
  ChannelSet ch;
  ch.h_users.resize(cfg.m_t, cfg.k_users);
  for (int k = 0; k < cfg.k_users; ++k) ch.h_users.col(k) = user_channel(cfg, k, rng);
  for (int t = 0; t < cfg.t_aes; ++t) {
    ch.h_aes.push_back(ae_channel(cfg, t));
    ch.h_roundtrip.push_back(roundtrip_channel(cfg, t));
    ch.ae_angles.push_back(cfg.ae_geometry[t].angle);
    ch.ae_distances.push_back(cfg.ae_geometry[t].distance);
  }
  ch.h_clutter = clutter_channel(cfg);
  return ch;
}

ChannelSet with_ae_estimates(const ChannelSet& truth, const ScenarioConfig& cfg, const std::vector<double>& angles,
                             const std::vector<double>& distances) {
  if (angles.size() != distances.size() || static_cast<int>(angles.size()) != cfg.t_aes) {
    throw std::invalid_argument("with_ae_estimates: one angle and one distance per AE required");
  }
  ChannelSet out = truth;
  for (int t = 0; t < cfg.t_aes; ++t) {
    out.h_aes[t] = ae_channel_at(cfg, angles[t], distances[t]);
    out.h_roundtrip[t] = roundtrip_channel_at(cfg, angles[t], distances[t], cfg.rcs[t]);
    out.ae_angles[t] = angles[t];
    out.ae_distances[t] = distances[t];
  }
  return out;
}

namespace {
void dump_matrix(std::ostream& os, const std::string& name, const CMat& m) {
  os << "# " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j).real() << ',' << m(i, j).imag();
    }
    os << '\n';
  }
}
}  // namespace

void write_channel_dump(const ChannelSet& ch, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << std::setprecision(17);
  dump_matrix(os, "h_users", ch.h_users);
  for (std::size_t t = 0; t < ch.h_aes.size(); ++t) {
    dump_matrix(os, "h_ae_" + std::to_string(t), ch.h_aes[t]);
    dump_matrix(os, "h_roundtrip_" + std::to_string(t), ch.h_roundtrip[t]);
  }
  dump_matrix(os, "h_clutter", ch.h_clutter);
}

}  // namespace isac
