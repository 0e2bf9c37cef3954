// SPDX-License-Identifier: Apache-2.0
#include "isac/metrics.hpp"

#include "isac/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isac {

CMat BeamformerPair::transmit_covariance() const {
  CMat c = w_comm * w_comm.adjoint();
  if (v_sense.cols() > 0) c += v_sense * v_sense.adjoint();
  return c;
}

CMat BeamformerPair::combined() const {
  CMat out(w_comm.rows(), w_comm.cols() + v_sense.cols());
  out << w_comm, v_sense;
  return out;
}

double user_sinr_cov(const ChannelSet& ch, const CMat& w, const CMat& r_v, int k, double noise_c) {
  const CVec h = ch.h_users.col(k);
  const Eigen::RowVectorXcd g = h.adjoint() * w;
  double interference = noise_c;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (j != k) interference += std::norm(g(j));
  }
  if (r_v.size() > 0) interference += (h.adjoint() * r_v * h)(0).real();
  return std::norm(g(k)) / interference;
}

double user_sinr(const ChannelSet& ch, const BeamformerPair& bf, int k, double noise_c) {
  const CVec h = ch.h_users.col(k);
  const Eigen::RowVectorXcd g = h.adjoint() * bf.w_comm;
  double interference = noise_c;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (j != k) interference += std::norm(g(j));
  }
  if (bf.v_sense.cols() > 0) interference += (h.adjoint() * bf.v_sense).squaredNorm();
  return std::norm(g(k)) / interference;
}

double ae_sinr_cov(const ChannelSet& ch, const CMat& w, const CMat& r_v, int t, int k, double noise_e) {
  const CVec& he = ch.h_aes.at(t);
  const double leak = std::norm(he.dot(w.col(k)));
  double jam = noise_e;
  if (r_v.size() > 0) jam += (he.adjoint() * r_v * he)(0).real();
  return leak / jam;
}

double ae_sinr(const ChannelSet& ch, const BeamformerPair& bf, int t, int k, double noise_e) {
  const CVec& he = ch.h_aes.at(t);
  const double leak = std::norm(he.dot(bf.w_comm.col(k)));
  double jam = noise_e;
  if (bf.v_sense.cols() > 0) jam += (he.adjoint() * bf.v_sense).squaredNorm();
  return leak / jam;
}

double sum_rate(const ChannelSet& ch, const BeamformerPair& bf, double noise_c) {
  double r = 0.0;
  for (int k = 0; k < ch.k_users(); ++k) r += std::log2(1.0 + user_sinr(ch, bf, k, noise_c));
  return r;
}

double sum_secrecy_rate(const ChannelSet& ch, const BeamformerPair& bf, double noise_c, double noise_e) {
  double total = 0.0;
  for (int k = 0; k < ch.k_users(); ++k) {
    double worst = 0.0;
    for (int t = 0; t < ch.t_aes(); ++t) worst = std::max(worst, ae_sinr(ch, bf, t, k, noise_e));
    const double gap = std::log2(1.0 + user_sinr(ch, bf, k, noise_c)) - std::log2(1.0 + worst);
    total += std::max(gap, 0.0);
  }
  return total;
}

double sum_secrecy_rate_cov(const ChannelSet& ch, const CMat& w, const CMat& r_v, double noise_c, double noise_e) {
  double total = 0.0;
  for (int k = 0; k < ch.k_users(); ++k) {
    double worst = 0.0;
    for (int t = 0; t < ch.t_aes(); ++t) worst = std::max(worst, ae_sinr_cov(ch, w, r_v, t, k, noise_e));
    const double gap = std::log2(1.0 + user_sinr_cov(ch, w, r_v, k, noise_c)) - std::log2(1.0 + worst);
    total += std::max(gap, 0.0);
  }
  return total;
}

CMat matched_filter(const CMat& echoes, const CMat& symbols) {
  if (echoes.cols() != symbols.cols()) {
    throw std::invalid_argument("matched_filter: echoes have " + std::to_string(echoes.cols()) +
                                " samples but symbols have " + std::to_string(symbols.cols()));
  }
  return echoes * symbols.adjoint();
}

CMat sensing_symbols(int n_streams, int frame_len, RandomStream& rng) {
  if (n_streams > frame_len) throw std::invalid_argument("sensing_symbols: more streams than samples");
  if (n_streams == 0) return CMat(0, frame_len);
  const double s = 1.0 / std::sqrt(2.0);
  CMat raw(frame_len, n_streams);
  for (int l = 0; l < frame_len; ++l) {
    for (int n = 0; n < n_streams; ++n) {
      const std::uint64_t bits = rng.next_u64();
      raw(l, n) = cd{(bits & 1) ? s : -s, (bits & 2) ? s : -s};
    }
  }
  Eigen::HouseholderQR<CMat> qr(raw);
  CMat q = qr.householderQ() * CMat::Identity(frame_len, n_streams);
  return std::sqrt(static_cast<double>(frame_len)) * q.adjoint();
}

double sensing_scnr_cov(const ChannelSet& ch, const CMat& tx_cov, int n_streams, int t, const CVec& u,
                        const ScenarioConfig& cfg) {
  const double l = cfg.frame_len_l;
  const CVec gs = ch.h_roundtrip.at(t).adjoint() * u;
  const CVec gi = ch.h_clutter.adjoint() * u;
  const double num = l * (gs.adjoint() * tx_cov * gs)(0).real();
  const double den = l * (gi.adjoint() * tx_cov * gi)(0).real() + n_streams * cfg.noise_sense * u.squaredNorm();
  return num / den;
}

double sensing_scnr(const ChannelSet& ch, const BeamformerPair& bf, int t, const CVec& u, const ScenarioConfig& cfg) {
  return sensing_scnr_cov(ch, bf.transmit_covariance(), bf.n_streams(), t, u, cfg);
}

CVec receive_beamformer_cov(const ChannelSet& ch, const CMat& tx_cov, int n_streams, int t,
                            const ScenarioConfig& cfg) {
  const CMat& hs = ch.h_roundtrip.at(t);
  const CMat g = linalg::herm(hs * tx_cov * hs.adjoint());
  CMat r = linalg::herm(ch.h_clutter * tx_cov * ch.h_clutter.adjoint());
  r.diagonal().array() += n_streams * cfg.noise_sense / cfg.frame_len_l;
  const CMat r_isqrt = linalg::inv_sqrt_pd(r);
  const auto eig = linalg::eig_desc(r_isqrt * g * r_isqrt);

  // Near-ties: pick the candidate with the largest quotient, first index wins.
  const double top = eig.values(0);
  const double tie_tol = 1e-9 * std::max(std::abs(top), std::numeric_limits<double>::min());
  CVec best;
  double best_q = -1.0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (top - eig.values(i) > tie_tol) break;
    CVec u = r_isqrt * eig.vectors.col(i);
    u.normalize();
    const double q = sensing_scnr_cov(ch, tx_cov, n_streams, t, u, cfg);
    if (q > best_q) {
      best_q = q;
      best = u;
    }
  }
  // Deterministic global phase: first nonzero entry real positive.
  for (Eigen::Index i = 0; i < best.size(); ++i) {
    if (std::abs(best(i)) > 1e-12) {
      best *= std::conj(best(i)) / std::abs(best(i));
      break;
    }
  }
  return best;
}

CVec receive_beamformer(const ChannelSet& ch, const BeamformerPair& bf, int t, const ScenarioConfig& cfg) {
  return receive_beamformer_cov(ch, bf.transmit_covariance(), bf.n_streams(), t, cfg);
}

ReceiveBank receive_bank_cov(const ChannelSet& ch, const CMat& tx_cov, int n_streams, const ScenarioConfig& cfg) {
  ReceiveBank bank;
  for (int t = 0; t < ch.t_aes(); ++t) bank.u.push_back(receive_beamformer_cov(ch, tx_cov, n_streams, t, cfg));
  return bank;
}

}  // namespace isac
