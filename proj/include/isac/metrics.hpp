// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isac/channel.hpp"
#include "isac/scenario.hpp"
#include "isac/types.hpp"

#include <vector>

namespace isac {

/// Communication beamformer W (M_t x K) and sensing beamformer V (M_t x N_s).
struct BeamformerPair {
  CMat w_comm;
  CMat v_sense;

  int n_streams() const { return static_cast<int>(w_comm.cols() + v_sense.cols()); }
  /// W W^H + V V^H.
  CMat transmit_covariance() const;
  double power() const { return w_comm.squaredNorm() + v_sense.squaredNorm(); }
  /// [W, V].
  CMat combined() const;
};

/// One unit-norm receive combiner per AE.
struct ReceiveBank {
  std::vector<CVec> u;
};

double user_sinr(const ChannelSet& ch, const BeamformerPair& bf, int k, double noise_c);
/// Same quantity with the sensing part given as a covariance R_v = V V^H.
double user_sinr_cov(const ChannelSet& ch, const CMat& w, const CMat& r_v, int k, double noise_c);

/// SINR of AE t eavesdropping stream k after perfect cancellation of the
/// other data streams.
double ae_sinr(const ChannelSet& ch, const BeamformerPair& bf, int t, int k, double noise_e);
double ae_sinr_cov(const ChannelSet& ch, const CMat& w, const CMat& r_v, int t, int k, double noise_e);

/// Sum rate in bits per channel use.
double sum_rate(const ChannelSet& ch, const BeamformerPair& bf, double noise_c);

/// Sum over users of [log2(1+SINR_k) - log2(1+max_t SINR_e,t,k)]^+ (clamped per user).
double sum_secrecy_rate(const ChannelSet& ch, const BeamformerPair& bf, double noise_c, double noise_e);
double sum_secrecy_rate_cov(const ChannelSet& ch, const CMat& w, const CMat& r_v, double noise_c, double noise_e);

/// Y_s S_c^H. Throws std::invalid_argument on shape mismatch.
CMat matched_filter(const CMat& echoes, const CMat& symbols);

/// QPSK rows orthogonalized so that S S^H = L I exactly. Requires n_streams <= L.
CMat sensing_symbols(int n_streams, int frame_len, RandomStream& rng);

/// Sensing SCNR of AE t with combiner u (unit norm).
double sensing_scnr(const ChannelSet& ch, const BeamformerPair& bf, int t, const CVec& u, const ScenarioConfig& cfg);
/// Same with an arbitrary transmit covariance and stream count K + N_s.
double sensing_scnr_cov(const ChannelSet& ch, const CMat& tx_cov, int n_streams, int t, const CVec& u,
                        const ScenarioConfig& cfg);

/// Generalized Rayleigh quotient maximizer, returned with unit norm.
CVec receive_beamformer(const ChannelSet& ch, const BeamformerPair& bf, int t, const ScenarioConfig& cfg);
CVec receive_beamformer_cov(const ChannelSet& ch, const CMat& tx_cov, int n_streams, int t, const ScenarioConfig& cfg);

ReceiveBank receive_bank_cov(const ChannelSet& ch, const CMat& tx_cov, int n_streams, const ScenarioConfig& cfg);

}  // namespace isac
