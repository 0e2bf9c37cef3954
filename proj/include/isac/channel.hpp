// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isac/scenario.hpp"
#include "isac/types.hpp"

#include <filesystem>
#include <vector>

namespace isac {

/// Realized channels of one instance. The AE-dependent parts (h_aes,
/// h_roundtrip, ae_angles, ae_distances) either hold the ground truth or, for
/// a design channel set, the values reconstructed from estimates.
struct ChannelSet {
  CMat h_users;                   // M_t x K, columns h_k
  std::vector<CVec> h_aes;        // length M_t each
  std::vector<CMat> h_roundtrip;  // M_r x M_t each, rank one
  CMat h_clutter;                 // M_r x M_t
  std::vector<double> ae_angles;
  std::vector<double> ae_distances;

  int m_t() const { return static_cast<int>(h_users.rows()); }
  int m_r() const { return static_cast<int>(h_clutter.rows()); }
  int k_users() const { return static_cast<int>(h_users.cols()); }
  int t_aes() const { return static_cast<int>(h_aes.size()); }
};

/// Half-wavelength ULA steering vector, element m = exp(j*pi*m*sin(angle)).
CVec steering(double angle, int n);

CVec user_channel(const ScenarioConfig& cfg, int k, RandomStream& rng);
CVec ae_channel(const ScenarioConfig& cfg, int t);
CVec ae_channel_at(const ScenarioConfig& cfg, double angle, double distance);
CMat roundtrip_channel(const ScenarioConfig& cfg, int t);
CMat roundtrip_channel_at(const ScenarioConfig& cfg, double angle, double distance, double rcs);
CMat clutter_channel(const ScenarioConfig& cfg);

ChannelSet make_channels(const ScenarioConfig& cfg, RandomStream& rng);

/// Copy of `truth` whose AE channels are rebuilt at the given angles/distances.
ChannelSet with_ae_estimates(const ChannelSet& truth, const ScenarioConfig& cfg, const std::vector<double>& angles,
                             const std::vector<double>& distances);

/// Writes every channel matrix as CSV rows of interleaved real/imag values,
/// one block per matrix preceded by a "# name rows cols" header line.
void write_channel_dump(const ChannelSet& ch, const std::filesystem::path& path);

}  // namespace isac
