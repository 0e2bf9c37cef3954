// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isac/channel.hpp"
#include "isac/metrics.hpp"
#include "isac/scenario.hpp"
#include "isac/types.hpp"

#include <iosfwd>
#include <vector>

/// Echo simulation, MUSIC angle estimation and AE channel reconstruction.
namespace isac {

struct EchoBatch {
  CMat snapshots;  // M_r x L
  CMat symbols;    // (K + N_s) x L
  CMat clutter_return;  // H_I W_c S_c, known to the BS along with H_I
  std::vector<double> true_angles;
  std::vector<double> true_distances;
  std::vector<double> scnr_achieved;  // linear, with the optimal receive combiner
};

struct AngleEstimate {
  std::vector<double> angles;  // radians, ascending
  std::vector<double> grid;    // radians
  RVec spectrum;               // 1 / ||E_n^H a(theta)||^2 on the grid
  bool shortfall = false;      // fewer peaks than requested
};

struct MusicOptions {
  double grid_step = 0.05 * kPi / 180.0;
  double guard = 2.0 * kPi / 180.0;  // minimum separation between reported peaks
  /// Subtract the known clutter return before estimating (EchoBatch overload only).
  bool cancel_clutter = true;
};

/// Y = sum_t H_s,t W_c S_c + H_I W_c S_c + N, with S_c from sensing_symbols and
/// N circular Gaussian of variance noise_sense per entry.
EchoBatch simulate_echoes(const ChannelSet& ch, const BeamformerPair& bf, const ScenarioConfig& cfg,
                          RandomStream& rng);

/// Sample covariance, noise subspace of dimension M_r - t_aes, pseudo-spectrum on
/// the grid over (-90, 90) degrees, the t_aes strongest separated peaks refined by
/// a parabola through the log-spectrum. Requires L > t_aes and grid_step > 0.
AngleEstimate music_estimate(const CMat& snapshots, int t_aes, const MusicOptions& opts = {});
AngleEstimate music_estimate(const EchoBatch& echoes, int t_aes, const MusicOptions& opts = {});

/// AE channels at the estimated angles and the given distances.
std::vector<CVec> reconstruct_ae_channels(const std::vector<double>& angles, const std::vector<double>& distances,
                                          const ScenarioConfig& cfg);

/// RMSE in degrees over the minimum-cost assignment of estimates to truths.
/// Truths left without an estimate take the error to the nearest estimate
/// (90 degrees if there are none).
double angle_rmse(const std::vector<double>& estimates, const std::vector<double>& truth);

/// Columns angle_deg, pseudo_spectrum_db.
void write_spectrum_csv(const AngleEstimate& est, std::ostream& os);

}  // namespace isac
