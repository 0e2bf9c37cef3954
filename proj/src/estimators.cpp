// SPDX-License-Identifier: Apache-2.0
#include "isac/estimators.hpp"

#include "isac/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace isac {

EchoBatch simulate_echoes(const ChannelSet& ch, const BeamformerPair& bf, const ScenarioConfig& cfg,
                          RandomStream& rng) {
  EchoBatch e;
  const CMat wc = bf.combined();
  e.symbols = sensing_symbols(static_cast<int>(wc.cols()), cfg.frame_len_l, rng);
  const CMat x = wc * e.symbols;  // M_t x L
  e.clutter_return = ch.h_clutter * x;
  e.snapshots = e.clutter_return;
  for (const CMat& hs : ch.h_roundtrip) e.snapshots += hs * x;
  for (Eigen::Index i = 0; i < e.snapshots.size(); ++i) e.snapshots(i) += rng.complex_normal(cfg.noise_sense);
  e.true_angles = ch.ae_angles;
  e.true_distances = ch.ae_distances;
  const CMat cov = bf.transmit_covariance();
  for (int t = 0; t < ch.t_aes(); ++t) {
    const CVec u = receive_beamformer_cov(ch, cov, bf.n_streams(), t, cfg);
    e.scnr_achieved.push_back(sensing_scnr_cov(ch, cov, bf.n_streams(), t, u, cfg));
  }
  return e;
}

AngleEstimate music_estimate(const CMat& snapshots, int t_aes, const MusicOptions& opts) {
  const int m = static_cast<int>(snapshots.rows());
  const int l = static_cast<int>(snapshots.cols());
  if (!(opts.grid_step > 0.0)) throw std::invalid_argument("music_estimate: grid_step must be positive");
  if (l <= t_aes) throw std::invalid_argument("music_estimate: need more snapshots than sources");
  if (t_aes < 0 || t_aes >= m) throw std::invalid_argument("music_estimate: source count must be below M_r");

  const CMat r = linalg::herm(snapshots * snapshots.adjoint() / static_cast<double>(l));
  const linalg::HermEig eig = linalg::eig_desc(r);
  const CMat noise = eig.vectors.rightCols(m - t_aes);

  AngleEstimate est;
  const int n = static_cast<int>(std::floor(kPi / opts.grid_step + 1e-9));
  for (int i = 1; i < n; ++i) est.grid.push_back(-kPi / 2.0 + i * opts.grid_step);
  est.spectrum.resize(static_cast<Eigen::Index>(est.grid.size()));
  for (std::size_t i = 0; i < est.grid.size(); ++i) {
    const double d = (noise.adjoint() * steering(est.grid[i], m)).squaredNorm();
    est.spectrum(static_cast<Eigen::Index>(i)) = 1.0 / std::max(d, std::numeric_limits<double>::min());
  }

  // Interior local maxima, strongest first.
  const Eigen::Index g = est.spectrum.size();
  std::vector<Eigen::Index> peaks;
  for (Eigen::Index i = 1; i + 1 < g; ++i) {
    if (est.spectrum(i) >= est.spectrum(i - 1) && est.spectrum(i) > est.spectrum(i + 1)) peaks.push_back(i);
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return est.spectrum(a) > est.spectrum(b); });

  for (Eigen::Index i : peaks) {
    if (static_cast<int>(est.angles.size()) == t_aes) break;
    const double y0 = std::log(est.spectrum(i - 1));
    const double y1 = std::log(est.spectrum(i));
    const double y2 = std::log(est.spectrum(i + 1));
    const double curv = y0 - 2.0 * y1 + y2;
    const double delta = curv < 0.0 ? std::clamp(0.5 * (y0 - y2) / curv, -0.5, 0.5) : 0.0;
    const double angle = est.grid[static_cast<std::size_t>(i)] + delta * opts.grid_step;
    const bool separated = std::all_of(est.angles.begin(), est.angles.end(),
                                       [&](double a) { return std::abs(a - angle) >= opts.guard; });
    if (separated) est.angles.push_back(angle);
  }
  est.shortfall = static_cast<int>(est.angles.size()) < t_aes;
  std::sort(est.angles.begin(), est.angles.end());
  return est;
}

AngleEstimate music_estimate(const EchoBatch& echoes, int t_aes, const MusicOptions& opts) {
  if (opts.cancel_clutter && echoes.clutter_return.size() > 0)
    return music_estimate(CMat(echoes.snapshots - echoes.clutter_return), t_aes, opts);
  return music_estimate(echoes.snapshots, t_aes, opts);
}

std::vector<CVec> reconstruct_ae_channels(const std::vector<double>& angles, const std::vector<double>& distances,
                                          const ScenarioConfig& cfg) {
  if (angles.size() != distances.size())
    throw std::invalid_argument("reconstruct_ae_channels: angle and distance counts differ");
  std::vector<CVec> out;
  for (std::size_t t = 0; t < angles.size(); ++t) out.push_back(ae_channel_at(cfg, angles[t], distances[t]));
  return out;
}

double angle_rmse(const std::vector<double>& estimates, const std::vector<double>& truth) {
  if (truth.empty()) return 0.0;
  const double to_deg = 180.0 / kPi;
  if (estimates.empty()) return 90.0;

  // Exhaustive assignment over permutations of the larger list; counts are small.
  const std::size_t n = truth.size();
  const std::size_t k = std::min(n, estimates.size());
  const bool permute_estimates = estimates.size() >= n;
  std::vector<std::size_t> order(permute_estimates ? estimates.size() : n);
  std::iota(order.begin(), order.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    std::vector<bool> matched(n, false);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t e = permute_estimates ? order[i] : i;
      const std::size_t t = permute_estimates ? i : order[i];
      const double d = (estimates[e] - truth[t]) * to_deg;
      cost += d * d;
      matched[t] = true;
    }
    for (std::size_t t = 0; t < n; ++t) {
      if (matched[t]) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (double e : estimates) nearest = std::min(nearest, std::abs(e - truth[t]) * to_deg);
      cost += nearest * nearest;
    }
    best = std::min(best, cost);
  } while (std::next_permutation(order.begin(), order.end()));
  return std::sqrt(best / static_cast<double>(n));
}

void write_spectrum_csv(const AngleEstimate& est, std::ostream& os) {
  os << "angle_deg,pseudo_spectrum_db\n";
  os << std::setprecision(10);
  for (std::size_t i = 0; i < est.grid.size(); ++i) {
    os << est.grid[i] * 180.0 / kPi << ',' << 10.0 * std::log10(est.spectrum(static_cast<Eigen::Index>(i))) << '\n';
  }
}

}  // namespace isac
