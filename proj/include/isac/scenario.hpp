// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isac/types.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace isac {

double db_to_linear(double db);
double linear_to_db(double lin);
double dbm_to_watts(double dbm);
double watts_to_dbm(double w);

/// Thrown when a scenario cannot be parsed or fails validation. The message
/// names the offending field.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct Placement {
  double angle = 0.0;     // radians
  double distance = 1.0;  // meters
};

struct Scatterer {
  double angle = 0.0;  // radians
  cd gain{0.0, 0.0};   // complex reflection coefficient
};

/// Every physical and algorithmic parameter of one simulation instance.
/// Power-like quantities are linear (watts / ratios); the scenario file
/// carries them in dB/dBm.
struct ScenarioConfig {
  int m_t = 64;
  int m_r = 64;
  int k_users = 4;
  int t_aes = 2;
  int n_s = 4;
  int n_rf = 8;

  double power_budget = 1.0;
  double noise_comm = 1e-11;
  double noise_eav = 1e-11;
  double noise_sense = 1e-11;
  double gamma_e = 0.1;
  double gamma_r = 31.622776601683793;
  int frame_len_l = 64;

  double ref_gain_rho = 0.01;
  double pathloss_exp = 3.0;

  std::vector<Placement> user_geometry;
  std::vector<Placement> ae_geometry;
  std::vector<Scatterer> clutter;
  std::vector<double> rcs;  // linear, one per AE

  int nlos_paths = 3;
  double nlos_power = 0.1;

  std::uint64_t seed = 1;
};

/// Throws ScenarioError if any invariant is violated.
void validate(const ScenarioConfig& cfg);

/// Full-size configuration (64 antennas, 4 users, 2 AEs, 4 sensing beams).
ScenarioConfig full_profile();
/// Desk-size configuration (8 antennas, 2 users, 2 AEs, 2 sensing beams).
ScenarioConfig desk_profile();

/// Default clutter: three scatterers at -75, 0 and 75 degrees, 10 dB below
/// the round-trip gain of the first AE.
std::vector<Scatterer> default_clutter(const ScenarioConfig& cfg);

ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig parse_scenario(std::string_view text, const ScenarioConfig& defaults);
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig load_scenario(const std::filesystem::path& path, const ScenarioConfig& defaults);

/// Serializes back to the scenario schema (dB/dBm units).
std::string to_scenario_text(const ScenarioConfig& cfg);

/// Deterministic pseudo-random stream. Draws depend only on (seed, label),
/// and the transforms are written out so results do not depend on the
/// standard library's distribution implementations.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
  cd complex_normal(double variance = 1.0);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

RandomStream make_rng(std::uint64_t seed, std::string_view stream);

}  // namespace isac
