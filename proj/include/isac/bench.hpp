// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isac/channel.hpp"
#include "isac/estimators.hpp"
#include "isac/fp_digital.hpp"
#include "isac/had.hpp"
#include "isac/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

/// Monte Carlo harness: baselines, parameter sweeps and the sensing-beam
/// count experiment.
namespace isac {

enum class Method { Digital, Had, DecomposedHad, CommOnly, PerfectCsi };

std::string_view method_name(Method m);
/// Throws std::invalid_argument for unknown names.
Method parse_method(std::string_view name);
std::vector<Method> all_methods();

enum class SweepParam { PowerDbm, KUsers, TAes, NRf, GammaRDb, InjectedRmseDeg };

std::string_view param_name(SweepParam p);
SweepParam parse_param(std::string_view name);

struct SweepSpec {
  ScenarioConfig base = desk_profile();
  SweepParam param = SweepParam::PowerDbm;
  std::vector<double> values;
  int trials = 50;
  std::vector<Method> methods;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// JSON document with keys profile ("desk" | "full"), scenario (inline
/// scenario object or a path string), parameter, values, trials, methods, seed.
/// Throws ScenarioError naming the offending key.
/// `default_profile` applies when the document has no profile key.
SweepSpec parse_sweep_spec(std::string_view text, const std::filesystem::path& base_dir = {},
                           std::string_view default_profile = "desk");
SweepSpec load_sweep_spec(const std::filesystem::path& path, std::string_view default_profile = "desk");
/// Throws std::invalid_argument if the spec cannot run.
void validate(const SweepSpec& spec);

/// Scenario with one sweep value applied. User and AE geometries are
/// regenerated when their counts change; the injected-error axis leaves the
/// scenario untouched.
ScenarioConfig apply_sweep_value(const ScenarioConfig& base, SweepParam p, double value);

/// Seed of trial `trial` in a sweep seeded with `seed`; independent of the
/// swept value, so every cell sees the same channel draws.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

/// Ground truth and design channels of one trial.
struct TrialInput {
  ScenarioConfig cfg;
  ChannelSet truth;
  ChannelSet design;                   // AE channels rebuilt from the estimated angles
  std::vector<double> estimated_angles;  // aligned with truth.ae_angles
  double angle_rmse_deg = 0.0;
  bool estimation_shortfall = false;
  std::uint64_t seed = 0;
};

struct PipelineOptions {
  /// When set, perturb the true angles by zero-mean Gaussian errors of this
  /// RMSE (degrees) instead of running the sensing stage.
  std::optional<double> injected_rmse_deg;
  MusicOptions music;
};

/// Draws channels, probes the AEs with one beam per prior angle, cancels the
/// known clutter return, runs MUSIC and rebuilds the AE channels at the true
/// distances.
TrialInput prepare_trial(const ScenarioConfig& cfg, std::uint64_t seed, const PipelineOptions& opts = {});

struct ResultRecord {
  std::string method;
  double value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double secrecy_rate = 0.0;  // bits/s/Hz, true channels
  double sum_rate = 0.0;      // bits/s/Hz, true channels
  std::vector<double> ae_sinr_db;
  std::vector<double> scnr_db;
  double power = 0.0;
  double angle_rmse_deg = 0.0;
  int iterations = 0;
  double wall_time = 0.0;  // seconds, kept out of the deterministic CSV
  std::string status;
};

struct MethodOptions {
  DigitalOptions digital;
  HybridOptions hybrid;
};

/// Designs on trial.design (perfect_csi designs on trial.truth) and scores
/// against trial.truth. Solver exceptions are caught and reported in status.
/// When `trace` is given, the solver's iteration trace is written to it as CSV.
ResultRecord run_method(Method m, const TrialInput& trial, const MethodOptions& opts = {},
                        std::ostream* trace = nullptr);

struct CellSummary {
  std::string method;
  double value = 0.0;
  int n = 0;
  int n_optimal = 0;
  double secrecy_mean = 0.0;
  double secrecy_se = 0.0;
  double sum_rate_mean = 0.0;
  double sum_rate_se = 0.0;
  double angle_rmse_mean = 0.0;
  double iterations_mean = 0.0;
};

struct SweepResult {
  std::vector<ResultRecord> records;  // ordered by (method, value, trial)
  std::vector<CellSummary> summary;   // ordered by (method, value)
};

SweepResult run_sweep(const SweepSpec& spec, const MethodOptions& opts = {});
/// Writes results.csv, summary.csv, summary.json and timing.csv into `dir`.
SweepResult run_sweep(const SweepSpec& spec, const std::filesystem::path& dir, const MethodOptions& opts = {});

std::vector<CellSummary> summarize(const std::vector<ResultRecord>& records);

/// Columns: method, value, trial, seed, status, secrecy_rate, sum_rate, power,
/// angle_rmse_deg, iterations, max_ae_sinr_db, min_scnr_db, ae_sinr_db, scnr_db.
/// The last two hold one value per AE separated by ';'.
void write_results_csv(const std::vector<ResultRecord>& records, std::ostream& os);
/// Columns: method, value, trial, wall_time_s.
void write_timing_csv(const std::vector<ResultRecord>& records, std::ostream& os);
/// Columns: method, value, n, n_optimal, secrecy_mean, secrecy_se, sum_rate_mean,
/// sum_rate_se, angle_rmse_mean, iterations_mean.
void write_summary_csv(const std::vector<CellSummary>& cells, std::ostream& os);
/// Array of objects with the same keys as the summary CSV.
void write_summary_json(const std::vector<CellSummary>& cells, std::ostream& os);

struct BeamsRow {
  int t_aes = 0;
  int bound = 0;          // floor(sqrt(2T + 1))
  int empirical_max = 0;  // largest post-reduction rank over the trials
  double empirical_mean = 0.0;
  int trials = 0;
  int failures = 0;  // runs whose rank reduction reported a failure
};

/// For T = 1..t_max, designs `trials` random instances and records the rank
/// of the reduced sensing covariance (eigenvalues above 1e-6 of the trace).
std::vector<BeamsRow> required_beams_experiment(int t_max, int trials, const ScenarioConfig& base,
                                                std::uint64_t seed = 1);
/// Columns: t_aes, bound, empirical_max, empirical_mean, trials, failures.
void write_beams_csv(const std::vector<BeamsRow>& rows, std::ostream& os);

struct SensingRow {
  double target_scnr_db = 0.0;
  double achieved_scnr_db = 0.0;  // mean over trials of the worst AE's SCNR
  double rmse_deg = 0.0;          // root of the mean squared per-trial RMSE
  int trials = 0;
  int shortfalls = 0;
};

/// Designs each trial once, then for every target SCNR rescales the sensing
/// noise so the worst AE sits at the target and estimates the angles with MUSIC
/// from a fresh echo batch.
std::vector<SensingRow> sensing_accuracy_experiment(const std::vector<double>& scnr_db, int trials,
                                                    const ScenarioConfig& base, std::uint64_t seed = 1);
/// Columns: target_scnr_db, achieved_scnr_db, rmse_deg, trials, shortfalls.
void write_sensing_csv(const std::vector<SensingRow>& rows, std::ostream& os);

}  // namespace isac
