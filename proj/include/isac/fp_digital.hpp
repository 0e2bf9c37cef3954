// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isac/channel.hpp"
#include "isac/conic.hpp"
#include "isac/metrics.hpp"
#include "isac/scenario.hpp"
#include "isac/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

/// Fractional-programming alternating optimization of the fully digital
/// secure ISAC beamformer, with sensing-covariance rank reduction.
namespace isac {

struct DigitalOptions {
  int max_iter = 50;
  double rel_tol = 1e-4;
  double solver_tol = 1e-7;
  int solver_max_iter = 400;
  /// Enforce the AE SINR ceiling (dropped by the communication-only baseline).
  bool enforce_ae = true;
  /// Enforce the sensing SCNR floor (dropped by the perfect-CSI baseline).
  bool enforce_scnr = true;
  bool reduce_rank = true;
  /// Over-relaxed steps along each subproblem update, kept only when the true
  /// constraints hold and the true sum rate improves.
  bool extrapolate = true;
  /// After each subproblem, move sensing power that the users do not see
  /// into a common up-scaling of W.
  bool reallocate = true;
};

struct DigitalState {
  CMat w;    // M_t x K
  CMat r_v;  // M_t x M_t, empty when N_s = 0
  ReceiveBank u_bank;
  RVec nu;
  CVec beta;
  int iteration = 0;
  std::vector<double> objective_trace;  // sum rate in nats after each outer iteration
};

struct TraceRow {
  int iteration = 0;
  double objective = 0.0;  // nats
  double secrecy_rate = 0.0;  // bits
  double max_ae_sinr_db = 0.0;
  double min_scnr_db = 0.0;
  double power_used = 0.0;
};

struct DesignMetrics {
  double sum_rate = 0.0;      // bits
  double secrecy_rate = 0.0;  // bits
  std::vector<double> ae_sinr;  // per AE, worst stream, linear
  std::vector<double> scnr;     // per AE, linear, optimal combiner
  double power = 0.0;
};

struct InitResult {
  CMat w;
  CMat v;
  double mu = 0.0;
  bool feasible = false;
  double max_violation = 0.0;  // relative
};

struct ExtractedBeams {
  CMat v;
  int rank = 0;
  bool lossy = false;
  double error = 0.0;  // ||V V^H - R||_F / Tr(R)
};

struct RankReduction {
  CMat r;
  int rank_before = 0;
  int rank_after = 0;
  bool ok = true;
};

struct DigitalSolution {
  DigitalState state;
  CMat v;
  BeamformerPair beams;  // (W, V)
  DesignMetrics metrics;
  std::vector<TraceRow> trace;
  InitResult init;
  RankReduction reduction;
  ExtractedBeams extraction;
  bool converged = false;
  std::string status;  // optimal | max_iter | infeasible_init | solver_infeasible
};

/// Relative violation of the design constraints for a (W, R_v) candidate:
/// max over AE SINR / gamma_e - 1, 1 - SCNR / gamma_r, power / P - 1.
double constraint_violation(const ChannelSet& ch, const CMat& w, const CMat& r_v, const ScenarioConfig& cfg,
                            const DigitalOptions& opts = {});

DesignMetrics evaluate_design(const ChannelSet& ch, const CMat& w, const CMat& r_v, const ScenarioConfig& cfg);

/// Weighted initial point sweeping the power split in steps of 0.05.
InitResult init_beamformers(const ChannelSet& ch, const ScenarioConfig& cfg, const DigitalOptions& opts = {});

RVec update_nu(const DigitalState& s, const ChannelSet& ch, double noise_c);
/// Uses s.nu.
CVec update_beta(const DigitalState& s, const ChannelSet& ch, double noise_c);

/// Transformed sum-rate objective in nats.
double r_sum(const RVec& nu, const CVec& beta, const CMat& w, const CMat& r_v, const ChannelSet& ch, double noise_c);
/// Sum over users of ln(1 + SINR).
double sum_rate_nats(const ChannelSet& ch, const CMat& w, const CMat& r_v, double noise_c);

/// Receive-side SCNR matrices H^H u u^H H for the AE and the clutter.
struct ScnrMatrices {
  CMat a_target;
  CMat a_clutter;
};
ScnrMatrices scnr_matrices(const ChannelSet& ch, const CVec& u, int t);

/// Convex subproblem in (w_0..w_{K-1}, R) at fixed (nu, beta, U), with the
/// SCNR quadratic linearized at s.w.
conic::ConicProblem build_subproblem(const DigitalState& s, const ChannelSet& ch, const ScenarioConfig& cfg,
                                     const DigitalOptions& opts = {});

/// Maximizes a common scale c >= 1 of W over (c, R_v) under the AE, power and
/// (conservatively linearized) SCNR constraints, without raising any user's
/// interference from R_v. Returns false and leaves the inputs untouched when
/// no improvement is found.
bool reallocate_power(const ChannelSet& ch, const ScenarioConfig& cfg, const DigitalOptions& opts,
                      const ReceiveBank& u_bank, CMat& w, CMat& r_v);

DigitalSolution run_digital(const ChannelSet& ch, const ScenarioConfig& cfg, const DigitalOptions& opts = {});

/// floor(sqrt(2T + 1)).
int worst_case_bound(int t_aes);

/// Purification of R_v: keeps every AE jamming power, SCNR trace and the total
/// trace fixed without increasing the users' weighted interference.
RankReduction rank_reduce(const CMat& r_v, const ChannelSet& ch, const ScenarioConfig& cfg, const DigitalState& s,
                          const DigitalOptions& opts = {});

/// Top-n_s eigenbeams of R_v, zero-padded when the rank is lower.
ExtractedBeams extract_beams(const CMat& r_v, int n_s);

void write_trace_csv(const std::vector<TraceRow>& rows, std::ostream& os);

}  // namespace isac
