// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isac/channel.hpp"
#include "isac/conic.hpp"
#include "isac/fp_digital.hpp"
#include "isac/metrics.hpp"
#include "isac/scenario.hpp"
#include "isac/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

/// Hybrid analog-digital beamforming: alternating digital conic steps and
/// penalized manifold ascent over the unit-modulus analog matrix.
namespace isac {

struct HybridOptions {
  int max_outer = 30;
  double rel_tol = 1e-4;
  double solver_tol = 1e-7;
  int solver_max_iter = 400;
  bool enforce_ae = true;
  bool enforce_scnr = true;

  int inner_max_iter = 500;
  double inner_rel_tol = 1e-6;
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  int max_backtracks = 30;
  double initial_step = 1.0;
  /// Barzilai-Borwein trial steps after the first inner iteration.
  bool bb_step = true;
  /// The relative-change stop also requires ||grad|| <= stationarity_tol (1 + |G|).
  double stationarity_tol = 1e-3;

  double lambda_cap = 1e8;  // relative to the initial weight
  double lambda_floor = 1e-3;

  int decomposition_iters = 20;
  double decomposition_tol = 1e-6;

  /// Overrides the decomposition-based analog initialization.
  std::optional<CMat> f_a_init;
  /// Re-solve the digital part once more after the last analog update so the
  /// returned design satisfies the constraints at the surrogate level.
  bool polish = true;
  /// Push each digital step further while the true constraints hold.
  bool extrapolate = true;
};

struct HybridState {
  CMat f_a;  // M_t x N_rf, unit modulus
  CMat f_c;  // N_rf x K
  CMat f_s;  // N_rf x N_s
  CMat u_a;  // M_r x N_rf
  CMat u_d;  // N_rf x T
  RVec nu;
  CVec beta;
  std::vector<double> lambda;
  int iteration = 0;

  CMat w() const { return f_a * f_c; }
  CMat v() const { return f_a * f_s; }
  /// F_a F_s F_s^H F_a^H (empty when N_s = 0).
  CMat r_v() const;
  /// Normalized columns of U_a U_d.
  ReceiveBank receive_bank() const;
};

/// max Re(a0^H f) - f^H A0 f  s.t.  f^H B_m f <= b_m, |f_i| = 1, with f = vec(F_a).
struct AnalogProblem {
  CVec a0;
  CMat a_mat;
  std::vector<CMat> b_mats;
  std::vector<double> b_vals;
  std::vector<double> lambda;
  std::vector<std::string> labels;
  /// r_HAD = constant + Re(a0^H f) - f^H A0 f.
  double constant = 0.0;
  int m_t = 0;
  int n_rf = 0;

  int n_constraints() const { return static_cast<int>(b_mats.size()); }
  /// f^H B_m f - b_m.
  double constraint_gap(int m, const CVec& f) const;
  /// Re(a0^H f) - f^H A0 f.
  double objective(const CVec& f) const;
};

struct HybridTraceRow {
  int iteration = 0;
  double r_had = 0.0;
  double penalized = 0.0;      // G at the end of the analog step
  double max_violation = 0.0;  // relative
  double modulus_error = 0.0;  // max | |F_a(i,j)| - 1 |
  double lambda_max = 0.0;
  double sum_rate = 0.0;  // nats
  double secrecy_rate = 0.0;  // bits
};

struct HybridDecomposition {
  CMat f_a;
  CMat f_c;
  CMat f_s;
  double residual = 0.0;  // ||[W V] - F_a [F_c F_s]||_F before power rescaling
  std::vector<double> residual_trace;
};

struct ReceiveDecomposition {
  CMat u_a;
  CMat u_d;
  ReceiveBank bank;  // normalized columns of U_a U_d
};

struct ManifoldResult {
  CVec f;
  double value = 0.0;
  int iterations = 0;
  bool backtrack_limit = false;
  std::vector<double> values;  // G after each accepted step, starting with G(f0)
};

struct HybridSolution {
  HybridState state;
  BeamformerPair beams;  // (F_a F_c, F_a F_s)
  DesignMetrics metrics;  // SCNR measured with the hybrid receiver
  std::vector<HybridTraceRow> trace;
  std::vector<std::vector<double>> lambda_trace;  // weights in force at each outer iteration
  HybridDecomposition init;
  double max_violation = 0.0;
  bool converged = false;
  bool feasible = false;
  std::string status;  // optimal | max_iter | infeasible_init | solver_failed
};

/// (nu, beta) with effective beams W = F_a F_c, V = F_a F_s.
void update_aux_hybrid(HybridState& s, const ChannelSet& ch, double noise_c);

/// Transformed objective at the current auxiliaries.
double r_had(const HybridState& s, const ChannelSet& ch, double noise_c);

/// Convex surrogate in (F_c, F_s) at fixed F_a, receiver and auxiliaries,
/// linearized at the state's own digital matrices.
conic::ConicProblem build_digital_subproblem(const HybridState& s, const ChannelSet& ch, const ScenarioConfig& cfg,
                                             const HybridOptions& opts = {});

/// Solves the surrogate and writes (F_c, F_s) back into the state.
conic::ConicSolution solve_digital_subproblem(HybridState& s, const ChannelSet& ch, const ScenarioConfig& cfg,
                                              const HybridOptions& opts = {});

/// Vectorized analog problem with the state's penalty weights.
AnalogProblem build_analog_problem(const HybridState& s, const ChannelSet& ch, const ScenarioConfig& cfg,
                                   const HybridOptions& opts = {});

/// G(f) = Re(a0^H f) - f^H A0 f - sum_m lambda_m ([f^H B_m f - b_m]^+)^2.
double penalty_value(const AnalogProblem& p, const CVec& f);
/// Gradient in the convention d/de G(f + e d) = Re(grad^H d).
CVec euclidean_grad(const AnalogProblem& p, const CVec& f);
/// Projection of egrad onto the tangent space of the unit-modulus manifold at f.
CVec riemannian_grad(const CVec& f, const CVec& egrad);
/// Elementwise normalization of f + step; a vanishing entry keeps its previous phase.
CVec retract(const CVec& f, const CVec& step);

ManifoldResult manifold_ascent(const AnalogProblem& p, const CVec& f0, const HybridOptions& opts = {});

/// Initial weights: |objective| / Phi_m where violated, else floor * |objective| / b_m^2.
std::vector<double> initial_penalty_weights(const AnalogProblem& p, const CVec& f0, double floor);

/// Alternating least squares / phase projection fit of target ~ F_a F_d.
/// Returns the factors and the residual after each alternation.
struct PhaseFactorization {
  CMat f_a;
  CMat f_d;
  std::vector<double> residual_trace;
};
PhaseFactorization phase_factorize(const CMat& target, int n_rf, int max_iter, double tol);

/// Hybrid approximation of a fully digital design, rescaled to the power budget.
HybridDecomposition decompose_fully_digital(const CMat& w, const CMat& v, int n_rf, const ScenarioConfig& cfg,
                                            const HybridOptions& opts = {});
HybridDecomposition init_hybrid(const CMat& w0, const CMat& v0, const ScenarioConfig& cfg,
                                const HybridOptions& opts = {});
ReceiveDecomposition decompose_receive(const CMat& u_digital, int n_rf, const HybridOptions& opts = {});

/// Metrics of a hybrid design; SCNR uses the given receive bank.
DesignMetrics evaluate_hybrid(const ChannelSet& ch, const HybridState& s, const ScenarioConfig& cfg);

HybridSolution run_hybrid(const ChannelSet& ch, const ScenarioConfig& cfg, const HybridOptions& opts = {});

/// Columns: iteration, r_had, penalized, max_violation, modulus_error, lambda_max, sum_rate, secrecy_rate.
void write_hybrid_trace_csv(const std::vector<HybridTraceRow>& rows, std::ostream& os);

}  // namespace isac
