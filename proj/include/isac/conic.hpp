// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isac/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

/// Interior-point solver for the convex beamforming subproblems:
/// maximize a concave quadratic in stacked complex vector variables w plus a
/// linear-trace term in one Hermitian PSD matrix X, subject to convex
/// quadratic / linear-trace constraints.
namespace isac::conic {

enum class Sense { LessEqual, GreaterEqual, Equal };
enum class Status { Optimal, MaxIter, Infeasible };

const char* to_string(Status s);

struct VectorVar {
  std::string name;
  int dim = 0;
};

struct PsdVar {
  std::string name;
  int side = 0;
};

/// value(w, X) = w^H quad w + Re(lin^H w) + Re Tr(trace X) + constant.
/// Empty matrices/vectors stand for zero.
struct QuadForm {
  CMat quad;
  CVec lin;
  CMat trace;
  double constant = 0.0;
};

struct Constraint {
  QuadForm form;
  Sense sense = Sense::LessEqual;
  double bound = 0.0;
  std::string label;
};

/// Primal values: stacked vector variables and the PSD variable (empty if absent).
struct Point {
  CVec w;
  CMat x;
};

struct ConicProblem {
  std::vector<VectorVar> vec_vars;
  std::optional<PsdVar> psd_var;
  QuadForm objective;  // maximized
  std::vector<Constraint> constraints;

  int vec_dim() const;
  int psd_side() const { return psd_var ? psd_var->side : 0; }
  /// Offset of a vector variable inside the stacked vector.
  int offset_of(const std::string& name) const;
  int dim_of(const std::string& name) const;

  /// Adds a named vector variable and returns its offset.
  int add_vector(const std::string& name, int dim);

  /// Verifies the curvature structure: objective concave, <= rows convex,
  /// >= rows concave, = rows affine, trace matrices Hermitian. Throws
  /// std::domain_error naming the first offending item.
  void certify(double tol = 1e-9) const;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double max() const;
};

struct ConicSolution {
  Status status = Status::MaxIter;
  Point values;
  double objective = 0.0;
  /// One multiplier per constraint: >= 0 for inequalities, free for equalities.
  std::vector<double> duals;
  CMat psd_dual;
  KktResiduals kkt;
  int iterations = 0;
  bool phase1_used = false;

  CVec vector(const ConicProblem& p, const std::string& name) const;
};

struct SolverOptions {
  double tol = 1e-7;
  int max_iter = 400;
  double newton_tol = 1e-9;
  double mu = 10.0;
  std::optional<Point> warm_start;
};

ConicSolution solve(const ConicProblem& problem, const SolverOptions& options = {});
ConicSolution solve(const ConicProblem& problem, double tol, int max_iter);

double evaluate(const QuadForm& form, const Point& point);
double objective_value(const ConicProblem& problem, const Point& point);
/// Signed violation of one constraint (positive means violated).
double violation(const Constraint& c, const Point& point);

/// Residuals for a candidate with given multipliers. The PSD multiplier is
/// recovered from stationarity in X.
KktResiduals kkt_residual(const ConicProblem& problem, const Point& point, const std::vector<double>& duals);
/// Residuals for a bare candidate; multipliers are fitted by non-negative
/// least squares on the stationarity and complementarity equations.
KktResiduals kkt_residual(const ConicProblem& problem, const Point& point);
std::vector<double> estimate_duals(const ConicProblem& problem, const Point& point);

/// PSD multiplier implied by stationarity in X for the given scalar multipliers.
CMat implied_psd_dual(const ConicProblem& problem, const std::vector<double>& duals);

/// Lagrange dual function value (supremum of the Lagrangian over the primal
/// variables); +inf when the multipliers are dual infeasible.
double dual_bound(const ConicProblem& problem, const std::vector<double>& duals);

/// Text dump of all problem data, for cross-solver debugging.
void write_problem(const ConicProblem& problem, std::ostream& os);

}  // namespace isac::conic
