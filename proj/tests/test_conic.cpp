// SPDX-License-Identifier: Apache-2.0
#include "isac/conic.hpp"
#include "isac/linalg.hpp"
#include "isac/scenario.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

using namespace isac;
using namespace isac::conic;

namespace {

CMat random_cmat(RandomStream& rng, int r, int c) {
  CMat m(r, c);
  for (int i = 0; i < m.size(); ++i) m(i) = rng.complex_normal();
  return m;
}

CVec random_cvec(RandomStream& rng, int n) { return random_cmat(rng, n, 1).col(0); }

}  // namespace

using fixture::min_eig_problem;
using fixture::random_subproblem;

TEST_CASE("unconstrained concave quadratic completes the square") {
  RandomStream rng(7, "conic-unc");
  const CVec a = random_cvec(rng, 5);
  ConicProblem p;
  p.add_vector("w", 5);
  p.objective.quad = -CMat::Identity(5, 5);
  p.objective.lin = 2.0 * a;
  const auto sol = solve(p);
  CHECK(sol.status == Status::Optimal);
  CHECK((sol.vector(p, "w") - a).norm() < 1e-9);
  CHECK(sol.objective == doctest::Approx(a.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("min-eigenvalue SDP matches the eigendecomposition") {
  RandomStream rng(11, "conic-mineig");
  for (int trial = 0; trial < 10; ++trial) {
    const CMat g = random_cmat(rng, 6, 6);
    const CMat c = 0.5 * (g + g.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(c);
    const double lmin = es.eigenvalues()(0);
    const auto sol = solve(min_eig_problem(c));
    REQUIRE(sol.status == Status::Optimal);
    CHECK(std::abs(sol.objective + lmin) <= 1e-6 * std::max(1.0, std::abs(lmin)));
    const CVec v = es.eigenvectors().col(0);
    CHECK((sol.values.x - v * v.adjoint()).norm() < 1e-3);
  }
}

TEST_CASE("kkt residuals") {
  RandomStream rng(12, "conic-kkt");
  const CMat g = random_cmat(rng, 5, 5);
  const CMat c = 0.5 * (g + g.adjoint());
  const ConicProblem p = min_eig_problem(c);

  SUBCASE("oracle solution of the min-eigenvalue SDP") {
    Eigen::SelfAdjointEigenSolver<CMat> es(c);
    const CVec v = es.eigenvectors().col(0);
    const Point pt{CVec(), v * v.adjoint()};
    const KktResiduals r = kkt_residual(p, pt);
    CHECK(r.max() <= 1e-8);
  }
  SUBCASE("solver's own solution") {
    const auto sol = solve(p, 1e-7, 400);
    REQUIRE(sol.status == Status::Optimal);
    CHECK(sol.kkt.max() <= 1e-7);
    CHECK(kkt_residual(p, sol.values, sol.duals).max() <= 1e-7);
  }
  SUBCASE("infeasible point reports its violation") {
    ConicProblem q;
    q.add_vector("w", 2);
    q.objective.lin = CVec::Ones(2);
    Constraint pw;
    pw.form.quad = CMat::Identity(2, 2);
    pw.bound = 1.0;
    q.constraints.push_back(pw);
    const Point pt{CVec::Constant(2, cd{2.0, 0.0}), CMat()};
    const KktResiduals r = kkt_residual(q, pt);
    CHECK(r.primal == doctest::Approx(7.0));
  }
}

TEST_CASE("random subproblems agree with the projected-gradient oracle") {
  RandomStream rng(2024, "conic-random");
  for (int trial = 0; trial < 20; ++trial) {
    const ConicProblem p = random_subproblem(rng, 6, 2);
    const auto sol = solve(p);
    REQUIRE(sol.status == Status::Optimal);
    const auto ref = oracle::projected_gradient(p, 100000);
    CHECK(ref.max_violation < 1e-6);
    CHECK(std::abs(sol.objective - ref.objective) <= 1e-4 * std::max(1.0, std::abs(ref.objective)));
    CHECK(linalg::min_eig(sol.values.x) >= -1e-7 * sol.values.x.trace().real());
    for (const auto& c : p.constraints) CHECK(violation(c, sol.values) <= 1e-9);
  }
}

TEST_CASE("properties: determinism, weak duality, unitary invariance") {
  RandomStream rng(99, "conic-props");
  for (int trial = 0; trial < 5; ++trial) {
    const ConicProblem p = random_subproblem(rng, 5, 2);
    const auto a = solve(p);
    const auto b = solve(p);
    REQUIRE(a.status == Status::Optimal);
    CHECK(std::abs(a.objective - b.objective) <= 1e-9 * std::max(1.0, std::abs(a.objective)));
    CHECK(dual_bound(p, a.duals) >= a.objective - 1e-7 * std::max(1.0, std::abs(a.objective)));

    // Rotate the stacked vector coordinates: w = Q w'.
    const CMat q = random_cmat(rng, p.vec_dim(), p.vec_dim()).householderQr().householderQ();
    ConicProblem r = p;
    r.vec_vars = {{"z", p.vec_dim()}};
    auto rotate = [&](QuadForm& f) {
      if (f.quad.size()) f.quad = q.adjoint() * f.quad * q;
      if (f.lin.size()) f.lin = q.adjoint() * f.lin;
    };
    rotate(r.objective);
    for (auto& c : r.constraints) rotate(c.form);
    const auto rs = solve(r);
    REQUIRE(rs.status == Status::Optimal);
    CHECK(std::abs(rs.objective - a.objective) <= 1e-6 * std::max(1.0, std::abs(a.objective)));
  }
}

TEST_CASE("phase one detects infeasibility and recovers from infeasible warm starts") {
  ConicProblem p;
  p.add_vector("w", 2);
  p.objective.lin = CVec::Ones(2);
  Constraint pw;
  pw.form.quad = CMat::Identity(2, 2);
  pw.bound = 1.0;
  p.constraints.push_back(pw);
  Constraint lo;
  lo.form.lin = CVec::Constant(2, cd{1.0, 0.0});
  lo.sense = Sense::GreaterEqual;
  lo.bound = 5.0;
  p.constraints.push_back(lo);
  CHECK(solve(p).status == Status::Infeasible);

  p.constraints.pop_back();
  SolverOptions o;
  o.warm_start = Point{CVec::Constant(2, cd{3.0, 3.0}), CMat()};
  const auto sol = solve(p, o);
  CHECK(sol.status == Status::Optimal);
  CHECK(sol.phase1_used);
  // max Re(1^T w) on the unit ball: w = (1,1)/sqrt(2).
  CHECK(sol.objective == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("certification rejects wrong curvature") {
  ConicProblem p;
  p.add_vector("w", 2);
  p.objective.quad = CMat::Identity(2, 2);
  CHECK_THROWS_AS(p.certify(), std::domain_error);
  p.objective.quad = -CMat::Identity(2, 2);
  Constraint c;
  c.form.quad = -CMat::Identity(2, 2);
  c.bound = 1.0;
  c.label = "bad";
  p.constraints.push_back(c);
  CHECK_THROWS_WITH_AS(p.certify(), "bad: not convex", std::domain_error);
}

TEST_CASE("problem dump lists every block") {
  RandomStream rng(5, "dump");
  const ConicProblem p = random_subproblem(rng, 3, 2);
  std::ostringstream os;
  write_problem(p, os);
  const std::string s = os.str();
  CHECK(s.find("vector w0 3") != std::string::npos);
  CHECK(s.find("psd R 3") != std::string::npos);
  CHECK(s.find("constraint power <= 1") != std::string::npos);
}
