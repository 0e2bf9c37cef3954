// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include <string>

namespace fixture {

using namespace isac;
using namespace isac::conic;

CMat random_cmat(RandomStream& rng, int r, int c) {
  CMat m(r, c);
  for (int i = 0; i < m.size(); ++i) m(i) = rng.complex_normal();
  return m;
}

namespace {

CVec random_cvec(RandomStream& rng, int n) { return random_cmat(rng, n, 1).col(0); }

}  // namespace

ConicProblem random_subproblem(RandomStream& rng, int m, int k) {
  ConicProblem p;
  const int n = m * k;
  for (int i = 0; i < k; ++i) p.add_vector("w" + std::to_string(i), m);
  p.psd_var = PsdVar{"R", m};
  CMat hu = random_cmat(rng, m, k);
  CMat b = 0.3 * hu * hu.adjoint();
  p.objective.quad = CMat::Zero(n, n);
  for (int i = 0; i < k; ++i) p.objective.quad.block(i * m, i * m, m, m) = -b;
  p.objective.lin = random_cvec(rng, n);
  p.objective.trace = -b;
  p.objective.constant = 1.0;

  const CVec he = random_cvec(rng, m);
  const CMat e = he * he.adjoint();
  for (int i = 0; i < k; ++i) {
    Constraint c;
    c.form.quad = CMat::Zero(n, n);
    c.form.quad.block(i * m, i * m, m, m) = 10.0 * e;
    c.form.trace = -e;
    c.bound = 0.05;
    c.label = "leak" + std::to_string(i);
    p.constraints.push_back(c);
  }
  const CVec g = random_cvec(rng, m);
  const CMat a = g * g.adjoint();
  Constraint sense;
  sense.form.lin = CVec::Zero(n);
  CVec w0 = random_cvec(rng, n) * 0.1;
  for (int i = 0; i < k; ++i) sense.form.lin.segment(i * m, m) = 2.0 * a * w0.segment(i * m, m);
  sense.form.trace = a;
  sense.sense = Sense::GreaterEqual;
  sense.bound = 0.5;
  sense.label = "sense";
  p.constraints.push_back(sense);
  Constraint pw;
  pw.form.quad = CMat::Identity(n, n);
  pw.form.trace = CMat::Identity(m, m);
  pw.bound = 1.0;
  pw.label = "power";
  p.constraints.push_back(pw);
  return p;
}

ConicProblem min_eig_problem(const CMat& c) {
  ConicProblem p;
  p.psd_var = PsdVar{"X", static_cast<int>(c.rows())};
  p.objective.trace = -c;
  Constraint tr;
  tr.form.trace = CMat::Identity(c.rows(), c.cols());
  tr.sense = Sense::Equal;
  tr.bound = 1.0;
  p.constraints.push_back(tr);
  return p;
}

}  // namespace fixture
