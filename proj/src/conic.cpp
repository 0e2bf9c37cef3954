// SPDX-License-Identifier: Apache-2.0
#include "isac/conic.hpp"

#include "isac/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace isac::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2 = std::sqrt(2.0);

// Orthonormal real coordinates of an n x n Hermitian matrix: n diagonal
// entries followed by (re, im) pairs of the strict upper triangle.
struct HermBasis {
  int n = 0;
  std::vector<std::pair<int, int>> pairs;

  explicit HermBasis(int side) : n(side) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < j; ++i) pairs.emplace_back(i, j);
  }
  int dim() const { return n * n; }

  RVec svec(const CMat& a) const {
    RVec v(dim());
    for (int i = 0; i < n; ++i) v(i) = a(i, i).real();
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const cd z = 0.5 * (a(pairs[p].first, pairs[p].second) + std::conj(a(pairs[p].second, pairs[p].first)));
      v(n + 2 * p) = kSqrt2 * z.real();
      v(n + 2 * p + 1) = kSqrt2 * z.imag();
    }
    return v;
  }

  template <class V>
  CMat smat(const V& v) const {
    CMat a = CMat::Zero(n, n);
    for (int i = 0; i < n; ++i) a(i, i) = v(i);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const cd z = cd{v(n + 2 * p), v(n + 2 * p + 1)} / kSqrt2;
      a(pairs[p].first, pairs[p].second) = z;
      a(pairs[p].second, pairs[p].first) = std::conj(z);
    }
    return a;
  }

  // Hessian of -log det at X = S^{-1}: H_ab = Tr(S E_a S E_b).
  RMat logdet_hessian(const CMat& s) const {
    RMat h(dim(), dim());
    CMat t(n, n);
    for (int a = 0; a < dim(); ++a) {
      if (a < n) {
        t.noalias() = s.col(a) * s.col(a).adjoint();
      } else {
        const auto [i, j] = pairs[(a - n) / 2];
        const CMat outer = s.col(i) * s.row(j);
        if ((a - n) % 2 == 0) {
          t = (outer + outer.adjoint()) / kSqrt2;
        } else {
          t = (kJ * outer - kJ * outer.adjoint()) / kSqrt2;
        }
      }
      h.col(a) = svec(t);
    }
    return 0.5 * (h + h.transpose());
  }
};

RMat real_rep(const CMat& q) {
  const Eigen::Index n = q.rows();
  const CMat hq = linalg::herm(q);
  RMat m(2 * n, 2 * n);
  m << hq.real(), -hq.imag(), hq.imag(), hq.real();
  return m;
}

CVec complex_of(const RVec& x) {
  const Eigen::Index n = x.size() / 2;
  CVec w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = cd{x(i), x(n + i)};
  return w;
}

RVec real_of(const CVec& w) {
  RVec x(2 * w.size());
  x << w.real(), w.imag();
  return x;
}

double sign_of(Sense s) { return s == Sense::GreaterEqual ? -1.0 : 1.0; }

// Real-coordinate description of a form: x^T m x + p . z + c with z = [x; xi].
struct RealForm {
  RMat m;  // 2N x 2N, may be empty
  RVec p;
  double c = 0.0;
};

RealForm to_real(const QuadForm& f, int n_vec, const HermBasis& basis) {
  RealForm r;
  if (f.quad.size() > 0) r.m = real_rep(f.quad);
  r.p = RVec::Zero(2 * n_vec + basis.dim());
  if (f.lin.size() > 0) r.p.head(2 * n_vec) = real_of(f.lin);
  if (f.trace.size() > 0) r.p.tail(basis.dim()) = basis.svec(linalg::herm(f.trace));
  r.c = f.constant;
  return r;
}

double max_abs(const RealForm& f) {
  double s = f.p.size() > 0 ? f.p.cwiseAbs().maxCoeff() : 0.0;
  if (f.m.size() > 0) s = std::max(s, f.m.cwiseAbs().maxCoeff());
  return s;
}

// Barrier problem in real coordinates:
//   minimize  x^T m0 x + q . z
//   s.t.      rows_i(z) < 0,  E z = e,  X(z) = smat(xi) + shift * s * I > 0
struct Row {
  RMat m;
  RVec p;
  double c = 0.0;
  double value(const RVec& z, int dx) const {
    double v = p.dot(z) + c;
    if (m.size() > 0) v += z.head(dx).dot(m * z.head(dx));
    return v;
  }
  RVec grad(const RVec& z, int dx) const {
    RVec g = p;
    if (m.size() > 0) g.head(dx) += 2.0 * m * z.head(dx);
    return g;
  }
};

struct Barrier {
  int dx = 0;
  const HermBasis* basis = nullptr;
  bool has_psd = false;
  int s_index = -1;  // phase-1 slack coordinate, or -1
  int d = 0;
  RMat m0;
  RVec q;
  std::vector<Row> rows;
  RMat e_mat;
  RVec e_vec;
  RMat null;  // orthonormal basis of the equality nullspace (empty: none)

  int psd_n() const { return has_psd ? basis->n : 0; }

  CMat psd_at(const RVec& z) const {
    CMat x = basis->smat(z.segment(dx, basis->dim()));
    if (s_index >= 0) x += z(s_index) * CMat::Identity(basis->n, basis->n);
    return x;
  }

  double objective(const RVec& z) const {
    double v = q.dot(z);
    if (m0.size() > 0) v += z.head(dx).dot(m0 * z.head(dx));
    return v;
  }

  // Barrier value at parameter t; +inf outside the domain.
  double value(const RVec& z, double t) const {
    double v = t * objective(z);
    for (const auto& r : rows) {
      const double g = r.value(z, dx);
      if (!(g < 0.0)) return kInf;
      v -= std::log(-g);
    }
    if (has_psd) {
      Eigen::LLT<CMat> llt(psd_at(z));
      if (llt.info() != Eigen::Success) return kInf;
      const auto& l = llt.matrixL();
      double logdet = 0.0;
      for (int i = 0; i < basis->n; ++i) {
        const double di = l(i, i).real();
        if (!(di > 0.0)) return kInf;
        logdet += 2.0 * std::log(di);
      }
      v -= logdet;
    }
    return std::isfinite(v) ? v : kInf;
  }

  void derivatives(const RVec& z, double t, RVec& g, RMat& h) const {
    g = t * q;
    h = RMat::Zero(d, d);
    if (m0.size() > 0) {
      g.head(dx) += 2.0 * t * m0 * z.head(dx);
      h.topLeftCorner(dx, dx) += 2.0 * t * m0;
    }
    for (const auto& r : rows) {
      const double slack = -r.value(z, dx);
      const RVec gr = r.grad(z, dx);
      g += gr / slack;
      h.selfadjointView<Eigen::Lower>().rankUpdate(gr, 1.0 / (slack * slack));
      if (r.m.size() > 0) h.topLeftCorner(dx, dx) += 2.0 * r.m / slack;
    }
    h.triangularView<Eigen::StrictlyUpper>() = h.transpose().triangularView<Eigen::StrictlyUpper>();
    if (has_psd) {
      const int nb = basis->dim();
      const CMat s = psd_at(z).inverse();
      const CMat sh = linalg::herm(s);
      const RVec gs = basis->svec(sh);
      const RMat hl = basis->logdet_hessian(sh);
      g.segment(dx, nb) -= gs;
      h.block(dx, dx, nb, nb) += hl;
      if (s_index >= 0) {
        const RVec id = basis->svec(CMat::Identity(basis->n, basis->n));
        const RVec hid = hl * id;
        g(s_index) -= gs.dot(id);
        h.block(dx, s_index, nb, 1) += hid;
        h.block(s_index, dx, 1, nb) += hid.transpose();
        h(s_index, s_index) += id.dot(hid);
      }
    }
  }

  int barrier_count() const { return static_cast<int>(rows.size()) + psd_n(); }
};

// Newton direction restricted to the nullspace of the equality rows
// (columns of `null`; empty means unrestricted).
bool newton_direction(const RMat& h, const RVec& g, const RMat& null, RVec& dz) {
  const bool reduced = null.size() > 0;
  const RMat hr = reduced ? RMat(null.transpose() * h * null) : h;
  const RVec gr = reduced ? RVec(null.transpose() * g) : g;
  const Eigen::Index d = hr.rows();
  if (d == 0) {
    dz = RVec::Zero(h.rows());
    return true;
  }
  Eigen::LLT<RMat> llt(hr);
  double ridge = 0.0;
  const double base = std::max(hr.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  while (llt.info() != Eigen::Success) {
    ridge = ridge == 0.0 ? 1e-14 * base : ridge * 100.0;
    if (ridge > base) return false;
    llt.compute(hr + ridge * RMat::Identity(d, d));
  }
  const RVec step = -llt.solve(gr);
  dz = reduced ? RVec(null * step) : step;
  return dz.allFinite();
}

struct CenterResult {
  int steps = 0;
  bool ok = true;
  RVec eq_mult;
};

// Newton centering at fixed t. z must be strictly inside the domain and
// satisfy the equality rows.
CenterResult center(const Barrier& b, RVec& z, double t, double newton_tol, int budget) {
  CenterResult res;
  RVec g;
  RMat h;
  RVec dz;
  double phi = b.value(z, t);
  int polish = 0;
  while (res.steps < budget) {
    b.derivatives(z, t, g, h);
    if (!newton_direction(h, g, b.null, dz)) {
      res.ok = false;
      break;
    }
    ++res.steps;
    if (b.e_mat.rows() > 0) {
      // Multipliers of the equality rows: g + H dz + E^T w = 0.
      res.eq_mult = b.e_mat.transpose().completeOrthogonalDecomposition().solve(RVec(-(g + h * dz)));
    }
    const double slope = g.dot(dz);
    if (-slope / 2.0 <= newton_tol && ++polish > 2) break;
    // Self-concordance: a full step is safe once the decrement is below 1/4,
    // and there the barrier value is too flat to compare in floating point.
    if (-slope < 0.0625) {
      const RVec zn = z + dz;
      const double pn = b.value(zn, t);
      if (std::isfinite(pn)) {
        z = zn;
        phi = pn;
        continue;
      }
    }
    double alpha = 1.0;
    double phi_new = b.value(z + alpha * dz, t);
    int tries = 0;
    while ((!std::isfinite(phi_new) || phi_new > phi + 0.01 * alpha * slope) && tries < 60) {
      alpha *= 0.5;
      phi_new = b.value(z + alpha * dz, t);
      ++tries;
    }
    if (!std::isfinite(phi_new) || phi_new >= phi) break;  // no progress at this precision
    z += alpha * dz;
    phi = phi_new;
  }
  return res;
}

struct Prepared {
  int n_vec = 0;
  HermBasis basis{0};
  RealForm objective;
  std::vector<RealForm> forms;  // raw constraint forms (before sign/scale)
  std::vector<double> scale;
  std::vector<int> ineq_index;  // constraint index per barrier row
  std::vector<int> eq_index;
  RMat e_mat;
  RVec e_vec;
};

Prepared prepare(const ConicProblem& p) {
  Prepared pr;
  pr.n_vec = p.vec_dim();
  pr.basis = HermBasis(p.psd_side());
  pr.objective = to_real(p.objective, pr.n_vec, pr.basis);
  const int dcore = 2 * pr.n_vec + pr.basis.dim();
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const auto& c = p.constraints[i];
    RealForm f = to_real(c.form, pr.n_vec, pr.basis);
    double s = std::max(max_abs(f), std::abs(f.c - c.bound));
    if (!(s > 0.0)) s = 1.0;
    pr.forms.push_back(std::move(f));
    pr.scale.push_back(s);
    if (c.sense == Sense::Equal) {
      pr.eq_index.push_back(static_cast<int>(i));
    } else {
      pr.ineq_index.push_back(static_cast<int>(i));
    }
  }
  pr.e_mat = RMat::Zero(static_cast<Eigen::Index>(pr.eq_index.size()), dcore);
  pr.e_vec = RVec::Zero(static_cast<Eigen::Index>(pr.eq_index.size()));
  for (std::size_t r = 0; r < pr.eq_index.size(); ++r) {
    const int i = pr.eq_index[r];
    pr.e_mat.row(static_cast<Eigen::Index>(r)) = pr.forms[i].p.transpose() / pr.scale[i];
    pr.e_vec(static_cast<Eigen::Index>(r)) = (p.constraints[i].bound - pr.forms[i].c) / pr.scale[i];
  }
  return pr;
}

Barrier make_barrier(const ConicProblem& p, const Prepared& pr, bool phase1) {
  Barrier b;
  b.dx = 2 * pr.n_vec;
  b.basis = &pr.basis;
  b.has_psd = p.psd_side() > 0;
  const int dcore = b.dx + pr.basis.dim();
  b.d = dcore + (phase1 ? 1 : 0);
  b.s_index = phase1 ? dcore : -1;
  if (phase1) {
    b.q = RVec::Zero(b.d);
    b.q(dcore) = 1.0;
  } else {
    b.q = -pr.objective.p;
    if (pr.objective.m.size() > 0) b.m0 = -pr.objective.m;
  }
  for (int i : pr.ineq_index) {
    const auto& c = p.constraints[i];
    const double sg = sign_of(c.sense) / pr.scale[i];
    Row r;
    if (pr.forms[i].m.size() > 0) r.m = sg * pr.forms[i].m;
    r.p = RVec::Zero(b.d);
    r.p.head(dcore) = sg * pr.forms[i].p;
    if (phase1) r.p(dcore) = -1.0;
    r.c = sg * (pr.forms[i].c - c.bound);
    b.rows.push_back(std::move(r));
  }
  if (phase1) {
    Row floor;
    floor.p = RVec::Zero(b.d);
    floor.p(dcore) = -1.0;
    floor.c = -1.0;
    b.rows.push_back(std::move(floor));
  }
  b.e_mat = RMat::Zero(pr.e_mat.rows(), b.d);
  b.e_mat.leftCols(dcore) = pr.e_mat;
  b.e_vec = pr.e_vec;
  if (b.e_mat.rows() > 0) {
    Eigen::ColPivHouseholderQR<RMat> qr(b.e_mat.transpose());
    const RMat q = qr.householderQ();
    b.null = q.rightCols(b.d - qr.rank());
  }
  return b;
}

RVec pack(const Prepared& pr, const Point& pt) {
  const int dcore = 2 * pr.n_vec + pr.basis.dim();
  RVec z = RVec::Zero(dcore);
  if (pt.w.size() == pr.n_vec && pr.n_vec > 0) z.head(2 * pr.n_vec) = real_of(pt.w);
  if (pr.basis.n > 0) {
    if (pt.x.rows() == pr.basis.n && pt.x.cols() == pr.basis.n) {
      z.tail(pr.basis.dim()) = pr.basis.svec(pt.x);
    } else {
      z.tail(pr.basis.dim()) = pr.basis.svec(CMat::Identity(pr.basis.n, pr.basis.n));
    }
  }
  return z;
}

Point unpack(const Prepared& pr, const RVec& z) {
  Point pt;
  pt.w = complex_of(z.head(2 * pr.n_vec));
  if (pr.basis.n > 0) pt.x = pr.basis.smat(z.segment(2 * pr.n_vec, pr.basis.dim()));
  return pt;
}

void project_equalities(const Prepared& pr, RVec& z) {
  if (pr.e_mat.rows() == 0) return;
  const RVec r = pr.e_mat * z - pr.e_vec;
  Eigen::CompleteOrthogonalDecomposition<RMat> cod(pr.e_mat * pr.e_mat.transpose());
  z -= pr.e_mat.transpose() * cod.solve(r);
}

RVec form_grad_x(const RealForm& f, const RVec& z, int dx) {
  RVec g = f.p.head(dx);
  if (f.m.size() > 0) g += 2.0 * f.m * z.head(dx);
  return g;
}

// Lawson-Hanson non-negative least squares: min ||A x - b|| s.t. x >= 0.
RVec nnls(const RMat& a, const RVec& b) {
  const Eigen::Index n = a.cols();
  RVec x = RVec::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()) * std::max<Eigen::Index>(n, 1);
  for (int outer = 0; outer < 3 * n + 10; ++outer) {
    const RVec wv = a.transpose() * (b - a * x);
    Eigen::Index best = -1;
    double best_val = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[j] && wv(j) > best_val) {
        best_val = wv(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[best] = true;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j]) idx.push_back(j);
      RMat ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t c = 0; c < idx.size(); ++c) ap.col(static_cast<Eigen::Index>(c)) = a.col(idx[c]);
      const RVec zp = ap.completeOrthogonalDecomposition().solve(b);
      bool all_pos = true;
      for (Eigen::Index c = 0; c < zp.size(); ++c) all_pos = all_pos && zp(c) > 0.0;
      if (all_pos) {
        x.setZero();
        for (std::size_t c = 0; c < idx.size(); ++c) x(idx[c]) = zp(static_cast<Eigen::Index>(c));
        break;
      }
      double alpha = 1.0;
      for (std::size_t c = 0; c < idx.size(); ++c) {
        const double zc = zp(static_cast<Eigen::Index>(c));
        if (zc <= 0.0) alpha = std::min(alpha, x(idx[c]) / (x(idx[c]) - zc));
      }
      for (std::size_t c = 0; c < idx.size(); ++c) {
        const Eigen::Index j = idx[c];
        x(j) += alpha * (zp(static_cast<Eigen::Index>(c)) - x(j));
        if (x(j) <= 1e-15) {
          x(j) = 0.0;
          passive[j] = false;
        }
      }
    }
  }
  return x;
}

void write_cmat(std::ostream& os, const char* tag, const CMat& m) {
  os << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      os << (j ? " " : "") << m(i, j).real() << ' ' << m(i, j).imag();
    }
    os << '\n';
  }
}

void write_form(std::ostream& os, const QuadForm& f) {
  write_cmat(os, "quad", f.quad);
  write_cmat(os, "lin", f.lin);
  write_cmat(os, "trace", f.trace);
  os << "constant " << f.constant << '\n';
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal:
      return "optimal";
    case Status::MaxIter:
      return "max_iter";
    case Status::Infeasible:
      return "infeasible";
  }
  return "unknown";
}

int ConicProblem::vec_dim() const {
  int n = 0;
  for (const auto& v : vec_vars) n += v.dim;
  return n;
}

int ConicProblem::offset_of(const std::string& name) const {
  int off = 0;
  for (const auto& v : vec_vars) {
    if (v.name == name) return off;
    off += v.dim;
  }
  throw std::out_of_range("unknown vector variable " + name);
}

int ConicProblem::dim_of(const std::string& name) const {
  for (const auto& v : vec_vars)
    if (v.name == name) return v.dim;
  throw std::out_of_range("unknown vector variable " + name);
}

int ConicProblem::add_vector(const std::string& name, int dim) {
  const int off = vec_dim();
  vec_vars.push_back({name, dim});
  return off;
}

void ConicProblem::certify(double tol) const {
  const int n = vec_dim();
  const int side = psd_side();
  auto check_shapes = [&](const QuadForm& f, const std::string& what) {
    if (f.quad.size() > 0 && (f.quad.rows() != n || f.quad.cols() != n))
      throw std::domain_error(what + ": quadratic block has wrong shape");
    if (f.lin.size() > 0 && f.lin.size() != n) throw std::domain_error(what + ": linear term has wrong length");
    if (f.trace.size() > 0) {
      if (f.trace.rows() != side || f.trace.cols() != side)
        throw std::domain_error(what + ": trace term has wrong shape");
      const double nrm = std::max(1e-300, f.trace.cwiseAbs().maxCoeff());
      if ((f.trace - f.trace.adjoint()).cwiseAbs().maxCoeff() > tol * nrm)
        throw std::domain_error(what + ": trace term is not Hermitian");
    }
    if (f.quad.size() > 0) {
      const double nrm = std::max(1e-300, f.quad.cwiseAbs().maxCoeff());
      if ((f.quad - f.quad.adjoint()).cwiseAbs().maxCoeff() > tol * nrm)
        throw std::domain_error(what + ": quadratic block is not Hermitian");
    }
  };
  auto curvature = [&](const QuadForm& f, double sign, const std::string& what) {
    if (f.quad.size() == 0) return;
    const double nrm = f.quad.cwiseAbs().maxCoeff();
    if (sign > 0 && linalg::min_eig(f.quad) < -tol * nrm) throw std::domain_error(what + ": not convex");
    if (sign < 0 && linalg::max_eig(f.quad) > tol * nrm) throw std::domain_error(what + ": not concave");
    if (sign == 0 && nrm > 0) throw std::domain_error(what + ": equality must be affine");
  };
  check_shapes(objective, "objective");
  curvature(objective, -1.0, "objective");
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const auto& c = constraints[i];
    const std::string what = c.label.empty() ? "constraint " + std::to_string(i) : c.label;
    check_shapes(c.form, what);
    curvature(c.form, c.sense == Sense::LessEqual ? 1.0 : (c.sense == Sense::GreaterEqual ? -1.0 : 0.0), what);
  }
}

double KktResiduals::max() const { return std::max({stationarity, primal, dual, complementarity}); }

CVec ConicSolution::vector(const ConicProblem& p, const std::string& name) const {
  return values.w.segment(p.offset_of(name), p.dim_of(name));
}

double evaluate(const QuadForm& f, const Point& pt) {
  double v = f.constant;
  if (f.quad.size() > 0) v += pt.w.dot(f.quad * pt.w).real();
  if (f.lin.size() > 0) v += f.lin.dot(pt.w).real();
  if (f.trace.size() > 0) v += (f.trace * pt.x).trace().real();
  return v;
}

double objective_value(const ConicProblem& p, const Point& pt) { return evaluate(p.objective, pt); }

double violation(const Constraint& c, const Point& pt) {
  const double f = evaluate(c.form, pt);
  switch (c.sense) {
    case Sense::LessEqual:
      return f - c.bound;
    case Sense::GreaterEqual:
      return c.bound - f;
    case Sense::Equal:
      return std::abs(f - c.bound);
  }
  return 0.0;
}

CMat implied_psd_dual(const ConicProblem& p, const std::vector<double>& duals) {
  const int side = p.psd_side();
  CMat z = CMat::Zero(side, side);
  if (side == 0) return z;
  if (p.objective.trace.size() > 0) z -= linalg::herm(p.objective.trace);
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const auto& c = p.constraints[i];
    if (c.form.trace.size() > 0) z += duals.at(i) * sign_of(c.sense) * linalg::herm(c.form.trace);
  }
  return z;
}

KktResiduals kkt_residual(const ConicProblem& p, const Point& pt, const std::vector<double>& duals) {
  if (duals.size() != p.constraints.size()) throw std::invalid_argument("kkt_residual: dual count mismatch");
  const Prepared pr = prepare(p);
  const int dx = 2 * pr.n_vec;
  const RVec z = pack(pr, pt);
  KktResiduals r;
  const double f0 = objective_value(p, pt);
  const double fscale = std::max(1.0, std::abs(f0));

  RVec grad = form_grad_x(pr.objective, z, dx);
  double gscale = std::max(1.0, grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0);
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const RVec gi = duals[i] * sign_of(p.constraints[i].sense) * form_grad_x(pr.forms[i], z, dx);
    if (gi.size() > 0) gscale = std::max(gscale, gi.cwiseAbs().maxCoeff());
    grad -= gi;
  }
  r.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() / gscale : 0.0;

  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const auto& c = p.constraints[i];
    const double v = violation(c, pt);
    r.primal = std::max(r.primal, v);
    if (c.sense != Sense::Equal) {
      r.dual = std::max(r.dual, -duals[i] / fscale);
      r.complementarity = std::max(r.complementarity, std::abs(duals[i] * v) / fscale);
    }
  }
  if (p.psd_side() > 0) {
    r.primal = std::max(r.primal, -linalg::min_eig(pt.x));
    const CMat zd = implied_psd_dual(p, duals);
    r.dual = std::max(r.dual, -linalg::min_eig(zd) / fscale);
    r.complementarity = std::max(r.complementarity, std::abs((zd * pt.x).trace().real()) / fscale);
  }
  r.primal = std::max(r.primal, 0.0);
  r.dual = std::max(r.dual, 0.0);
  return r;
}

std::vector<double> estimate_duals(const ConicProblem& p, const Point& pt) {
  const Prepared pr = prepare(p);
  const int dx = 2 * pr.n_vec;
  const RVec z = pack(pr, pt);
  const int m = static_cast<int>(p.constraints.size());
  const int n_ineq = static_cast<int>(pr.ineq_index.size());
  const int has_psd = p.psd_side() > 0 ? 1 : 0;
  // Columns: one per constraint (normalized units), plus a negated copy for equalities.
  const int n_cols = m + static_cast<int>(pr.eq_index.size());
  const int n_rows = dx + n_ineq + has_psd;
  RMat a = RMat::Zero(n_rows, n_cols);
  RVec b = RVec::Zero(n_rows);
  if (dx > 0) b.head(dx) = -form_grad_x(pr.objective, z, dx);
  const CMat x = pt.x;
  if (has_psd && p.objective.trace.size() > 0) b(n_rows - 1) = (linalg::herm(p.objective.trace) * x).trace().real();
  std::vector<int> ineq_row(static_cast<std::size_t>(m), -1);
  for (int r = 0; r < n_ineq; ++r) ineq_row[pr.ineq_index[r]] = r;
  auto fill = [&](int col, int i, double sgn) {
    const auto& c = p.constraints[i];
    const double sg = sgn * sign_of(c.sense) / pr.scale[i];
    if (dx > 0) a.block(0, col, dx, 1) = -sg * form_grad_x(pr.forms[i], z, dx);
    if (ineq_row[i] >= 0) a(dx + ineq_row[i], col) = sgn * violation(c, pt) / pr.scale[i];
    if (has_psd && c.form.trace.size() > 0)
      a(n_rows - 1, col) = sg * (linalg::herm(c.form.trace) * x).trace().real();
  };
  for (int i = 0; i < m; ++i) fill(i, i, 1.0);
  for (std::size_t e = 0; e < pr.eq_index.size(); ++e) fill(m + static_cast<int>(e), pr.eq_index[e], -1.0);
  const RVec theta = nnls(a, b);
  std::vector<double> duals(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) duals[i] = theta(i) / pr.scale[i];
  for (std::size_t e = 0; e < pr.eq_index.size(); ++e) {
    const int i = pr.eq_index[e];
    duals[i] -= theta(m + static_cast<int>(e)) / pr.scale[i];
  }
  return duals;
}

KktResiduals kkt_residual(const ConicProblem& p, const Point& pt) { return kkt_residual(p, pt, estimate_duals(p, pt)); }

double dual_bound(const ConicProblem& p, const std::vector<double>& duals) {
  const Prepared pr = prepare(p);
  const int dx = 2 * pr.n_vec;
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    if (p.constraints[i].sense != Sense::Equal && duals[i] < 0.0) return kInf;
  }
  if (p.psd_side() > 0) {
    const CMat zd = implied_psd_dual(p, duals);
    const double nrm = std::max(1.0, zd.cwiseAbs().maxCoeff());
    if (linalg::min_eig(zd) < -1e-12 * nrm) return kInf;
  }
  RMat m = pr.objective.m.size() > 0 ? pr.objective.m : RMat::Zero(dx, dx);
  RVec lin = pr.objective.p.head(dx);
  double c = pr.objective.c;
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const double coef = duals[i] * sign_of(p.constraints[i].sense);
    if (pr.forms[i].m.size() > 0) m -= coef * pr.forms[i].m;
    lin -= coef * pr.forms[i].p.head(dx);
    c -= coef * (pr.forms[i].c - p.constraints[i].bound);
  }
  if (dx == 0) return c;
  Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (m + m.transpose()));
  const double mscale = std::max(1e-300, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().maxCoeff() > 1e-10 * mscale) return kInf;
  // Maximize x^T m x + lin . x over the range of m; lin must lie in that range.
  const RVec proj = es.eigenvectors().transpose() * lin;
  double value = c;
  for (Eigen::Index i = 0; i < proj.size(); ++i) {
    const double lam = es.eigenvalues()(i);
    if (lam < -1e-10 * mscale) {
      value += -proj(i) * proj(i) / (4.0 * lam);
    } else if (std::abs(proj(i)) > 1e-9 * std::max(1.0, lin.cwiseAbs().maxCoeff())) {
      return kInf;
    }
  }
  return value;
}

ConicSolution solve(const ConicProblem& p, double tol, int max_iter) {
  SolverOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  return solve(p, o);
}

ConicSolution solve(const ConicProblem& p, const SolverOptions& opt) {
  p.certify(1e-8);
  const Prepared pr = prepare(p);
  const int dcore = 2 * pr.n_vec + pr.basis.dim();
  ConicSolution sol;
  sol.duals.assign(p.constraints.size(), 0.0);

  RVec z = opt.warm_start ? pack(pr, *opt.warm_start) : pack(pr, Point{});
  project_equalities(pr, z);

  Barrier b2 = make_barrier(p, pr, false);
  int steps = 0;

  // A start hugging the boundary is as slow to center from as an infeasible
  // one, so the initial point needs some normalized slack.
  auto strictly_feasible = [&](const RVec& zz, double margin) {
    for (const auto& r : b2.rows)
      if (!(r.value(zz, b2.dx) < -margin)) return false;
    if (b2.has_psd) {
      Eigen::LLT<CMat> llt(b2.psd_at(zz));
      if (llt.info() != Eigen::Success) return false;
    }
    return true;
  };

  if (!strictly_feasible(z, 1e-6)) {
    sol.phase1_used = true;
    Barrier b1 = make_barrier(p, pr, true);
    RVec z1(b1.d);
    z1.head(dcore) = z;
    double s0 = 0.0;
    for (std::size_t i = 0; i + 1 < b1.rows.size(); ++i) s0 = std::max(s0, b2.rows[i].value(z, b2.dx));
    if (b1.has_psd) s0 = std::max(s0, -linalg::min_eig(b2.psd_at(z)));
    z1(dcore) = s0 + 1.0;
    double t = static_cast<double>(b1.barrier_count()) / std::max(1.0, std::abs(z1(dcore)));
    bool found = false;
    while (steps < opt.max_iter) {
      const CenterResult cr = center(b1, z1, t, opt.newton_tol, opt.max_iter - steps);
      steps += cr.steps;
      if (z1(dcore) < 0.0 && strictly_feasible(z1.head(dcore), 0.0)) {
        found = true;
        break;
      }
      const double gap = b1.barrier_count() / t;
      if (z1(dcore) - gap > 0.0 || gap < 1e-12 || !cr.ok) break;
      t *= opt.mu;
    }
    sol.iterations = steps;
    if (!found) {
      sol.status = Status::Infeasible;
      sol.values = unpack(pr, z1.head(dcore));
      sol.objective = objective_value(p, sol.values);
      sol.kkt = kkt_residual(p, sol.values, sol.duals);
      return sol;
    }
    z = z1.head(dcore);
  }

  const double f_init = objective_value(p, unpack(pr, z));
  const int mbar = b2.barrier_count();
  double t = mbar > 0 ? mbar / std::max(1.0, std::abs(f_init)) : 1.0;
  sol.status = Status::MaxIter;
  std::vector<double> duals(p.constraints.size(), 0.0);
  while (true) {
    const CenterResult cr = center(b2, z, t, opt.newton_tol, std::max(1, opt.max_iter - steps));
    steps += cr.steps;
    // Multipliers implied by the centering conditions.
    for (std::size_t r = 0; r < pr.ineq_index.size(); ++r) {
      const int i = pr.ineq_index[r];
      const double slack = -b2.rows[r].value(z, b2.dx);
      duals[i] = 1.0 / (t * slack * pr.scale[i]);
    }
    for (std::size_t e = 0; e < pr.eq_index.size(); ++e) {
      const int i = pr.eq_index[e];
      duals[i] = cr.eq_mult.size() > 0 ? cr.eq_mult(static_cast<Eigen::Index>(e)) / (t * pr.scale[i]) : 0.0;
    }
    const Point pt = unpack(pr, z);
    const double f = objective_value(p, pt);
    const double gap = mbar / t;
    if (gap <= 0.5 * opt.tol * std::max(1.0, std::abs(f))) {
      const KktResiduals k = kkt_residual(p, pt, duals);
      if (k.max() <= opt.tol) {
        sol.status = Status::Optimal;
        break;
      }
    }
    if (steps >= opt.max_iter || !cr.ok || mbar == 0) break;
    t *= opt.mu;
    if (t > 1e30) break;
  }
  sol.iterations = steps;
  sol.values = unpack(pr, z);
  sol.objective = objective_value(p, sol.values);
  sol.duals = duals;
  sol.psd_dual = implied_psd_dual(p, duals);
  sol.kkt = kkt_residual(p, sol.values, duals);
  if (mbar == 0 && sol.kkt.max() <= opt.tol) sol.status = Status::Optimal;
  return sol;
}

void write_problem(const ConicProblem& p, std::ostream& os) {
  os << std::setprecision(17);
  os << "# conic problem: maximize objective subject to constraints\n";
  for (const auto& v : p.vec_vars) os << "vector " << v.name << ' ' << v.dim << '\n';
  if (p.psd_var) os << "psd " << p.psd_var->name << ' ' << p.psd_var->side << '\n';
  os << "objective\n";
  write_form(os, p.objective);
  for (const auto& c : p.constraints) {
    const char* s = c.sense == Sense::LessEqual ? "<=" : (c.sense == Sense::GreaterEqual ? ">=" : "=");
    os << "constraint " << (c.label.empty() ? "-" : c.label) << ' ' << s << ' ' << c.bound << '\n';
    write_form(os, c.form);
  }
}

}  // namespace isac::conic
