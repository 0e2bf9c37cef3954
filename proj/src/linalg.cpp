// SPDX-License-Identifier: Apache-2.0
#include "isac/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace isac::linalg {

CMat herm(const CMat& a) { return 0.5 * (a + a.adjoint()); }

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CVec vec(const CMat& a) { return Eigen::Map<const CVec>(a.data(), a.size()); }

CMat unvec(const CVec& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const CMat>(v.data(), rows, cols);
}

HermEig eig_desc(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(herm(a));
  const Eigen::Index n = a.rows();
  HermEig out{RVec(n), CMat(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

double min_eig(const CMat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(herm(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eig(const CMat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(herm(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(a.rows() - 1);
}

int numeric_rank(const CMat& psd, double rel_tol) {
  if (psd.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<CMat> es(herm(psd), Eigen::EigenvaluesOnly);
  const double tr = std::max(psd.trace().real(), 0.0);
  if (tr <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()(i) > rel_tol * tr) ++r;
  }
  return r;
}

CMat inv_sqrt_pd(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(herm(a));
  RVec d = es.eigenvalues().cwiseMax(std::numeric_limits<double>::min()).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

CMat project_psd(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(herm(a));
  RVec d = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

CMat phase_only(const CMat& a) {
  CMat out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double m = std::abs(a(i));
    out(i) = m > 0.0 ? a(i) / m : cd{1.0, 0.0};
  }
  return out;
}

}  // namespace isac::linalg
