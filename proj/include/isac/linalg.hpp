// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isac/types.hpp"

namespace isac::linalg {

/// Hermitian part (A + A^H)/2.
CMat herm(const CMat& a);

/// Kronecker product a ⊗ b.
CMat kron(const CMat& a, const CMat& b);

/// Column-major vec().
CVec vec(const CMat& a);
CMat unvec(const CVec& v, Eigen::Index rows, Eigen::Index cols);

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in descending order.
struct HermEig {
  RVec values;
  CMat vectors;
};
HermEig eig_desc(const CMat& a);

double min_eig(const CMat& a);
double max_eig(const CMat& a);

/// Number of eigenvalues above rel_tol * trace.
int numeric_rank(const CMat& psd, double rel_tol);

/// Principal square root and inverse square root of a Hermitian PD matrix.
CMat inv_sqrt_pd(const CMat& a);

/// Projection of a Hermitian matrix onto the PSD cone.
CMat project_psd(const CMat& a);

/// Elementwise unit-modulus projection; zero entries map to 1.
CMat phase_only(const CMat& a);

}  // namespace isac::linalg
