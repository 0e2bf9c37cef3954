// SPDX-License-Identifier: Apache-2.0
// Problem instances shared by the conic tests and the acceptance run.
#pragma once

#include "isac/conic.hpp"
#include "isac/scenario.hpp"

namespace fixture {

/// Shaped like the digital subproblem: k beam vectors of length m, one PSD
/// matrix, a leakage row per beam, one linearized sensing row and a power row.
isac::conic::ConicProblem random_subproblem(isac::RandomStream& rng, int m, int k);

/// min Tr(C X) over Tr(X) = 1, X PSD, posed as a maximization of -Tr(C X).
isac::conic::ConicProblem min_eig_problem(const isac::CMat& c);

isac::CMat random_cmat(isac::RandomStream& rng, int r, int c);

}  // namespace fixture
