#pragma once

#include <vector>

#include "skt/banded.hpp"
#include "skt/grid.hpp"

namespace skt {

struct EigenPair {
    double value = 0.0;
    std::vector<double> vector;  // sup-normalized nodal eigenfunction
};

// k smallest eigenvalues of the weighted Dirichlet problem
//   (-d^2/dx^2) phi = lambda m(x) phi
// on the interior nodes of g, ascending, with sup-normalized vectors.
// m must be strictly positive. The problem is reduced to standard
// symmetric tridiagonal form by the diag(m)^{-1/2} similarity, the
// eigenvalues located by bisection on the Sturm sign count, and the
// vectors recovered by inverse iteration.
//
// Sign convention: the first eigenvector is positive; every vector is
// normalized so that its value at the node nearest the left endpoint is
// positive (discrete analogue of phi'(a) > 0).
//
// Throws ValidationError for nonpositive m or k out of range and
// ConvergenceFailure if inverse iteration stalls.
std::vector<EigenPair> eigen_weighted(const Grid& g, const std::vector<double>& m, int k);

// k smallest-magnitude eigenvalues of a general (possibly nonsymmetric)
// banded matrix via shift-invert Arnoldi around zero, sorted by
// magnitude. Complex pairs are reported through their real parts and
// flagged in *any_complex when given. Eigenvalue monitor for the
// continuation engine; deterministic (fixed start vector).
// If kernel_out is nonnull it receives the (real) Ritz vector of the
// smallest-magnitude eigenvalue.
std::vector<double> eigs_smallest_magnitude(const BandedMatrix& a, int k,
                                            std::vector<double>* kernel_out = nullptr,
                                            bool* any_complex = nullptr);

} // namespace skt
