#pragma once

#include <vector>

#include "skt/errors.hpp"
#include "skt/grid.hpp"

namespace skt {

// General banded matrix with kl subdiagonals and ku superdiagonals.
// Storage is the usual band layout with kl extra rows reserved on top
// for LU fill-in: entry (i,j) lives at ab[(kl + ku + i - j) * n + j].
// Factorizations are produced as separate BandedLU values; the raw
// entries here are never modified by a solve.
class BandedMatrix {
  public:
    BandedMatrix() = default;
    BandedMatrix(int n, int kl, int ku);

    int n() const { return n_; }
    int kl() const { return kl_; }
    int ku() const { return ku_; }

    bool in_band(int i, int j) const {
        return i >= 0 && j >= 0 && i < n_ && j < n_ && i - j <= kl_ && j - i <= ku_;
    }

    // mutable access, (i,j) must be inside the band
    double& at(int i, int j);
    // read access, zero outside the band
    double get(int i, int j) const;

    // y = A x
    std::vector<double> apply(const std::vector<double>& x) const;

    double max_abs() const;

    const std::vector<double>& raw() const { return ab_; }

  private:
    friend class BandedLU;
    int n_ = 0, kl_ = 0, ku_ = 0;
    std::vector<double> ab_;
};

// LU factorization with partial pivoting of a BandedMatrix.
// The determinant sign falls out of the factorization for free and is
// used by the continuation engine to track parity changes.
class BandedLU {
  public:
    // Throws SingularMatrix when a pivot falls below 1e-14 times the
    // corresponding row scale of the original matrix.
    static BandedLU factor(const BandedMatrix& a);

    std::vector<double> solve(const std::vector<double>& rhs) const;

    // +1 or -1; sign of det(A)
    int det_sign() const { return det_sign_; }

  private:
    int n_ = 0, kl_ = 0, ku_ = 0;
    std::vector<double> ab_;   // factored bands
    std::vector<int> ipiv_;
    int det_sign_ = 1;
};

// Factor + solve in one call.
std::vector<double> solve_banded(const BandedMatrix& a, const std::vector<double>& rhs);

// Second-order central difference matrix for -d^2/dx^2 with zero
// Dirichlet boundary: tridiagonal, 2/h^2 on the diagonal and -1/h^2 off.
// Symmetric positive definite.
BandedMatrix discrete_laplacian(const Grid& g);

} // namespace skt
