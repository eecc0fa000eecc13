#include "skt/banded.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

namespace skt {

BandedMatrix::BandedMatrix(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku) {
    if (n < 1 || kl < 0 || ku < 0 || kl > n - 1 || ku > n - 1)
        throw InvalidDomain("BandedMatrix: bandwidths must satisfy 0 <= kl, ku <= n-1");
    // kl extra rows on top hold LU fill-in, so factor() needs no reshape
    ab_.assign(static_cast<size_t>(2 * kl + ku + 1) * n, 0.0);
}

double& BandedMatrix::at(int i, int j) {
    assert(in_band(i, j));
    return ab_[static_cast<size_t>(kl_ + ku_ + i - j) * n_ + j];
}

double BandedMatrix::get(int i, int j) const {
    if (!in_band(i, j)) return 0.0;
    return ab_[static_cast<size_t>(kl_ + ku_ + i - j) * n_ + j];
}

std::vector<double> BandedMatrix::apply(const std::vector<double>& x) const {
    assert(static_cast<int>(x.size()) == n_);
    std::vector<double> y(n_, 0.0);
    for (int j = 0; j < n_; ++j) {
        const double xj = x[j];
        if (xj == 0.0) continue;
        const int ilo = std::max(0, j - ku_);
        const int ihi = std::min(n_ - 1, j + kl_);
        for (int i = ilo; i <= ihi; ++i)
            y[i] += ab_[static_cast<size_t>(kl_ + ku_ + i - j) * n_ + j] * xj;
    }
    return y;
}

double BandedMatrix::max_abs() const {
    double s = 0.0;
    for (double v : ab_) s = std::max(s, std::fabs(v));
    return s;
}

BandedLU BandedLU::factor(const BandedMatrix& a) {
    BandedLU f;
    const int n = a.n_, kl = a.kl_, ku = a.ku_;
    const int kv = kl + ku;  // superdiagonals in working storage
    f.n_ = n;
    f.kl_ = kl;
    f.ku_ = ku;
    f.ab_ = a.ab_;
    f.ipiv_.assign(n, 0);
    f.det_sign_ = 1;
    auto& ab = f.ab_;
    auto idx = [&](int r, int j) { return static_cast<size_t>(r) * n + j; };

    // row scales of the original matrix, permuted along with the rows
    std::vector<double> rs(n, 0.0);
    for (int j = 0; j < n; ++j) {
        const int ilo = std::max(0, j - ku);
        const int ihi = std::min(n - 1, j + kl);
        for (int i = ilo; i <= ihi; ++i)
            rs[i] = std::max(rs[i], std::fabs(ab[idx(kv + i - j, j)]));
    }

    int ju = 0;  // rightmost column touched by eliminations so far
    for (int j = 0; j < n; ++j) {
        const int km = std::min(kl, n - 1 - j);
        int jp = 0;
        double best = std::fabs(ab[idx(kv, j)]);
        for (int p = 1; p <= km; ++p) {
            const double v = std::fabs(ab[idx(kv + p, j)]);
            if (v > best) {
                best = v;
                jp = p;
            }
        }
        const double scale = rs[j + jp];
        if (scale == 0.0 || best < 1e-14 * scale)
            throw SingularMatrix("banded LU: pivot below 1e-14 of row scale at column " +
                                 std::to_string(j));
        f.ipiv_[j] = j + jp;
        ju = std::max(ju, std::min(j + ku + jp, n - 1));
        if (jp != 0) {
            for (int q = j; q <= ju; ++q)
                std::swap(ab[idx(kv + j - q, q)], ab[idx(kv + j + jp - q, q)]);
            std::swap(rs[j], rs[j + jp]);
            f.det_sign_ = -f.det_sign_;
        }
        const double piv = ab[idx(kv, j)];
        if (piv < 0.0) f.det_sign_ = -f.det_sign_;
        if (km > 0) {
            const double inv = 1.0 / piv;
            for (int p = 1; p <= km; ++p) ab[idx(kv + p, j)] *= inv;
            for (int q = j + 1; q <= ju; ++q) {
                const double uf = ab[idx(kv + j - q, q)];
                if (uf != 0.0)
                    for (int p = 1; p <= km; ++p)
                        ab[idx(kv + j + p - q, q)] -= ab[idx(kv + p, j)] * uf;
            }
        }
    }
    return f;
}

std::vector<double> BandedLU::solve(const std::vector<double>& rhs) const {
    assert(static_cast<int>(rhs.size()) == n_);
    const int n = n_, kl = kl_, kv = kl_ + ku_;
    auto idx = [&](int r, int j) { return static_cast<size_t>(r) * n + j; };
    std::vector<double> x = rhs;
    // L y = P b
    for (int j = 0; j < n; ++j) {
        if (ipiv_[j] != j) std::swap(x[j], x[ipiv_[j]]);
        const int km = std::min(kl, n - 1 - j);
        const double xj = x[j];
        if (xj != 0.0)
            for (int p = 1; p <= km; ++p) x[j + p] -= ab_[idx(kv + p, j)] * xj;
    }
    // U x = y
    for (int j = n - 1; j >= 0; --j) {
        const int qhi = std::min(n - 1, j + kv);
        double s = x[j];
        for (int q = j + 1; q <= qhi; ++q) s -= ab_[idx(kv + j - q, q)] * x[q];
        x[j] = s / ab_[idx(kv, j)];
    }
    return x;
}

std::vector<double> solve_banded(const BandedMatrix& a, const std::vector<double>& rhs) {
    return BandedLU::factor(a).solve(rhs);
}

BandedMatrix discrete_laplacian(const Grid& g) {
    BandedMatrix a(g.n, 1, 1);
    const double d = 2.0 / (g.h * g.h);
    const double e = -1.0 / (g.h * g.h);
    for (int i = 0; i < g.n; ++i) {
        a.at(i, i) = d;
        if (i > 0) a.at(i, i - 1) = e;
        if (i < g.n - 1) a.at(i, i + 1) = e;
    }
    return a;
}

} // namespace skt
