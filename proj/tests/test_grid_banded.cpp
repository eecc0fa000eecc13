#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "skt/banded.hpp"
#include "skt/errors.hpp"
#include "skt/grid.hpp"

using namespace skt;

namespace {

// dense Gaussian elimination with partial pivoting; oracle for BandedLU
struct Dense {
    int n = 0;
    std::vector<double> a;
    double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
    double get(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
};

std::vector<double> dense_solve(Dense m, std::vector<double> rhs, int* sgn) {
    const int n = m.n;
    int sign = 1;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (std::fabs(m.get(i, k)) > std::fabs(m.get(piv, k))) piv = i;
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(m.at(k, j), m.at(piv, j));
            std::swap(rhs[k], rhs[piv]);
            sign = -sign;
        }
        if (m.get(k, k) < 0) sign = -sign;
        for (int i = k + 1; i < n; ++i) {
            const double f = m.get(i, k) / m.get(k, k);
            for (int j = k; j < n; ++j) m.at(i, j) -= f * m.get(k, j);
            rhs[i] -= f * rhs[k];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = rhs[i];
        for (int j = i + 1; j < n; ++j) s -= m.get(i, j) * rhs[j];
        rhs[i] = s / m.get(i, i);
    }
    if (sgn) *sgn = sign;
    return rhs;
}

} // namespace

TEST_CASE("grid construction and nodes") {
    const Grid g = build_grid(-0.5, 0.5, 3);
    CHECK(g.n == 3);
    CHECK(g.h == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.node(0) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(g.node(1) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(g.node(2) == doctest::Approx(0.25).epsilon(1e-15));

    CHECK_THROWS_AS(build_grid(0.5, -0.5, 5), InvalidDomain);
    CHECK_THROWS_AS(build_grid(0.0, 1.0, 2), InvalidDomain);
}

TEST_CASE("norms: zero, constant, first eigenmode") {
    const Grid g3 = build_grid(-0.5, 0.5, 3);
    const std::vector<double> zero(3, 0.0);
    CHECK(norms(zero, g3).l2 == 0.0);
    CHECK(norms(zero, g3).sup == 0.0);

    const std::vector<double> one(3, 1.0);
    CHECK(norms(one, g3).l2 == doctest::Approx(std::sqrt(0.75)).epsilon(1e-14));
    CHECK(norms(one, g3).sup == 1.0);

    // rectangle rule integrates sin^2 exactly on this lattice:
    // sum sin^2(j pi/(n+1)) = (n+1)/2, so l2 = sqrt(1/2) to rounding
    const Grid g = build_grid(-0.5, 0.5, 511);
    std::vector<double> f(511);
    for (int i = 0; i < g.n; ++i) f[i] = std::sin(M_PI * (g.node(i) + 0.5));
    CHECK(l2_norm(f, g) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(sup_norm(f) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("identity solve returns the rhs") {
    BandedMatrix a(4, 0, 0);
    for (int i = 0; i < 4; ++i) a.at(i, i) = 1.0;
    const std::vector<double> rhs{1.0, -2.0, 3.0, 0.25};
    const std::vector<double> x = solve_banded(a, rhs);
    for (int i = 0; i < 4; ++i) CHECK(x[i] == doctest::Approx(rhs[i]).epsilon(1e-15));
}

TEST_CASE("discrete -u'' = 1 on n=3 matches the quadratic solution") {
    // the scheme is exact on quadratics: u(x) = 1/8 - x^2/2
    const Grid g = build_grid(-0.5, 0.5, 3);
    const BandedMatrix A = discrete_laplacian(g);
    CHECK(A.get(0, 0) == doctest::Approx(2.0 / (g.h * g.h)).epsilon(1e-15));
    CHECK(A.get(0, 1) == doctest::Approx(-1.0 / (g.h * g.h)).epsilon(1e-15));
    const std::vector<double> x = solve_banded(A, {1.0, 1.0, 1.0});
    for (int i = 0; i < 3; ++i) {
        const double xi = g.node(i);
        CHECK(x[i] == doctest::Approx(0.125 - 0.5 * xi * xi).epsilon(1e-13));
    }
}

TEST_CASE("zero matrix is singular") {
    BandedMatrix a(3, 1, 1);
    CHECK_THROWS_AS(BandedLU::factor(a), SingularMatrix);
}

TEST_CASE("banded LU against dense elimination, random bands") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 4 + trial % 13;
        const int kl = trial % 3;
        const int ku = (trial / 3) % 3;
        BandedMatrix a(n, kl, ku);
        Dense d{n, std::vector<double>(static_cast<size_t>(n) * n, 0.0)};
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (a.in_band(i, j)) {
                    double val = U(rng);
                    if (i == j) val += (val >= 0 ? 3.0 : -3.0);  // keep well-conditioned
                    a.at(i, j) = val;
                    d.at(i, j) = val;
                }
        std::vector<double> rhs(static_cast<size_t>(n));
        for (auto& r : rhs) r = U(rng);

        int dense_sign = 1;
        const std::vector<double> xd = dense_solve(d, rhs, &dense_sign);
        const BandedLU lu = BandedLU::factor(a);
        const std::vector<double> xb = lu.solve(rhs);

        CHECK(lu.det_sign() == dense_sign);
        double diff = 0.0, scale = 0.0;
        for (int i = 0; i < n; ++i) {
            diff = std::max(diff, std::fabs(xb[i] - xd[i]));
            scale = std::max(scale, std::fabs(xd[i]));
        }
        CHECK(diff <= 1e-11 * std::max(1.0, scale));

        // apply is the transpose-free forward product
        const std::vector<double> back = a.apply(xb);
        double res = 0.0;
        for (int i = 0; i < n; ++i) res = std::max(res, std::fabs(back[i] - rhs[i]));
        CHECK(res <= 1e-10 * (a.max_abs() * std::max(1.0, scale) + 1.0));
    }
}

TEST_CASE("solve then apply is the identity on well-conditioned systems") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 50 + 10 * trial;
        BandedMatrix a(n, 2, 2);
        for (int i = 0; i < n; ++i)
            for (int j = std::max(0, i - 2); j <= std::min(n - 1, i + 2); ++j)
                a.at(i, j) = (i == j) ? 6.0 + U(rng) : U(rng);
        std::vector<double> rhs(static_cast<size_t>(n));
        for (auto& r : rhs) r = U(rng);
        const std::vector<double> x = solve_banded(a, rhs);
        const std::vector<double> b2 = a.apply(x);
        double rel = 0.0;
        for (int i = 0; i < n; ++i)
            rel = std::max(rel, std::fabs(b2[i] - rhs[i]) / std::max(1.0, std::fabs(rhs[i])));
        CHECK(rel <= 1e-9);
    }
}
