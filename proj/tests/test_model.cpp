#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "skt/banded.hpp"
#include "skt/eigen.hpp"
#include "skt/errors.hpp"
#include "skt/grid.hpp"
#include "skt/model.hpp"
#include "skt/newton.hpp"

using namespace skt;

TEST_CASE("parameter construction and validation") {
    const Grid g = build_grid(-0.5, 0.5, 9);
    const ModelParams p = tst::default_params(g, 20.0);
    CHECK(p.eps == doctest::Approx(1.0 / 20.0).epsilon(1e-15));
    CHECK(std::fabs(p.eps * p.alpha - 1.0) <= 1e-14);
    p.validate(g);

    const ModelParams lim = ModelParams::limit(3.0, 2.0, 2.0, 1.0, tst::ones(g), 20.0);
    CHECK(lim.eps == 0.0);
    lim.validate(g);

    CHECK_THROWS_AS(ModelParams::make(0.0, 3, 2, 2, 1, tst::ones(g), 20.0), ValidationError);
    CHECK_THROWS_AS(ModelParams::make(20.0, -3, 2, 2, 1, tst::ones(g), 20.0).validate(g),
                    ValidationError);
    std::vector<double> mneg = tst::ones(g);
    mneg[3] = -0.5;
    CHECK_THROWS_AS(ModelParams::make(20.0, 3, 2, 2, 1, mneg, 20.0).validate(g),
                    ValidationError);

    const ModelParams q = p.with_alpha(50.0);
    CHECK(q.alpha == 50.0);
    CHECK(q.eps == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(p.with_lambda(7.0).lambda == 7.0);
}

TEST_CASE("recovery map closed forms") {
    StateWZ s;
    s.w = {0.0};
    s.z = {0.0};
    StateUV uv = uv_from_wz(s, 1.0);
    CHECK(uv.u[0] == 0.0);
    CHECK(uv.v[0] == 0.0);

    s.w = {1.0};
    s.z = {3.0};
    uv = uv_from_wz(s, 0.5);  // sqrt(0.25 + 12) = 3.5
    CHECK(uv.u[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(uv.v[0] == doctest::Approx(1.0).epsilon(1e-15));

    const StateWZ back = wz_from_uv(StateUV{{2.0}, {1.0}}, 0.5);
    CHECK(back.w[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(back.z[0] == doctest::Approx(3.0).epsilon(1e-15));

    s.w = {0.0};
    s.z = {-1.0};
    CHECK_THROWS_AS(uv_from_wz(s, 0.0), NegativeDiscriminant);
}

TEST_CASE("transform round trip on random positive states") {
    const Grid g = build_grid(-0.5, 0.5, 40);
    std::mt19937 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const double eps = (trial % 4) * 0.05;  // includes the eps = 0 limit
        const StateUV s = tst::random_uv(g, rng);
        const StateWZ wz = wz_from_uv(s, eps);
        const StateUV s2 = uv_from_wz(wz, eps);
        CHECK(tst::sup_diff(s.u, s2.u) <= 1e-12 * (1.0 + tst::sup_abs(s.u)));
        CHECK(tst::sup_diff(s.v, s2.v) <= 1e-12 * (1.0 + tst::sup_abs(s.v)));
        const StateWZ wz2 = wz_from_uv(s2, eps);
        CHECK(tst::sup_diff(wz.w, wz2.w) <= 1e-12 * (1.0 + tst::sup_abs(wz.w)));
        CHECK(tst::sup_diff(wz.z, wz2.z) <= 1e-12 * (1.0 + tst::sup_abs(wz.z)));
    }
}

TEST_CASE("residual equivalence identities") {
    // r1_wz = r1_uv - r2_uv and r2_wz = eps r1_uv, nodewise, to rounding
    const Grid g = build_grid(-0.5, 0.5, 64);
    std::mt19937 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelParams p = tst::default_params(g, 15.0 + trial, 10.0 + 3.0 * trial);
        const StateUV uv = tst::random_uv(g, rng);
        const StateWZ wz = wz_from_uv(uv, p.eps);
        const Residual ruv = residual_uv(p, uv, g);
        const Residual rwz = residual_wz(p, wz, g);
        const double scale =
            std::max(1.0, std::max(tst::sup_abs(ruv.r1), tst::sup_abs(ruv.r2)));
        for (int i = 0; i < g.n; ++i) {
            CHECK(std::fabs(rwz.r1[i] - (ruv.r1[i] - ruv.r2[i])) <= 1e-12 * scale);
            CHECK(std::fabs(rwz.r2[i] - p.eps * ruv.r1[i]) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("zero state gives zero residual in every form") {
    const Grid g = build_grid(-0.5, 0.5, 33);
    const ModelParams p = tst::default_params(g, 20.0);
    const StateWZ z0{std::vector<double>(33, 0.0), std::vector<double>(33, 0.0)};
    CHECK(residual_wz(p, z0, g).sup() == 0.0);
    CHECK(residual_uv(p, StateUV{z0.w, z0.z}, g).sup() == 0.0);
    CHECK(residual_wz_d(p, z0, g, 0.05).sup() == 0.0);
    const ModelParams lim = ModelParams::limit(3, 2, 2, 1, tst::ones(g), 20.0);
    CHECK(residual_limit_WZ(lim, z0, g).sup() == 0.0);
}

TEST_CASE("diffusion-parameter form is the 1/lambda^2 rescaling") {
    const Grid g = build_grid(-0.5, 0.5, 48);
    std::mt19937 rng(29);
    for (int trial = 0; trial < 12; ++trial) {
        const double lam = 10.0 + 7.0 * trial;
        const ModelParams p = tst::default_params(g, lam);
        const double d = 1.0 / lam;
        const StateUV uv = tst::random_uv(g, rng);
        const StateWZ wz = wz_from_uv(uv, p.eps);

        // scaled copies: u_hat = u/lambda, w_hat = w/lambda, z_hat = z/lambda^2
        StateUV uvh = uv;
        StateWZ wzh = wz;
        for (int i = 0; i < g.n; ++i) {
            uvh.u[i] /= lam;
            uvh.v[i] /= lam;
            wzh.w[i] /= lam;
            wzh.z[i] /= (lam * lam);
        }
        const Residual r = residual_wz(p, wz, g);
        const Residual rd = residual_wz_d(p, wzh, g, d);
        const Residual ru = residual_uv(p, uv, g);
        const Residual rud = residual_uv_d(p, uvh, g, d);
        const double scale = std::max(1.0, r.sup() / (lam * lam));
        for (int i = 0; i < g.n; ++i) {
            CHECK(std::fabs(rd.r1[i] - r.r1[i] / (lam * lam)) <= 1e-12 * scale);
            CHECK(std::fabs(rd.r2[i] - r.r2[i] / (lam * lam)) <= 1e-12 * scale);
            CHECK(std::fabs(rud.r1[i] - ru.r1[i] / (lam * lam)) <= 1e-12 * scale);
            CHECK(std::fabs(rud.r2[i] - ru.r2[i] / (lam * lam)) <= 1e-12 * scale);
        }
    }
}

namespace {

ResidualFn packed_residual(const ModelParams& p, const Grid& g) {
    return [p, g](const std::vector<double>& x) {
        return pack_residual(residual_wz(p, unpack_wz(x), g));
    };
}

JacobianFn packed_jacobian(const ModelParams& p, const Grid& g) {
    return [p, g](const std::vector<double>& x) { return jacobian_wz(p, unpack_wz(x), g); };
}

} // namespace

TEST_CASE("analytic Jacobian matches central differences") {
    const Grid g = build_grid(-0.5, 0.5, 24);
    std::mt19937 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelParams p = tst::default_params(g, 12.0 + trial, 8.0 + trial);
        const StateWZ wz = wz_from_uv(tst::random_uv(g, rng), p.eps);
        const double err =
            fd_jacobian_check(packed_residual(p, g), packed_jacobian(p, g), pack_wz(wz));
        CHECK(err < 1e-5);
    }
}

TEST_CASE("d-form Jacobian matches central differences") {
    const Grid g = build_grid(-0.5, 0.5, 24);
    std::mt19937 rng(43);
    const double lam = 25.0;
    const ModelParams p = tst::default_params(g, lam);
    const double d = 1.0 / lam;
    for (int trial = 0; trial < 8; ++trial) {
        StateWZ wz = wz_from_uv(tst::random_uv(g, rng), p.eps);
        for (int i = 0; i < g.n; ++i) {
            wz.w[i] /= lam;
            wz.z[i] /= (lam * lam);
        }
        const ResidualFn rf = [&p, &g, d](const std::vector<double>& x) {
            return pack_residual(residual_wz_d(p, unpack_wz(x), g, d));
        };
        const JacobianFn jf = [&p, &g, d](const std::vector<double>& x) {
            return jacobian_wz_d(p, unpack_wz(x), g, d);
        };
        CHECK(fd_jacobian_check(rf, jf, pack_wz(wz)) < 1e-5);
    }
}

TEST_CASE("degenerate discriminant is rejected by the Jacobian") {
    const Grid g = build_grid(-0.5, 0.5, 9);
    const ModelParams p = tst::default_params(g, 20.0);
    StateWZ s{std::vector<double>(9, 0.0), std::vector<double>(9, 0.0)};
    // force disc = (w-eps)^2 + 4z to zero at one node
    s.w[4] = p.eps;
    s.z[4] = 0.0;
    s.z[0] = 0.1;
    CHECK_THROWS_AS(jacobian_wz(p, s, g), DegenerateDiscriminant);
}

TEST_CASE("Jacobian at the trivial state crosses zero at lambda_1") {
    const Grid g = build_grid(-0.5, 0.5, 101);
    const double lam1 = eigen_weighted(g, tst::ones(g), 1)[0].value;
    const StateWZ z0{std::vector<double>(101, 0.0), std::vector<double>(101, 0.0)};
    const auto smallest = [&](double lam) {
        const BandedMatrix J = jacobian_wz(tst::default_params(g, lam), z0, g);
        return eigs_smallest_magnitude(J, 1)[0];
    };
    CHECK(smallest(lam1 - 0.5) * smallest(lam1 + 0.5) < 0.0);
    CHECK(std::fabs(smallest(lam1)) <= 1e-6 * lam1);
}

TEST_CASE("Jacobian commutes with reflection at symmetric states") {
    // symmetric coefficients, even weight, even (w,z): conjugation by the
    // node-reversal permutation leaves the Jacobian unchanged
    const Grid g = build_grid(-0.5, 0.5, 21);
    const int n = g.n;
    std::vector<double> m(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) m[i] = 1.0 + 0.3 * std::cos(2.0 * g.node(i));
    const ModelParams p = ModelParams::make(20.0, 3.0, 2.0, 2.0, 3.0, m, 18.0);  // b1=c2, b2=c1
    StateWZ s;
    s.w.resize(static_cast<size_t>(n));
    s.z.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double e = std::cos(M_PI * g.node(i));
        s.w[i] = 0.1 * e;
        s.z[i] = 0.4 * e * e + 0.05;
    }
    const BandedMatrix J = jacobian_wz(p, s, g);
    // packed index of (node i, component c) is 2i + c; reflection maps it
    // to 2(n-1-i) + c
    const int N = 2 * n;
    double worst = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const int ri = 2 * (n - 1 - i / 2) + i % 2;
            const int rj = 2 * (n - 1 - j / 2) + j % 2;
            worst = std::max(worst, std::fabs(J.get(i, j) - J.get(ri, rj)));
        }
    CHECK(worst <= 1e-9 * J.max_abs());
}

TEST_CASE("lambda derivative of the residual") {
    const Grid g = build_grid(-0.5, 0.5, 32);
    std::mt19937 rng(59);
    const ModelParams p = tst::default_params(g, 21.0);
    const StateWZ wz = wz_from_uv(tst::random_uv(g, rng), p.eps);
    const std::vector<double> dr = dresidual_wz_dlambda(p, wz, g);
    const double dl = 1e-6 * p.lambda;
    const std::vector<double> rp =
        pack_residual(residual_wz(p.with_lambda(p.lambda + dl), wz, g));
    const std::vector<double> rm =
        pack_residual(residual_wz(p.with_lambda(p.lambda - dl), wz, g));
    for (size_t i = 0; i < dr.size(); ++i)
        CHECK(std::fabs(dr[i] - (rp[i] - rm[i]) / (2.0 * dl)) <= 1e-7);
}

TEST_CASE("product bound constant recomputed independently") {
    const Grid g = build_grid(-0.5, 0.5, 64);
    std::vector<double> m(static_cast<size_t>(g.n));
    for (int i = 0; i < g.n; ++i) m[i] = 1.0 + 0.25 * std::sin(4.0 * g.node(i));
    const ModelParams p = ModelParams::make(20.0, 3.0, 2.0, 2.0, 1.0, m, 17.0);
    std::vector<double> m2(m);
    for (auto& c : m2) c *= c;
    const std::vector<double> w = solve_banded(discrete_laplacian(g), m2);
    const double M1 = p.lambda * p.lambda / (4.0 * p.b1) * sup_norm(w);
    CHECK(product_bound_M1(p, g) == doctest::Approx(M1).epsilon(1e-12));
    CHECK(product_bound_M1(p, g) > 0.0);
}

TEST_CASE("residual sup") {
    Residual r;
    r.r1 = {0.0, -3.0};
    r.r2 = {2.0, 1.0};
    CHECK(r.sup() == 3.0);
}
