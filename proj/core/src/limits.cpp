#include "skt/limits.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "skt/banded.hpp"
#include "skt/errors.hpp"
#include "skt/newton.hpp"

namespace skt {

namespace {

double sup(const std::vector<double>& f) {
    double s = 0.0;
    for (double x : f) s = std::max(s, std::fabs(x));
    return s;
}

// Newton for a scalar semilinear problem -A x + f(x) = 0 on the grid.
// f and fp act nodewise.
std::vector<double> scalar_newton(const Grid& g, const std::function<double(int, double)>& f,
                                  const std::function<double(int, double)>& fp,
                                  std::vector<double> seed, double residual_scale,
                                  const AdmissibleFn& admissible = {}) {
    const int n = g.n;
    const double dd = 2.0 / (g.h * g.h), off = 1.0 / (g.h * g.h);
    ResidualFn res = [&](const std::vector<double>& x) {
        std::vector<double> r(n);
        for (int i = 0; i < n; ++i) {
            double ax = dd * x[i];
            if (i > 0) ax -= off * x[i - 1];
            if (i < n - 1) ax -= off * x[i + 1];
            r[i] = -ax + f(i, x[i]);
        }
        return r;
    };
    JacobianFn jac = [&](const std::vector<double>& x) {
        BandedMatrix J(n, 1, 1);
        for (int i = 0; i < n; ++i) {
            J.at(i, i) = -dd + fp(i, x[i]);
            if (i > 0) J.at(i, i - 1) = off;
            if (i < n - 1) J.at(i, i + 1) = off;
        }
        return J;
    };
    NewtonConfig cfg;
    cfg.residual_scale = std::max(1.0, residual_scale);
    NewtonReport rep = newton_solve(res, jac, std::move(seed), cfg, admissible);
    return rep.final_state;
}

struct WeightedMode {
    double value;
    std::vector<double> vec;
};

WeightedMode weighted_mode(const Grid& g, const std::vector<double>& m, int j) {
    auto pairs = eigen_weighted(g, m, j);
    return {pairs[j - 1].value, pairs[j - 1].vector};
}

// core of solve_Z0: Newton solve at one lambda from a given seed
std::vector<double> z0_newton(double lambda, const Grid& g, const std::vector<double>& m,
                              std::vector<double> seed) {
    double scale = 1.0;
    for (int i = 0; i < g.n; ++i)
        scale = std::max(scale, std::fabs(0.5 * lambda * m[i] *
                                          (std::sqrt(4.0 * std::max(seed[i], 0.0) + 1.0) - 1.0)));
    auto f = [&](int i, double z) {
        return 0.5 * lambda * m[i] * (std::sqrt(4.0 * z + 1.0) - 1.0);
    };
    auto fp = [&](int i, double z) { return lambda * m[i] / std::sqrt(4.0 * z + 1.0); };
    AdmissibleFn adm = [](const std::vector<double>& x) {
        for (double z : x)
            if (!(4.0 * z + 1.0 > 1e-10)) return false;
        return true;
    };
    return scalar_newton(g, f, fp, std::move(seed), scale, adm);
}

int count_sign_changes(const std::vector<double>& w, double floor_abs) {
    int changes = 0, last = 0;
    for (double x : w) {
        if (std::fabs(x) <= floor_abs) continue;
        const int s = x > 0.0 ? 1 : -1;
        if (last != 0 && s != last) ++changes;
        last = s;
    }
    return changes;
}

int first_sign(const std::vector<double>& w, double floor_abs) {
    for (double x : w)
        if (std::fabs(x) > floor_abs) return x > 0.0 ? 1 : -1;
    return 0;
}

// ---- adaptive Dormand-Prince integrator for the shooting problem ----

struct ShotTrace {
    std::vector<double> zero_positions;
    std::vector<double> zero_slopes;
    double w_end = 0.0;
    double wp_end = 0.0;
    double wp_center = 0.0;
    double max_abs_w = 0.0;
    bool escaped = false;
    std::vector<double> samples;  // at grid nodes when a grid is supplied
};

struct ShotProblem {
    double lambda, m, b1, c2;
    double ell;

    void fderiv(const double y[2], double out[2]) const {
        const double w = y[0];
        const double wp = std::max(w, 0.0), wm = std::max(-w, 0.0);
        out[0] = y[1];
        out[1] = -lambda * m * w + b1 * wp * wp - c2 * wm * wm;
    }

    // classical RK4 from (x0,y0) over [x0,x] in nsub substeps; used to
    // refine zero crossings inside one accepted step
    void rk4_to(double x0, const double y0[2], double x, int nsub, double out[2]) const {
        double y[2] = {y0[0], y0[1]};
        const double h = (x - x0) / nsub;
        double k1[2], k2[2], k3[2], k4[2], t[2];
        for (int s = 0; s < nsub; ++s) {
            fderiv(y, k1);
            t[0] = y[0] + 0.5 * h * k1[0];
            t[1] = y[1] + 0.5 * h * k1[1];
            fderiv(t, k2);
            t[0] = y[0] + 0.5 * h * k2[0];
            t[1] = y[1] + 0.5 * h * k2[1];
            fderiv(t, k3);
            t[0] = y[0] + h * k3[0];
            t[1] = y[1] + h * k3[1];
            fderiv(t, k4);
            y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        out[0] = y[0];
        out[1] = y[1];
    }

    // integrate from -ell to ell with slope sigma at the left end;
    // records zero crossings (up to max_zeros, then keeps integrating),
    // interior node samples when grid != nullptr, and the end state.
    ShotTrace integrate(double sigma, const Grid* grid) const {
        ShotTrace tr;
        const double rtol = 1e-12, atol = 1e-16;
        const double wcap = 12.0 * (lambda * m / std::min(b1, c2) + 1.0);
        double x = -ell;
        double y[2] = {0.0, sigma};
        double h = std::min(1e-4, 2.0 * ell / 64.0);
        const double hmax = 2.0 * ell / 64.0;
        int next_node = 0;
        bool center_pending = true;
        const int nlim = grid ? grid->n : 0;

        // Dormand-Prince coefficients
        static const double A[7][6] = {
            {0, 0, 0, 0, 0, 0},
            {1.0 / 5, 0, 0, 0, 0, 0},
            {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
            {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
            {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
            {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
            {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
        static const double B5[7] = {35.0 / 384,      0, 500.0 / 1113, 125.0 / 192,
                                     -2187.0 / 6784, 11.0 / 84, 0};
        static const double B4[7] = {5179.0 / 57600,    0,           7571.0 / 16695, 393.0 / 640,
                                     -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

        long steps = 0;
        while (x < ell) {
            if (++steps > 4000000)
                throw BisectionFailure("shoot: integrator exceeded its step budget");
            double target = ell;
            if (grid && next_node < nlim) target = std::min(target, grid->node(next_node));
            if (center_pending) target = std::min(target, 0.0);
            bool clamped = false;
            if (x + h >= target - 1e-15 * ell) {
                h = target - x;
                clamped = true;
            }
            if (h <= 0.0) h = 1e-15 * ell;

            double k[7][2], yt[2], y5[2], y4[2];
            fderiv(y, k[0]);
            for (int s = 1; s < 7; ++s) {
                yt[0] = y[0];
                yt[1] = y[1];
                for (int q = 0; q < s; ++q) {
                    yt[0] += h * A[s][q] * k[q][0];
                    yt[1] += h * A[s][q] * k[q][1];
                }
                fderiv(yt, k[s]);
            }
            y5[0] = y[0];
            y5[1] = y[1];
            y4[0] = y[0];
            y4[1] = y[1];
            for (int s = 0; s < 7; ++s) {
                y5[0] += h * B5[s] * k[s][0];
                y5[1] += h * B5[s] * k[s][1];
                y4[0] += h * B4[s] * k[s][0];
                y4[1] += h * B4[s] * k[s][1];
            }
            double err = 0.0;
            for (int c = 0; c < 2; ++c) {
                const double tol =
                    atol + rtol * std::max(std::fabs(y[c]), std::fabs(y5[c]));
                err = std::max(err, std::fabs(y5[c] - y4[c]) / tol);
            }
            if (err > 1.0 && h > 1e-14 * ell) {
                h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
                continue;
            }

            const double x1 = x + h;
            // zero crossing inside (x, x1]?
            if ((y[0] != 0.0 && y[0] * y5[0] < 0.0) || (y5[0] == 0.0 && y[0] != 0.0)) {
                double lo = x, hi = x1;
                double probe[2];
                for (int it = 0; it < 90; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid == lo || mid == hi) break;
                    rk4_to(x, y, mid, 8, probe);
                    if ((probe[0] > 0.0) == (y[0] > 0.0))
                        lo = mid;
                    else
                        hi = mid;
                }
                const double zx = 0.5 * (lo + hi);
                rk4_to(x, y, zx, 8, probe);
                tr.zero_positions.push_back(zx);
                tr.zero_slopes.push_back(probe[1]);
            }

            x = x1;
            y[0] = y5[0];
            y[1] = y5[1];
            tr.max_abs_w = std::max(tr.max_abs_w, std::fabs(y[0]));

            if (clamped && center_pending && std::fabs(x) <= 1e-14 * ell) {
                tr.wp_center = y[1];
                center_pending = false;
            }
            if (grid && next_node < nlim && std::fabs(x - grid->node(next_node)) <= 1e-13 * ell) {
                tr.samples.push_back(y[0]);
                ++next_node;
            }
            if (std::fabs(y[0]) > wcap) {
                tr.escaped = true;
                break;
            }
            if (!clamped || h < 1e-13 * ell)
                h = std::min(hmax, h * std::min(5.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
        }
        tr.w_end = y[0];
        tr.wp_end = y[1];
        return tr;
    }
};

} // namespace

LimitField solve_Z0(double lambda, const Grid& g, const std::vector<double>& m) {
    const WeightedMode m1 = weighted_mode(g, m, 1);
    if (!(lambda > m1.value))
        throw NoPositiveSolution("solve_Z0: lambda = " + std::to_string(lambda) +
                                 " not above lambda_1 = " + std::to_string(m1.value));
    double cur = std::min(lambda, m1.value * 1.05);
    double gap = cur - m1.value;
    std::vector<double> Z(g.n);

    // seed just above onset, with retreat toward lambda_1 if Newton balks
    // or falls back onto the trivial root (which solves the equation too)
    for (int attempt = 0;; ++attempt) {
        const double t = gap / cur;
        for (int i = 0; i < g.n; ++i) Z[i] = t * m1.vec[i];
        bool ok = false;
        try {
            Z = z0_newton(cur, g, m, Z);
            ok = sup(Z) > 0.05 * t;
        } catch (const Error&) {
        }
        if (ok) break;
        if (attempt >= 40)
            throw ConvergenceFailure("solve_Z0: no nontrivial solution found near onset");
        gap *= 0.5;
        cur = m1.value + gap;
    }

    // walk lambda up. The amplitude grows like lambda (lambda - lambda_1):
    // linearly in the gap near onset, quadratically in lambda far out.
    // Undershooting the predictor is what drops Newton into the trivial
    // basin, so the scale errs high near onset and collapses are rejected.
    while (cur < lambda) {
        double next = std::min(lambda, cur * 1.6);
        for (;;) {
            const double s = next * (next - m1.value) / (cur * (cur - m1.value));
            std::vector<double> pred(g.n);
            for (int i = 0; i < g.n; ++i) pred[i] = Z[i] * s;
            const double psup = sup(pred);
            bool ok = false;
            try {
                pred = z0_newton(next, g, m, pred);
                ok = sup(pred) > 0.05 * psup;
            } catch (const Error&) {
            }
            if (ok) {
                Z = std::move(pred);
                cur = next;
                break;
            }
            next = std::sqrt(cur * next);  // halve the log step
            if (next / cur - 1.0 < 1e-8)
                throw ConvergenceFailure("solve_Z0: continuation stalled at lambda = " +
                                         std::to_string(cur));
        }
    }
    double zmin = Z.empty() ? 0.0 : Z[0];
    for (double z : Z) zmin = std::min(zmin, z);
    if (!(zmin > 0.0))
        throw NoPositiveSolution("solve_Z0: converged state is not strictly positive");
    LimitField out;
    out.kind = LimitKind::Z0;
    out.param = lambda;
    out.values = std::move(Z);
    return out;
}

LimitField limit_U(double lambda, const Grid& g, const std::vector<double>& m) {
    LimitField z0 = solve_Z0(lambda, g, m);
    const int n = g.n;
    LimitField out;
    out.kind = LimitKind::Z0;  // overwritten below; U has no own tag in LimitKind
    out.param = lambda;
    out.values.resize(n);
    for (int i = 0; i < n; ++i)
        out.values[i] = 0.5 * (std::sqrt(4.0 * z0.values[i] + 1.0) - 1.0);

    // plug-back: (d2/dx2)[(1+U)U] + lambda m U should vanish
    const double dd = 2.0 / (g.h * g.h), off = 1.0 / (g.h * g.h);
    std::vector<double> q(n);
    for (int i = 0; i < n; ++i) q[i] = (1.0 + out.values[i]) * out.values[i];
    double worst = 0.0, scale = 1.0;
    for (int i = 0; i < n; ++i) {
        double aq = dd * q[i];
        if (i > 0) aq -= off * q[i - 1];
        if (i < n - 1) aq -= off * q[i + 1];
        const double r = -aq + lambda * m[i] * out.values[i];
        worst = std::max(worst, std::fabs(r));
        scale = std::max(scale, std::fabs(lambda * m[i] * out.values[i]));
    }
    if (worst > 1e-7 * scale)
        throw ConvergenceFailure("limit_U: plug-back residual " + std::to_string(worst) +
                                 " exceeds 1e-7 of the forcing scale");
    return out;
}

LimitField solve_sublinear(LimitKind kind, const Grid& g, const std::vector<double>& m) {
    if (kind != LimitKind::zeta0 && kind != LimitKind::Psi)
        throw ValidationError("solve_sublinear: kind must be zeta0 or Psi");
    const int n = g.n;
    const WeightedMode m1 = weighted_mode(g, m, 1);

    // subsolution phi_1/lambda_1^2, supersolution C (-A)^{-1} m with C = ||e||_inf
    const BandedMatrix A = discrete_laplacian(g);
    const std::vector<double> e = solve_banded(A, m);
    const double C = sup(e);
    std::vector<double> lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
        lo[i] = m1.vec[i] / (m1.value * m1.value);
        hi[i] = C * e[i];
    }
    for (int i = 0; i < n; ++i)
        if (lo[i] > hi[i])
            throw IterationStall("solve_sublinear: sub and super solutions are not ordered");

    const double scale = sup(hi);
    BandedLU lu = BandedLU::factor(A);
    auto sweep = [&](std::vector<double>& q) {
        std::vector<double> rhs(n);
        for (int i = 0; i < n; ++i) rhs[i] = m[i] * std::sqrt(std::max(q[i], 0.0));
        q = lu.solve(rhs);
    };
    double prev_gap = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 400; ++it) {
        sweep(lo);
        sweep(hi);
        double gapv = 0.0;
        for (int i = 0; i < n; ++i) gapv = std::max(gapv, hi[i] - lo[i]);
        if (gapv <= 1e-3 * scale) break;
        if (it > 50 && gapv > 0.999 * prev_gap)
            throw IterationStall("solve_sublinear: monotone gap stopped contracting at " +
                                 std::to_string(gapv));
        prev_gap = gapv;
    }

    // Newton polish from the midpoint; q stays positive along the branch
    std::vector<double> q(n);
    for (int i = 0; i < n; ++i) q[i] = 0.5 * (lo[i] + hi[i]);
    auto f = [&](int i, double x) { return m[i] * std::sqrt(std::max(x, 0.0)); };
    auto fp = [&](int i, double x) { return 0.5 * m[i] / std::sqrt(std::max(x, 1e-300)); };
    AdmissibleFn adm = [](const std::vector<double>& x) {
        for (double c : x)
            if (!(c > 0.0)) return false;
        return true;
    };
    q = scalar_newton(g, f, fp, std::move(q), sup(m), adm);

    LimitField out;
    out.kind = kind;
    out.param = 0.0;
    if (kind == LimitKind::zeta0) {
        out.values = std::move(q);
    } else {
        out.values.resize(n);
        for (int i = 0; i < n; ++i) out.values[i] = std::sqrt(q[i]);
    }
    return out;
}

MonotoneProbe sublinear_monotone_probe(const Grid& g, const std::vector<double>& m, int sweeps) {
    const int n = g.n;
    const WeightedMode m1 = weighted_mode(g, m, 1);
    const BandedMatrix A = discrete_laplacian(g);
    const std::vector<double> e = solve_banded(A, m);
    const double C = sup(e);
    std::vector<double> lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
        lo[i] = m1.vec[i] / (m1.value * m1.value);
        hi[i] = C * e[i];
    }
    BandedLU lu = BandedLU::factor(A);
    MonotoneProbe probe;
    const double slack = 1e-12 * C;
    for (int it = 0; it < sweeps; ++it) {
        std::vector<double> rlo(n), rhi(n);
        for (int i = 0; i < n; ++i) {
            rlo[i] = m[i] * std::sqrt(std::max(lo[i], 0.0));
            rhi[i] = m[i] * std::sqrt(std::max(hi[i], 0.0));
        }
        const std::vector<double> nlo = lu.solve(rlo);
        const std::vector<double> nhi = lu.solve(rhi);
        double gapv = 0.0;
        for (int i = 0; i < n; ++i) {
            if (nlo[i] < lo[i] - slack) probe.sub_nondecreasing = false;
            if (nhi[i] > hi[i] + slack) probe.super_nonincreasing = false;
            if (nlo[i] > nhi[i] + slack) probe.ordered = false;
            gapv = std::max(gapv, nhi[i] - nlo[i]);
        }
        probe.gaps.push_back(gapv);
        lo = nlo;
        hi = nhi;
    }
    return probe;
}

LimitField solve_logistic(double lambda, const Grid& g, const std::vector<double>& m) {
    const WeightedMode m1 = weighted_mode(g, m, 1);
    if (!(lambda > m1.value))
        throw NoPositiveSolution("solve_logistic: lambda = " + std::to_string(lambda) +
                                 " not above lambda_1 = " + std::to_string(m1.value));
    auto solve_at = [&](double lam, std::vector<double> seed) {
        auto f = [&, lam](int i, double th) { return th * (lam * m[i] - th); };
        auto fp = [&, lam](int i, double th) { return lam * m[i] - 2.0 * th; };
        return scalar_newton(g, f, fp, std::move(seed), lam * lam * sup(m) * sup(m));
    };
    double cur = std::min(lambda, m1.value * 1.1);
    double gap = cur - m1.value;
    std::vector<double> th(g.n);
    for (int attempt = 0;; ++attempt) {
        for (int i = 0; i < g.n; ++i) th[i] = 0.7 * gap * m1.vec[i];
        bool ok = false;
        try {
            th = solve_at(cur, th);
            ok = sup(th) > 0.05 * 0.7 * gap;  // reject collapse onto the trivial root
        } catch (const Error&) {
        }
        if (ok) break;
        if (attempt >= 40)
            throw ConvergenceFailure("solve_logistic: no nontrivial solution found near onset");
        gap *= 0.5;
        cur = m1.value + gap;
    }
    while (cur < lambda) {
        double next = std::min(lambda, cur * 1.5);
        for (;;) {
            std::vector<double> pred(g.n);
            const double growth = (next - m1.value) / (cur - m1.value);
            for (int i = 0; i < g.n; ++i) pred[i] = th[i] * growth;
            const double psup = sup(pred);
            bool ok = false;
            try {
                pred = solve_at(next, pred);
                ok = sup(pred) > 0.05 * psup;
            } catch (const Error&) {
            }
            if (ok) {
                th = std::move(pred);
                cur = next;
                break;
            }
            next = std::sqrt(cur * next);
            if (next / cur - 1.0 < 1e-8)
                throw ConvergenceFailure("solve_logistic: continuation stalled at lambda = " +
                                         std::to_string(cur));
        }
    }
    double tmin = th.empty() ? 0.0 : th[0];
    for (double x : th) tmin = std::min(tmin, x);
    if (!(tmin > 0.0))
        throw NoPositiveSolution("solve_logistic: converged state is not strictly positive");
    LimitField out;
    out.kind = LimitKind::theta;
    out.param = lambda;
    out.values = std::move(th);
    return out;
}

ShootingSolution shoot_LS2(double lambda, int j, int sign, double ell, double m_const, double b1,
                           double c2, const Grid& g) {
    if (j < 1) throw ValidationError("shoot_LS2: class index j must be >= 1");
    if (sign != 1 && sign != -1) throw ValidationError("shoot_LS2: sign must be +1 or -1");
    if (!(ell > 0.0) || !(m_const > 0.0) || !(b1 > 0.0) || !(c2 > 0.0))
        throw ValidationError("shoot_LS2: ell, m, b1, c2 must be positive");
    if (std::fabs(g.a + ell) > 1e-12 * ell || std::fabs(g.b - ell) > 1e-12 * ell)
        throw ValidationError("shoot_LS2: grid must cover (-ell, ell)");
    const double lam_j = (j * M_PI / (2.0 * ell)) * (j * M_PI / (2.0 * ell)) / m_const;
    if (!(lambda > lam_j))
        throw NoSolutionInClass("shoot_LS2: class " + std::to_string(j) + " needs lambda > " +
                                std::to_string(lam_j));

    // the mirror class is the reflection w -> -w with b1 and c2 swapped
    const double eb1 = sign > 0 ? b1 : c2;
    const double ec2 = sign > 0 ? c2 : b1;
    ShotProblem prob{lambda, m_const, eb1, ec2, ell};

    // predicate: at slope sigma the j-th zero after the left endpoint
    // occurs at or before x = ell; monotone in sigma (arch widths grow
    // with the conserved energy). The probe shots use the same
    // node-clamped stepping as the final one so the bracket transfers.
    auto jth_zero_inside = [&](double sigma) {
        const ShotTrace tr = prob.integrate(sigma, &g);
        return static_cast<int>(tr.zero_positions.size()) >= j;
    };

    double lo = 1e-8;
    if (!jth_zero_inside(lo))
        throw BisectionFailure("shoot_LS2: no bracket at vanishing slope; class empty on this "
                               "interval");
    double hi = 1.0;
    int doublings = 0;
    while (jth_zero_inside(hi)) {
        hi *= 2.0;
        if (++doublings > 90)
            throw BisectionFailure("shoot_LS2: slope bracket did not close under doubling");
    }
    for (int it = 0; it < 140; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (jth_zero_inside(mid))
            lo = mid;
        else
            hi = mid;
    }
    const double sigma = 0.5 * (lo + hi);

    ShotTrace tr = prob.integrate(sigma, &g);
    if (static_cast<int>(tr.samples.size()) != g.n)
        throw BisectionFailure("shoot_LS2: node sampling incomplete (" +
                               std::to_string(tr.samples.size()) + " of " + std::to_string(g.n) +
                               ")");
    // drop a crossing that is the right boundary zero itself
    while (!tr.zero_positions.empty() &&
           tr.zero_positions.back() > ell - 1e-9 * (2.0 * ell)) {
        tr.zero_positions.pop_back();
        tr.zero_slopes.pop_back();
    }
    if (static_cast<int>(tr.zero_positions.size()) != j - 1)
        throw BisectionFailure("shoot_LS2: expected " + std::to_string(j - 1) +
                               " interior zeros, found " +
                               std::to_string(tr.zero_positions.size()));

    ShootingSolution out;
    out.lambda = lambda;
    out.slope0 = sign * sigma;
    out.zeros = j - 1;
    out.w = std::move(tr.samples);
    out.zero_positions = std::move(tr.zero_positions);
    out.zero_slopes = std::move(tr.zero_slopes);
    out.boundary_defect = std::fabs(tr.w_end);
    double wp0 = tr.wp_center;
    if (sign < 0) {
        for (auto& x : out.w) x = -x;
        for (auto& s : out.zero_slopes) s = -s;
        wp0 = -wp0;
    }
    out.sign_at_center =
        std::fabs(wp0) <= 1e-8 * std::max(1.0, tr.max_abs_w) ? 0 : (wp0 > 0.0 ? 1 : -1);
    return out;
}

LimitField grid_solve_LS2(double lambda, int j, int sign, const Grid& g, double b1, double c2,
                          const std::vector<double>& m) {
    if (j < 1) throw ValidationError("grid_solve_LS2: class index j must be >= 1");
    if (sign != 1 && sign != -1) throw ValidationError("grid_solve_LS2: sign must be +1 or -1");
    const WeightedMode mj = weighted_mode(g, m, j);
    const double lam_j = mj.value;
    if (!(lambda > lam_j))
        throw NoSolutionInClass("grid_solve_LS2: class " + std::to_string(j) +
                                " needs lambda > " + std::to_string(lam_j));
    const int n = g.n;
    const double msup = sup(m);

    auto solve_at = [&](double lam, std::vector<double> seed) {
        auto f = [&, lam](int i, double w) {
            const double wp = std::max(w, 0.0), wm = std::max(-w, 0.0);
            return lam * m[i] * w - b1 * wp * wp + c2 * wm * wm;
        };
        auto fp = [&, lam](int i, double w) {
            const double wp = std::max(w, 0.0), wm = std::max(-w, 0.0);
            return lam * m[i] - 2.0 * b1 * wp - 2.0 * c2 * wm;
        };
        return scalar_newton(g, f, fp, std::move(seed),
                             lam * lam * msup * msup / std::min(b1, c2));
    };
    auto in_class = [&](const std::vector<double>& w) {
        const double s = sup(w);
        if (s < 1e-8) return false;
        const double floor_abs = 1e-9 * s;
        return count_sign_changes(w, floor_abs) == j - 1 && first_sign(w, floor_abs) == sign;
    };

    double cur = std::min(lambda, lam_j * 1.02);
    double gap = cur - lam_j;
    const double amp0 = 1.0 / std::max(b1, c2);
    std::vector<double> w(n);
    bool seeded = false;
    for (int attempt = 0; attempt < 60 && !seeded; ++attempt) {
        for (double mult : {0.5, 0.15, 1.5, 0.05, 5.0}) {
            const double t = sign * mult * gap * amp0;
            std::vector<double> seed(n);
            for (int i = 0; i < n; ++i) seed[i] = t * mj.vec[i];
            try {
                seed = solve_at(cur, seed);
            } catch (const Error&) {
                continue;
            }
            if (in_class(seed)) {
                w = std::move(seed);
                seeded = true;
                break;
            }
        }
        if (!seeded) {
            gap *= 0.5;
            cur = lam_j + gap;
            if (gap < 1e-10 * lam_j)
                throw NewtonFailure("grid_solve_LS2: seeding failed arbitrarily close to the "
                                    "bifurcation point");
        }
    }
    if (!seeded) throw NewtonFailure("grid_solve_LS2: no admissible seed found");

    while (cur < lambda) {
        double next = std::min(lambda, cur * 1.25);
        for (;;) {
            std::vector<double> pred = w;
            const double growth = (next - lam_j) / (cur - lam_j);
            for (auto& x : pred) x *= growth;
            bool ok = false;
            try {
                pred = solve_at(next, pred);
                ok = in_class(pred);
            } catch (const Error&) {
            }
            if (ok) {
                w = std::move(pred);
                cur = next;
                break;
            }
            next = std::sqrt(cur * next);
            if (next / cur - 1.0 < 1e-9)
                throw NewtonFailure("grid_solve_LS2: continuation left the class at lambda = " +
                                    std::to_string(cur));
        }
    }
    LimitField out;
    out.kind = LimitKind::Zj;  // generic field; tagged by the caller context
    out.param = lambda;
    out.values = std::move(w);
    return out;
}

LimitField solve_Zj(int j, double s, const Grid& g, const std::vector<double>& m) {
    if (j < 1) throw ValidationError("solve_Zj: class index j must be >= 1");
    if (!(std::fabs(s) < 0.98))
        throw ValidationError("solve_Zj: |s| must stay below 0.98 to keep 1 - s Phi_j positive");
    const WeightedMode mj = weighted_mode(g, m, j);
    const double lam_j = mj.value;
    const int n = g.n;

    LimitField z = solve_Z0(lam_j, g, m);
    z.kind = LimitKind::Zj;

    auto solve_at = [&](double sv, std::vector<double> seed) {
        auto xi = [&](int i) { return 1.0 - sv * mj.vec[i]; };
        auto f = [&, sv](int i, double Z) {
            const double x = xi(i);
            return 0.5 * lam_j * m[i] * (std::sqrt(4.0 * Z + x * x) - x);
        };
        auto fp = [&, sv](int i, double Z) {
            const double x = xi(i);
            return lam_j * m[i] / std::sqrt(4.0 * Z + x * x);
        };
        AdmissibleFn adm = [&, sv](const std::vector<double>& xv) {
            for (int i = 0; i < static_cast<int>(xv.size()); ++i) {
                const double x = 1.0 - sv * mj.vec[i];
                if (!(4.0 * xv[i] + x * x > 1e-12)) return false;
            }
            return true;
        };
        return scalar_newton(g, f, fp, std::move(seed), lam_j * sup(m), adm);
    };

    double cur = 0.0;
    const double dir = s >= 0.0 ? 1.0 : -1.0;
    while (cur != s) {
        double step = std::min(0.02, std::fabs(s - cur));
        for (;;) {
            const double next = step >= std::fabs(s - cur) ? s : cur + dir * step;
            try {
                z.values = solve_at(next, z.values);
                cur = next;
                break;
            } catch (const Error&) {
                step *= 0.5;
                if (step < 1e-7)
                    throw ConvergenceFailure("solve_Zj: continuation in s stalled at s = " +
                                             std::to_string(cur));
            }
        }
    }
    z.param = s;
    for (int i = 0; i < n; ++i)
        if (!(z.values[i] > 0.0))
            throw NoPositiveSolution("solve_Zj: state lost positivity at node " +
                                     std::to_string(i));
    return z;
}

SandwichMargins sandwich_margins(int j, double s, const Grid& g, const std::vector<double>& m) {
    const double as = std::fabs(s);
    if (!(as > 0.0)) throw ValidationError("sandwich_margins: s must be nonzero");
    const WeightedMode mj = weighted_mode(g, m, j);
    const LimitField zj = solve_Zj(j, s, g, m);
    const LimitField zlo = solve_Z0(mj.value / (1.0 + as), g, m);
    const LimitField zhi = solve_Z0(mj.value / (1.0 - as), g, m);
    const double clo = (1.0 + as) * (1.0 + as);
    const double chi = (1.0 - as) * (1.0 - as);
    SandwichMargins out;
    out.lower = std::numeric_limits<double>::infinity();
    out.upper = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.n; ++i) {
        out.lower = std::min(out.lower, zj.values[i] - clo * zlo.values[i]);
        out.upper = std::min(out.upper, chi * zhi.values[i] - zj.values[i]);
    }
    return out;
}

} // namespace skt
