#include "skt/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "skt/errors.hpp"

namespace skt {

namespace {

// (A q)_i for the eliminated tridiagonal -d2/dx2
std::vector<double> apply_neg_laplacian(const Grid& g, const std::vector<double>& q) {
    const int n = g.n;
    const double ih2 = 1.0 / (g.h * g.h);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        double s = 2.0 * q[i];
        if (i > 0) s -= q[i - 1];
        if (i < n - 1) s -= q[i + 1];
        y[i] = s * ih2;
    }
    return y;
}

} // namespace

ModelParams ModelParams::make(double alpha, double b1, double b2, double c1, double c2,
                              std::vector<double> m, double lambda) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw ValidationError("ModelParams::make: alpha must be finite and positive");
    ModelParams p;
    p.alpha = alpha;
    p.eps = 1.0 / alpha;
    p.b1 = b1;
    p.b2 = b2;
    p.c1 = c1;
    p.c2 = c2;
    p.m = std::move(m);
    p.lambda = lambda;
    return p;
}

ModelParams ModelParams::limit(double b1, double b2, double c1, double c2, std::vector<double> m,
                               double lambda) {
    ModelParams p;
    p.alpha = std::numeric_limits<double>::infinity();
    p.eps = 0.0;
    p.b1 = b1;
    p.b2 = b2;
    p.c1 = c1;
    p.c2 = c2;
    p.m = std::move(m);
    p.lambda = lambda;
    return p;
}

ModelParams ModelParams::with_alpha(double a) const {
    if (!(a > 0.0) || !std::isfinite(a))
        throw ValidationError("ModelParams::with_alpha: alpha must be finite and positive");
    ModelParams q = *this;
    q.alpha = a;
    q.eps = 1.0 / a;
    return q;
}

void ModelParams::validate(const Grid& g) const {
    if (static_cast<int>(m.size()) != g.n)
        throw ValidationError("ModelParams: weight has " + std::to_string(m.size()) +
                              " samples, grid has " + std::to_string(g.n) + " interior nodes");
    for (int i = 0; i < g.n; ++i)
        if (!(m[i] > 0.0) || !std::isfinite(m[i]))
            throw ValidationError("ModelParams: weight must be positive and finite, violated "
                                  "at node " + std::to_string(i));
    if (!(b1 > 0.0) || !(b2 > 0.0) || !(c1 > 0.0) || !(c2 > 0.0))
        throw ValidationError("ModelParams: competition coefficients must be positive");
    if (!(eps >= 0.0) || !std::isfinite(eps))
        throw ValidationError("ModelParams: eps must be finite and nonnegative");
    if (eps > 0.0 && std::fabs(eps * alpha - 1.0) > 1e-12)
        throw ValidationError("ModelParams: eps and alpha are inconsistent");
    if (!std::isfinite(lambda)) throw ValidationError("ModelParams: lambda must be finite");
}

StateUV uv_from_wz(const StateWZ& s, double eps) {
    const size_t n = s.w.size();
    if (s.z.size() != n) throw ValidationError("uv_from_wz: w and z lengths differ");
    StateUV r;
    r.u.resize(n);
    r.v.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double we = s.w[i] - eps;
        double disc = we * we + 4.0 * s.z[i];
        if (disc < 0.0) {
            const double scale = std::max(1.0, we * we + 4.0 * std::fabs(s.z[i]));
            if (disc > -1e-13 * scale)
                disc = 0.0;  // roundoff at a tangency
            else
                throw NegativeDiscriminant("uv_from_wz: (w-eps)^2+4z = " + std::to_string(disc) +
                                           " at node " + std::to_string(i));
        }
        const double rt = std::sqrt(disc);
        r.u[i] = 0.5 * (rt + s.w[i] - eps);
        r.v[i] = 0.5 * (rt - s.w[i] - eps);
    }
    return r;
}

StateWZ wz_from_uv(const StateUV& s, double eps) {
    const size_t n = s.u.size();
    if (s.v.size() != n) throw ValidationError("wz_from_uv: u and v lengths differ");
    StateWZ r;
    r.w.resize(n);
    r.z.resize(n);
    for (size_t i = 0; i < n; ++i) {
        r.w[i] = s.u[i] - s.v[i];
        r.z[i] = (eps + s.v[i]) * s.u[i];
    }
    return r;
}

double Residual::sup() const {
    double s = 0.0;
    for (double x : r1) s = std::max(s, std::fabs(x));
    for (double x : r2) s = std::max(s, std::fabs(x));
    return s;
}

Residual residual_uv(const ModelParams& p, const StateUV& s, const Grid& g) {
    const int n = g.n;
    std::vector<double> q1(n), q2(n);
    for (int i = 0; i < n; ++i) {
        q1[i] = (1.0 + p.alpha * s.v[i]) * s.u[i];
        q2[i] = (1.0 + p.alpha * s.u[i]) * s.v[i];
    }
    const std::vector<double> a1 = apply_neg_laplacian(g, q1);
    const std::vector<double> a2 = apply_neg_laplacian(g, q2);
    Residual r;
    r.r1.resize(n);
    r.r2.resize(n);
    for (int i = 0; i < n; ++i) {
        r.r1[i] = -a1[i] + s.u[i] * (p.lambda * p.m[i] - p.b1 * s.u[i] - p.c1 * s.v[i]);
        r.r2[i] = -a2[i] + s.v[i] * (p.lambda * p.m[i] - p.b2 * s.u[i] - p.c2 * s.v[i]);
    }
    return r;
}

Residual residual_uv_d(const ModelParams& p, const StateUV& s, const Grid& g, double d) {
    const int n = g.n;
    std::vector<double> q1(n), q2(n);
    for (int i = 0; i < n; ++i) {
        q1[i] = (d + p.alpha * s.v[i]) * s.u[i];
        q2[i] = (d + p.alpha * s.u[i]) * s.v[i];
    }
    const std::vector<double> a1 = apply_neg_laplacian(g, q1);
    const std::vector<double> a2 = apply_neg_laplacian(g, q2);
    Residual r;
    r.r1.resize(n);
    r.r2.resize(n);
    for (int i = 0; i < n; ++i) {
        r.r1[i] = -a1[i] + s.u[i] * (p.m[i] - p.b1 * s.u[i] - p.c1 * s.v[i]);
        r.r2[i] = -a2[i] + s.v[i] * (p.m[i] - p.b2 * s.u[i] - p.c2 * s.v[i]);
    }
    return r;
}

Residual residual_wz(const ModelParams& p, const StateWZ& s, const Grid& g) {
    const int n = g.n;
    const StateUV uv = uv_from_wz(s, p.eps);
    const std::vector<double> aw = apply_neg_laplacian(g, s.w);
    const std::vector<double> az = apply_neg_laplacian(g, s.z);
    Residual r;
    r.r1.resize(n);
    r.r2.resize(n);
    for (int i = 0; i < n; ++i) {
        const double u = uv.u[i], v = uv.v[i];
        r.r1[i] = -aw[i] + p.lambda * p.m[i] * s.w[i] - u * (p.b1 * u + p.c1 * v) +
                  v * (p.b2 * u + p.c2 * v);
        r.r2[i] = -az[i] + p.eps * u * (p.lambda * p.m[i] - p.b1 * u - p.c1 * v);
    }
    return r;
}

Residual residual_wz_d(const ModelParams& p, const StateWZ& s, const Grid& g, double d) {
    const int n = g.n;
    const StateUV uv = uv_from_wz(s, p.eps * d);
    const std::vector<double> aw = apply_neg_laplacian(g, s.w);
    const std::vector<double> az = apply_neg_laplacian(g, s.z);
    Residual r;
    r.r1.resize(n);
    r.r2.resize(n);
    for (int i = 0; i < n; ++i) {
        const double u = uv.u[i], v = uv.v[i];
        r.r1[i] = -d * aw[i] + p.m[i] * s.w[i] - u * (p.b1 * u + p.c1 * v) +
                  v * (p.b2 * u + p.c2 * v);
        r.r2[i] = -az[i] + p.eps * u * (p.m[i] - p.b1 * u - p.c1 * v);
    }
    return r;
}

BandedMatrix jacobian_wz_d(const ModelParams& p, const StateWZ& s, const Grid& g, double d) {
    const int n = g.n;
    const double dd = 2.0 / (g.h * g.h), off = 1.0 / (g.h * g.h);
    const double ed = p.eps * d;
    BandedMatrix J(2 * n, 2, 2);
    for (int i = 0; i < n; ++i) {
        const double we = s.w[i] - ed;
        const double disc = we * we + 4.0 * s.z[i];
        if (disc < 1e-12)
            throw DegenerateDiscriminant("jacobian_wz_d: discriminant " + std::to_string(disc) +
                                         " at node " + std::to_string(i) +
                                         " is below the differentiability floor");
        const double rt = std::sqrt(disc);
        const double u = 0.5 * (rt + s.w[i] - ed);
        const double v = 0.5 * (rt - s.w[i] - ed);
        const double u_w = 0.5 * (we / rt + 1.0), u_z = 1.0 / rt;
        const double v_w = 0.5 * (we / rt - 1.0), v_z = 1.0 / rt;

        const double g1_u = 2.0 * p.b1 * u + (p.c1 - p.b2) * v;
        const double g1_v = (p.c1 - p.b2) * u - 2.0 * p.c2 * v;
        const double g2_u = p.m[i] - 2.0 * p.b1 * u - p.c1 * v;
        const double g2_v = -p.c1 * u;

        const int rw = 2 * i, rz = 2 * i + 1;
        J.at(rw, rw) = -d * dd + p.m[i] - (g1_u * u_w + g1_v * v_w);
        J.at(rw, rz) = -(g1_u * u_z + g1_v * v_z);
        J.at(rz, rw) = p.eps * (g2_u * u_w + g2_v * v_w);
        J.at(rz, rz) = -dd + p.eps * (g2_u * u_z + g2_v * v_z);
        if (i > 0) {
            J.at(rw, rw - 2) = d * off;
            J.at(rz, rz - 2) = off;
        }
        if (i < n - 1) {
            J.at(rw, rw + 2) = d * off;
            J.at(rz, rz + 2) = off;
        }
    }
    return J;
}

Residual residual_limit_WZ(const ModelParams& p, const StateWZ& s, const Grid& g) {
    if (p.eps != 0.0)
        throw ValidationError("residual_limit_WZ: params must carry eps = 0");
    const int n = g.n;
    const std::vector<double> aw = apply_neg_laplacian(g, s.w);
    const std::vector<double> az = apply_neg_laplacian(g, s.z);
    Residual r;
    r.r1.resize(n);
    r.r2.resize(n);
    for (int i = 0; i < n; ++i) {
        const double W = s.w[i], Z = s.z[i];
        const double disc = (1.0 - W) * (1.0 - W) + 4.0 * Z;
        if (disc < 0.0)
            throw NegativeDiscriminant("residual_limit_WZ: (1-W)^2+4Z < 0 at node " +
                                       std::to_string(i));
        r.r1[i] = -aw[i] + p.lambda * p.m[i] * W;
        r.r2[i] = -az[i] + 0.5 * p.lambda * p.m[i] * (std::sqrt(disc) - 1.0 + W);
    }
    return r;
}

std::vector<double> pack_wz(const StateWZ& s) {
    const size_t n = s.w.size();
    std::vector<double> x(2 * n);
    for (size_t i = 0; i < n; ++i) {
        x[2 * i] = s.w[i];
        x[2 * i + 1] = s.z[i];
    }
    return x;
}

StateWZ unpack_wz(const std::vector<double>& x) {
    if (x.size() % 2 != 0) throw ValidationError("unpack_wz: odd packed length");
    const size_t n = x.size() / 2;
    StateWZ s;
    s.w.resize(n);
    s.z.resize(n);
    for (size_t i = 0; i < n; ++i) {
        s.w[i] = x[2 * i];
        s.z[i] = x[2 * i + 1];
    }
    return s;
}

std::vector<double> pack_residual(const Residual& r) {
    const size_t n = r.r1.size();
    std::vector<double> x(2 * n);
    for (size_t i = 0; i < n; ++i) {
        x[2 * i] = r.r1[i];
        x[2 * i + 1] = r.r2[i];
    }
    return x;
}

BandedMatrix jacobian_wz(const ModelParams& p, const StateWZ& s, const Grid& g) {
    const int n = g.n;
    const double dd = 2.0 / (g.h * g.h), off = 1.0 / (g.h * g.h);
    BandedMatrix J(2 * n, 2, 2);
    for (int i = 0; i < n; ++i) {
        const double we = s.w[i] - p.eps;
        const double disc = we * we + 4.0 * s.z[i];
        if (disc < 1e-12)
            throw DegenerateDiscriminant("jacobian_wz: discriminant " + std::to_string(disc) +
                                         " at node " + std::to_string(i) +
                                         " is below the differentiability floor");
        const double rt = std::sqrt(disc);
        const double u = 0.5 * (rt + s.w[i] - p.eps);
        const double v = 0.5 * (rt - s.w[i] - p.eps);
        const double u_w = 0.5 * (we / rt + 1.0), u_z = 1.0 / rt;
        const double v_w = 0.5 * (we / rt - 1.0), v_z = 1.0 / rt;

        const double g1_u = 2.0 * p.b1 * u + (p.c1 - p.b2) * v;
        const double g1_v = (p.c1 - p.b2) * u - 2.0 * p.c2 * v;
        const double g2_u = p.lambda * p.m[i] - 2.0 * p.b1 * u - p.c1 * v;
        const double g2_v = -p.c1 * u;

        const int rw = 2 * i, rz = 2 * i + 1;
        J.at(rw, rw) = -dd + p.lambda * p.m[i] - (g1_u * u_w + g1_v * v_w);
        J.at(rw, rz) = -(g1_u * u_z + g1_v * v_z);
        J.at(rz, rw) = p.eps * (g2_u * u_w + g2_v * v_w);
        J.at(rz, rz) = -dd + p.eps * (g2_u * u_z + g2_v * v_z);
        if (i > 0) {
            J.at(rw, rw - 2) = off;
            J.at(rz, rz - 2) = off;
        }
        if (i < n - 1) {
            J.at(rw, rw + 2) = off;
            J.at(rz, rz + 2) = off;
        }
    }
    return J;
}

std::vector<double> dresidual_wz_dlambda(const ModelParams& p, const StateWZ& s, const Grid& g) {
    const int n = g.n;
    const StateUV uv = uv_from_wz(s, p.eps);
    std::vector<double> d(2 * n);
    for (int i = 0; i < n; ++i) {
        d[2 * i] = p.m[i] * s.w[i];
        d[2 * i + 1] = p.eps * uv.u[i] * p.m[i];
    }
    return d;
}

double product_bound_M1(const ModelParams& p, const Grid& g) {
    const int n = g.n;
    std::vector<double> m2(n);
    for (int i = 0; i < n; ++i) m2[i] = p.m[i] * p.m[i];
    const BandedMatrix a = discrete_laplacian(g);
    const std::vector<double> s = solve_banded(a, m2);
    double mx = 0.0;
    for (double x : s) mx = std::max(mx, std::fabs(x));
    return p.lambda * p.lambda / (4.0 * p.b1) * mx;
}

} // namespace skt
