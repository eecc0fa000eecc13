#pragma once

#include <vector>

#include "skt/banded.hpp"
#include "skt/grid.hpp"

namespace skt {

// Parameters of the stationary cross-diffusion competition system
//
//   (d2/dx2)[(1+alpha*v)u] + u(lambda*m(x) - b1*u - c1*v) = 0
//   (d2/dx2)[(1+alpha*u)v] + v(lambda*m(x) - b2*u - c2*v) = 0
//   u = v = 0 on the boundary,
//
// with both cross-diffusion coefficients equal to alpha. eps = 1/alpha.
// The eps = 0 instance (alpha = +inf) drives the scaled limit system.
struct ModelParams {
    double alpha = 0.0;
    double eps = 0.0;
    double b1 = 1.0, b2 = 1.0, c1 = 1.0, c2 = 1.0;
    std::vector<double> m;  // weight sampled at interior nodes
    double lambda = 0.0;

    // finite alpha > 0, eps = 1/alpha
    static ModelParams make(double alpha, double b1, double b2, double c1, double c2,
                            std::vector<double> m, double lambda);
    // eps = 0 limit (infinite cross-diffusion)
    static ModelParams limit(double b1, double b2, double c1, double c2,
                             std::vector<double> m, double lambda);

    ModelParams with_lambda(double lam) const {
        ModelParams q = *this;
        q.lambda = lam;
        return q;
    }
    ModelParams with_alpha(double a) const;

    // Throws ValidationError naming the violated precondition.
    void validate(const Grid& g) const;
};

struct StateUV {
    std::vector<double> u, v;
};

// Semilinear variables w = u - v, z = (eps + v)u. The recovery map back
// to (u,v) takes the positive root of the nodewise quadratic, so the
// discriminant (w-eps)^2 + 4z must stay nonnegative.
struct StateWZ {
    std::vector<double> w, z;
};

// u = (sqrt((w-eps)^2+4z) + w - eps)/2, v = (sqrt((w-eps)^2+4z) - w - eps)/2.
// Throws NegativeDiscriminant with the offending node index.
StateUV uv_from_wz(const StateWZ& s, double eps);

// Exact inverse of uv_from_wz on its range.
StateWZ wz_from_uv(const StateUV& s, double eps);

struct Residual {
    std::vector<double> r1, r2;
    double sup() const;
};

// Residual of the physical-variable system (A = discrete -d2/dx2):
//   r1 = -A((1+alpha*v) . u) + u . (lambda*m - b1*u - c1*v)
//   r2 = -A((1+alpha*u) . v) + v . (lambda*m - b2*u - c2*v)
Residual residual_uv(const ModelParams& p, const StateUV& s, const Grid& g);

// Residual of the same system after the transformation to the diffusion
// parameter d: (u,v) -> (u,v)/lambda, d = 1/lambda,
//   r1 = -A((d+alpha*v) . u) + u . (m - b1*u - c1*v)
//   r2 = -A((d+alpha*u) . v) + v . (m - b2*u - c2*v)
Residual residual_uv_d(const ModelParams& p, const StateUV& s, const Grid& g, double d);

// Residual in semilinear variables, with (u,v) recovered from (w,z):
//   r1 = -A w + lambda*m . w - u . (b1*u + c1*v) + v . (b2*u + c2*v)
//   r2 = -A z + eps * u . (lambda*m - b1*u - c1*v)
// Identities against residual_uv (free oracle): r1_wz = r1_uv - r2_uv
// and r2_wz = eps * r1_uv at matching states.
Residual residual_wz(const ModelParams& p, const StateWZ& s, const Grid& g);

// Residual of the diffusion-parameter form in its own semilinear
// variables w = u - v, z = (eps*d + v)u:
//   r1 = -d * A w + m . w - u . (b1*u + c1*v) + v . (b2*u + c2*v)
//   r2 = -A z + eps * u . (m - b1*u - c1*v)
// The recovery map uses the effective offset eps*d.
Residual residual_wz_d(const ModelParams& p, const StateWZ& s, const Grid& g, double d);

// Analytic Jacobian of residual_wz_d in the packed unknowns.
BandedMatrix jacobian_wz_d(const ModelParams& p, const StateWZ& s, const Grid& g, double d);

// Residual of the eps = 0 limit in scaled variables (W,Z) = (alpha*w, alpha^2*z):
//   r1 = -A W + lambda*m . W
//   r2 = -A Z + (lambda*m/2) . (sqrt((1-W)^2+4Z) - 1 + W)
// p.eps must be 0.
Residual residual_limit_WZ(const ModelParams& p, const StateWZ& s, const Grid& g);

// Interleaved packing used by the Newton and continuation layers:
// x = (w_0, z_0, w_1, z_1, ...), giving the Jacobian bandwidth 2.
std::vector<double> pack_wz(const StateWZ& s);
StateWZ unpack_wz(const std::vector<double>& x);
std::vector<double> pack_residual(const Residual& r);

// Analytic Jacobian of residual_wz with respect to the packed (w,z)
// unknowns; block-banded with kl = ku = 2. Chain-rule factors:
//   u_w = ((w-eps)/sqrt(disc) + 1)/2,  u_z = 1/sqrt(disc),
//   v_w = ((w-eps)/sqrt(disc) - 1)/2,  v_z = 1/sqrt(disc).
// Throws DegenerateDiscriminant if any disc < 1e-12.
BandedMatrix jacobian_wz(const ModelParams& p, const StateWZ& s, const Grid& g);

// d residual_wz / d lambda, packed: (m . w, eps * u . m) nodewise.
std::vector<double> dresidual_wz_dlambda(const ModelParams& p, const StateWZ& s, const Grid& g);

// Nodewise product bound constant M1 = (lambda^2 / (4 b1)) * ||(-A)^{-1} m^2||_inf.
// Every positive solution satisfies (1 + alpha v_i) u_i <= M1.
double product_bound_M1(const ModelParams& p, const Grid& g);

} // namespace skt
