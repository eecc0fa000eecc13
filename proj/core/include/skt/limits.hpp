#pragma once

#include <vector>

#include "skt/eigen.hpp"
#include "skt/grid.hpp"

namespace skt {

// A positive solution of one of the limiting scalar problems.
enum class LimitKind { Z0, zeta0, Psi, theta, Zj };

struct LimitField {
    LimitKind kind = LimitKind::Z0;
    double param = 0.0;  // lambda, or s for Zj
    std::vector<double> values;
};

// Unique positive solution of
//   -Z'' = (lambda m(x)/2)(sqrt(4Z+1) - 1)
// for lambda > lambda_1(m), by Newton from an eigenfunction predictor
// with natural continuation in lambda as fallback.
// Throws NoPositiveSolution when lambda <= lambda_1(m).
LimitField solve_Z0(double lambda, const Grid& g, const std::vector<double>& m);

// U = (sqrt(4 Z0(lambda) + 1) - 1)/2; the scaled common limit profile of
// coexistence states. Solves (d2/dx2)[(1+U)U] + lambda m U = 0; the
// plug-back residual is re-verified.
LimitField limit_U(double lambda, const Grid& g, const std::vector<double>& m);

// Unique positive solution of -q'' = m(x) sqrt(q) via monotone
// sub/super-solution iteration with Newton polishing.
// kind == zeta0 returns q itself; kind == Psi returns sqrt(q), the
// positive solution of -(Psi^2)'' = m Psi.
// Throws IterationStall if the monotone gap fails to contract.
LimitField solve_sublinear(LimitKind kind, const Grid& g, const std::vector<double>& m);

// Diagnostics of the monotone iteration, exposed for property tests.
struct MonotoneProbe {
    bool sub_nondecreasing = true;
    bool super_nonincreasing = true;
    bool ordered = true;       // sub <= super at every sweep
    std::vector<double> gaps;  // sup(super - sub) per sweep
};
MonotoneProbe sublinear_monotone_probe(const Grid& g, const std::vector<double>& m, int sweeps);

// Unique positive solution of the Dirichlet logistic problem
//   theta'' + theta (lambda m(x) - theta) = 0
// for lambda > lambda_1(m). Throws NoPositiveSolution otherwise.
LimitField solve_logistic(double lambda, const Grid& g, const std::vector<double>& m);

// Sign-changing solution classes of the segregation limit equation
//   w'' + lambda m w - b1 w_+^2 + c2 w_-^2 = 0,  w(-ell)=w(ell)=0
// on (-ell, ell) with constant m, classified by the number of interior
// zeros (j-1) and the sign of w'(-ell).
struct ShootingSolution {
    double lambda = 0.0;
    double slope0 = 0.0;        // w'(-ell)
    int zeros = 0;              // interior sign changes
    int sign_at_center = 0;     // sign of w'(0)
    std::vector<double> w;      // sampled on the grid nodes
    std::vector<double> zero_positions;
    std::vector<double> zero_slopes;  // w' at each interior crossing
    double boundary_defect = 0.0;     // |w(ell)| achieved by the shooter
};

// Adaptive RK45 shooting with slope bisection. sign = +1 selects
// w'(-ell) > 0, sign = -1 the mirror class. The class exists only for
// lambda > lambda_j = (j pi / (2 ell))^2 / m_const; otherwise
// NoSolutionInClass is thrown. BisectionFailure signals a failed
// bracket or stalled slope search.
ShootingSolution shoot_LS2(double lambda, int j, int sign, double ell, double m_const,
                           double b1, double c2, const Grid& g);

// Grid Newton counterpart of shoot_LS2 (same equation, finite
// differences, eigenfunction predictor with continuation from just
// above lambda_j). Cross-validates the shooter. m may vary in space.
// Throws NewtonFailure / NoSolutionInClass.
LimitField grid_solve_LS2(double lambda, int j, int sign, const Grid& g,
                          double b1, double c2, const std::vector<double>& m);

// Unique positive solution of
//   -Z'' = (lambda_j m/2) h(Z, 1 - s Phi_j),  h(Z,xi) = sqrt(4Z+xi^2) - xi,
// continued in s from Z_j(0) = Z0(lambda_j). Phi_j is the sup-normalized
// j-th weighted eigenfunction.
LimitField solve_Zj(int j, double s, const Grid& g, const std::vector<double>& m);

// Nodewise sandwich check for solve_Zj at small |s|:
//   (1+|s|)^2 Z0(lambda_j/(1+|s|)) < Z_j(s) < (1-|s|)^2 Z0(lambda_j/(1-|s|)).
// Returns the worst signed margins (positive = strict inequality holds).
struct SandwichMargins {
    double lower = 0.0;  // min over nodes of Zj - lower bound
    double upper = 0.0;  // min over nodes of upper bound - Zj
    bool holds() const { return lower > 0.0 && upper > 0.0; }
};
SandwichMargins sandwich_margins(int j, double s, const Grid& g, const std::vector<double>& m);

} // namespace skt
