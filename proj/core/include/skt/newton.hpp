#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "skt/banded.hpp"
#include "skt/errors.hpp"

namespace skt {

struct NewtonConfig {
    double tol_residual = 1e-10;  // sup-norm target, scaled by residual_scale
    double tol_step = 1e-12;      // increment stall test, relative to max(1, ||x||_inf)
    int max_iter = 50;
    double damping = 0.5;   // backtracking factor
    double min_step = 1e-4; // line search gives up below this fraction of a full step
    // Residual magnitude of the problem at hand; the convergence test is
    // ||f||_inf <= tol_residual * residual_scale. Default keeps the
    // absolute criterion.
    double residual_scale = 1.0;
};

struct NewtonReport {
    bool converged = false;
    int iterations = 0;
    double final_residual = 0.0;
    std::vector<double> final_state;
    int det_sign = 0;  // sign of det of the Jacobian at the final state
    std::vector<double> residual_history;
    std::vector<double> step_history;
};

using ResidualFn = std::function<std::vector<double>(const std::vector<double>&)>;
using JacobianFn = std::function<BandedMatrix(const std::vector<double>&)>;
using AdmissibleFn = std::function<bool(const std::vector<double>&)>;

// Damped Newton iteration with an Armijo line search on the residual
// sup-norm. Steps leaving the admissible set (e.g. violating the
// discriminant floor of the (w,z) recovery) are rejected inside the line
// search rather than projected back.
// Throws MaxIterExceeded, LineSearchFailure, SingularJacobian.
NewtonReport newton_solve(const ResidualFn& residual, const JacobianFn& jacobian,
                          std::vector<double> x0, const NewtonConfig& cfg = {},
                          const AdmissibleFn& admissible = {});

// newton_solve with solver failures converted to std::nullopt.
std::optional<NewtonReport> try_newton(const ResidualFn& residual, const JacobianFn& jacobian,
                                       std::vector<double> x0, const NewtonConfig& cfg = {},
                                       const AdmissibleFn& admissible = {});

// Max discrepancy between the analytic Jacobian and central differences
// (step 1e-6, scaled per component), relative to the largest Jacobian
// entry. Dense comparison; intended for tests and diagnostics.
double fd_jacobian_check(const ResidualFn& residual, const JacobianFn& jacobian,
                         const std::vector<double>& x);

} // namespace skt
