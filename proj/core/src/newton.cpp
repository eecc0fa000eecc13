#include "skt/newton.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace skt {

namespace {

double sup(const std::vector<double>& f) {
    double s = 0.0;
    for (double x : f) s = std::max(s, std::fabs(x));
    return s;
}

bool all_finite(const std::vector<double>& f) {
    for (double x : f)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace

NewtonReport newton_solve(const ResidualFn& residual, const JacobianFn& jacobian,
                          std::vector<double> x0, const NewtonConfig& cfg,
                          const AdmissibleFn& admissible) {
    NewtonReport rep;
    const double target = cfg.tol_residual * cfg.residual_scale;
    std::vector<double> x = std::move(x0);
    std::vector<double> f = residual(x);
    double fn = sup(f);
    rep.residual_history.push_back(fn);
    rep.converged = fn <= target;

    for (int it = 0; it < cfg.max_iter && !rep.converged; ++it) {
        BandedLU lu;
        try {
            lu = BandedLU::factor(jacobian(x));
        } catch (const SingularMatrix& e) {
            throw SingularJacobian(std::string("newton_solve: ") + e.what());
        }
        rep.det_sign = lu.det_sign();
        std::vector<double> neg = f;
        for (auto& c : neg) c = -c;
        const std::vector<double> dx = lu.solve(neg);

        // At the attainable floor of the discretized residual the full
        // increment keeps shrinking while Armijo decrease becomes a coin
        // flip; accept the current state before the search can sputter.
        const double xsup = sup(x);
        const double dxn = sup(dx);
        if (dxn <= cfg.tol_step * std::max(1.0, xsup) && fn <= 1e6 * target) {
            rep.step_history.push_back(dxn);
            rep.iterations = it + 1;
            rep.converged = true;
            break;
        }

        // backtracking with the Armijo test on the residual sup-norm;
        // inadmissible or non-finite trial points just shrink the step
        double t = 1.0;
        bool accepted = false;
        std::vector<double> xt(x.size()), ft;
        double ftn = 0.0;
        while (t >= cfg.min_step) {
            for (size_t q = 0; q < x.size(); ++q) xt[q] = x[q] + t * dx[q];
            bool ok = !admissible || admissible(xt);
            if (ok) {
                ft = residual(xt);
                ok = all_finite(ft);
            }
            if (ok) {
                ftn = sup(ft);
                if (ftn <= (1.0 - 1e-4 * t) * fn) {
                    accepted = true;
                    break;
                }
            }
            t *= cfg.damping;
        }
        if (!accepted)
            throw LineSearchFailure("newton_solve: no admissible decrease above step fraction " +
                                    std::to_string(cfg.min_step) + " (residual " +
                                    std::to_string(fn) + ")");
        double stepn = 0.0;
        for (double c : dx) stepn = std::max(stepn, std::fabs(t * c));
        rep.step_history.push_back(stepn);
        x = xt;
        f = std::move(ft);
        fn = ftn;
        rep.residual_history.push_back(fn);
        rep.iterations = it + 1;
        if (fn <= target ||
            (stepn <= cfg.tol_step * std::max(1.0, sup(x)) && fn <= 1e6 * target))
            rep.converged = true;
    }
    if (!rep.converged)
        throw MaxIterExceeded("newton_solve: " + std::to_string(cfg.max_iter) +
                              " iterations, residual " + std::to_string(fn) + " vs target " +
                              std::to_string(target));
    // det_sign should describe the Jacobian at the solution
    try {
        BandedLU lu = BandedLU::factor(jacobian(x));
        rep.det_sign = lu.det_sign();
    } catch (const SingularMatrix&) {
        rep.det_sign = 0;  // exactly at a singular point
    }
    rep.final_state = std::move(x);
    rep.final_residual = fn;
    return rep;
}

std::optional<NewtonReport> try_newton(const ResidualFn& residual, const JacobianFn& jacobian,
                                       std::vector<double> x0, const NewtonConfig& cfg,
                                       const AdmissibleFn& admissible) {
    try {
        return newton_solve(residual, jacobian, std::move(x0), cfg, admissible);
    } catch (const MaxIterExceeded&) {
    } catch (const LineSearchFailure&) {
    } catch (const SingularJacobian&) {
    } catch (const NegativeDiscriminant&) {
    } catch (const DegenerateDiscriminant&) {
    }
    return std::nullopt;
}

double fd_jacobian_check(const ResidualFn& residual, const JacobianFn& jacobian,
                         const std::vector<double>& x) {
    const BandedMatrix J = jacobian(x);
    const int n = static_cast<int>(x.size());
    double jmax = std::max(J.max_abs(), 1e-300);
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
        const double step = 1e-6 * std::max(1.0, std::fabs(x[j]));
        std::vector<double> xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        const std::vector<double> fp = residual(xp);
        const std::vector<double> fm = residual(xm);
        for (int i = 0; i < n; ++i) {
            const double fd = (fp[i] - fm[i]) / (2.0 * step);
            worst = std::max(worst, std::fabs(fd - J.get(i, j)));
        }
    }
    return worst / jmax;
}

} // namespace skt
