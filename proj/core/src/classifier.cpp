#include "skt/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "skt/errors.hpp"

namespace skt {

namespace {

double sup(const std::vector<double>& f) {
    double s = 0.0;
    for (double x : f) s = std::max(s, std::fabs(x));
    return s;
}

bool constant_weight(const std::vector<double>& m) {
    for (double c : m)
        if (c != m[0]) return false;
    return true;
}

// Residual scale of the fixed-lambda Newton solves; segregated states
// carry residual entries of order lambda^2 m^2 / min(b1,c2).
NewtonConfig sweep_newton(double lambda, const ModelParams& p) {
    NewtonConfig nc;
    const double supm = sup(p.m);
    nc.residual_scale =
        std::max(1.0, lambda * lambda * supm * supm / std::min(p.b1, p.c2));
    return nc;
}

// Warm-started Newton hop from a converged state at alpha0 to alpha1,
// with the natural (w,z) rescalings of the selected branch family.
// Splits the jump geometrically when the direct hop fails.
bool hop_alpha(StateWZ& state, double alpha0, double alpha1, double lambda, int j,
               const ModelParams& base, const Grid& g, const NewtonConfig& nc, int depth) {
    const ModelParams pa = base.with_alpha(alpha1).with_lambda(lambda);
    const double r = alpha0 / alpha1;
    StateWZ s;
    s.w.resize(g.n);
    s.z.resize(g.n);
    for (int i = 0; i < g.n; ++i) {
        if (j >= 2) {
            // segregated: u - v stays O(1), z = (eps + v)u ~ eps * u
            s.w[i] = state.w[i];
            s.z[i] = state.z[i] * r;
        } else {
            // coexistence: u, v ~ 1/alpha
            s.w[i] = state.w[i] * r;
            s.z[i] = state.z[i] * r * r;
        }
    }
    ResidualFn res = [&](const std::vector<double>& x) {
        return pack_residual(residual_wz(pa, unpack_wz(x), g));
    };
    JacobianFn jac = [&](const std::vector<double>& x) {
        return jacobian_wz(pa, unpack_wz(x), g);
    };
    AdmissibleFn adm = [&](const std::vector<double>& x) {
        for (size_t i = 0; i + 1 < x.size(); i += 2) {
            const double we = x[i] - pa.eps;
            if (!(we * we + 4.0 * x[i + 1] > 1.5e-12)) return false;
        }
        return true;
    };
    auto rep = try_newton(res, jac, pack_wz(s), nc, adm);
    if (rep && rep->converged) {
        state = unpack_wz(rep->final_state);
        return true;
    }
    if (depth <= 0) return false;
    const double mid = std::sqrt(alpha0 * alpha1);
    return hop_alpha(state, alpha0, mid, lambda, j, base, g, nc, depth - 1) &&
           hop_alpha(state, mid, alpha1, lambda, j, base, g, nc, depth - 1);
}

} // namespace

SweepReport alpha_sweep(double lambda, const std::vector<double>& alphas,
                        const BranchPoint& seed, BranchSelector sel, const ModelParams& base,
                        const Grid& g, ClassifyThresholds thr) {
    SweepReport rep;
    rep.lambda = lambda;
    rep.selector = sel;
    rep.thresholds = thr;
    if (alphas.empty()) throw ValidationError("alpha_sweep: empty alpha list");
    if (!(alphas[0] > 0.0)) throw ValidationError("alpha_sweep: alphas must be positive");
    for (size_t i = 1; i < alphas.size(); ++i)
        if (!(alphas[i] > alphas[i - 1]))
            throw ValidationError("alpha_sweep: alphas must be strictly increasing");

    // below the principal weighted eigenvalue no positive solution exists
    const double lam1 = eigen_weighted(g, base.m, 1)[0].value;
    if (lambda <= lam1) {
        rep.note = "NoPositiveSolution: lambda <= lambda_1(m); no positive solution exists "
                   "at any alpha";
        return rep;
    }

    const LimitField U = limit_U(lambda, g, base.m);
    std::vector<double> wp, wm;
    bool have_seg = false;
    if (sel.j >= 2 && constant_weight(base.m)) {
        const double ell = 0.5 * (g.b - g.a);
        const Grid cg = build_grid(-ell, ell, g.n);
        try {
            const ShootingSolution sh =
                shoot_LS2(lambda, sel.j, sel.sign, ell, base.m[0], base.b1, base.c2, cg);
            wp.resize(g.n);
            wm.resize(g.n);
            for (int i = 0; i < g.n; ++i) {
                wp[i] = std::max(sh.w[i], 0.0);
                wm[i] = std::max(-sh.w[i], 0.0);
            }
            have_seg = true;
        } catch (const Error& e) {
            rep.note = std::string("segregation reference unavailable: ") + e.what();
        }
    }

    ContinuationConfig cc;
    cc.newton = sweep_newton(lambda, base);
    StateWZ state = seed.state;
    double prev_alpha = alphas[0];
    for (size_t k = 0; k < alphas.size(); ++k) {
        const double a = alphas[k];
        bool ok = true;
        if (k == 0 && std::fabs(seed.param - lambda) > 1e-9 * std::max(1.0, lambda)) {
            // tolerate a seed converged nearby; walk it to the sweep lambda
            try {
                const BranchPoint moved =
                    converge_at_param(seed, lambda, base.with_alpha(a), g, cc);
                state = moved.state;
            } catch (const Error&) {
                ok = false;
            }
        } else if (k > 0) {
            ok = hop_alpha(state, prev_alpha, a, lambda, sel.j, base, g, cc.newton, 6);
        } else {
            ok = hop_alpha(state, a, a, lambda, sel.j, base, g, cc.newton, 0);
        }
        if (!ok) {
            rep.broken = true;
            rep.note = "re-convergence failed between alpha = " + std::to_string(prev_alpha) +
                       " and alpha = " + std::to_string(a) + "; prefix retained";
            break;
        }
        const BranchPoint pt = make_branch_point(base.with_alpha(a), g, lambda, state, cc);
        state = pt.state;

        SweepMetrics mm;
        double uvmax = 0.0, gap = 0.0, dU = 0.0;
        for (int i = 0; i < g.n; ++i) {
            uvmax = std::max(uvmax, std::fabs(pt.uv.u[i] * pt.uv.v[i]));
            gap = std::max(gap, std::fabs(pt.uv.u[i] - pt.uv.v[i]));
            dU = std::max(dU, std::fabs(a * pt.uv.u[i] - U.values[i]));
        }
        mm.uv_sup = uvmax;
        mm.scaled_gap = a * gap;
        mm.alpha_sup_u = a * pt.norm_u.sup;
        mm.alpha_sup_v = a * pt.norm_v.sup;
        mm.dist_to_limit_U = dU;
        if (have_seg) {
            double du = 0.0, dv = 0.0;
            for (int i = 0; i < g.n; ++i) {
                du = std::max(du, std::fabs(pt.uv.u[i] - wp[i]));
                dv = std::max(dv, std::fabs(pt.uv.v[i] - wm[i]));
            }
            mm.dist_to_segregation = du + dv;
        }
        rep.alphas.push_back(a);
        rep.points.push_back(pt);
        rep.metrics.push_back(mm);
        prev_alpha = a;
    }

    if (rep.points.size() >= 3) {
        classify(rep);
        try {
            rep.fitted_rate = fit_rate(rep, rep.verdict == Verdict::CompleteSegregation
                                                ? SweepMetricKind::UVProduct
                                                : SweepMetricKind::DistLimitU);
        } catch (const DegenerateFit&) {
            rep.fitted_rate = 0.0;
        }
        if (rep.verdict != Verdict::Undetermined) {
            if (!rep.note.empty()) rep.note += "; ";
            rep.note += "verdict assumes the computed family converges as a whole";
        }
    }
    return rep;
}

BranchPoint locate_on_branch(double lambda, BranchSelector sel, const ModelParams& base,
                             const Grid& g, const ContinuationConfig& cfg) {
    ContinuationConfig cc = cfg;
    cc.window_lo = cc.window_hi = 0.0;
    if (cc.newton.residual_scale == 1.0)
        cc.newton.residual_scale = sweep_newton(lambda, base).residual_scale;
    if (sel.j == 0) {
        const BranchPoint pt = seed_primary_branch(base, g, 1e-3, cc);
        return converge_at_param(pt, lambda, base, g, cc);
    }
    if (sel.j < 2)
        throw ValidationError("locate_on_branch: j must be 0 (coexistence) or >= 2");
    if (sel.sign != 1 && sel.sign != -1)
        throw ValidationError("locate_on_branch: sign must be +1 or -1");

    const double lamj = eigen_weighted(g, base.m, sel.j)[sel.j - 1].value;
    const BranchPoint s0 = seed_primary_branch(base, g, 1e-3, cc);
    ContinuationConfig ct = cc;
    ct.detect = true;
    ct.window_lo = s0.param;
    ct.window_hi = std::max(lambda, lamj) * 1.3;
    const Branch C = trace_branch(s0, base, g, ct, "coexistence");

    const BifurcationRecord* best = nullptr;
    for (const auto& rec : C.bifurcations)
        if (rec.kind == BifKind::Pitchfork &&
            (!best || std::fabs(rec.param_at - lamj) < std::fabs(best->param_at - lamj)))
            best = &rec;
    if (!best || std::fabs(best->param_at - lamj) > 0.35 * lamj)
        throw SeedFailure("locate_on_branch: no pitchfork localized near the requested mode "
                          "(traced up to " + std::to_string(ct.window_hi) + ")");

    const double lam_base = best->param_at + std::max(0.01 * best->param_at, 0.05);
    const BranchPoint basept = converge_at_param(C, lam_base, base, g, cc);
    // the pair separation grows like sqrt of the offset from the branch
    // point, an O(1) scale here; switch_branch escalates from this kick
    const double delta = 0.02 * std::max(0.5, sup(pack_wz(basept.state)));
    auto halves = switch_branch(*best, basept, delta, base, g, cc);
    const BranchPoint& chosen = sel.sign > 0 ? halves.first : halves.second;
    return converge_at_param(chosen, lambda, base, g, cc);
}

Verdict classify(SweepReport& report) {
    if (report.points.size() < 3)
        throw ValidationError("classify: needs at least 3 sweep points");
    const ClassifyThresholds& th = report.thresholds;
    const size_t last = report.points.size() - 1;
    const double amax = report.alphas[last];

    double band_lo = std::numeric_limits<double>::infinity(), band_hi = 0.0;
    for (size_t i = 0; i <= last; ++i)
        if (report.alphas[i] >= amax / 10.0) {
            band_lo = std::min(band_lo, report.metrics[i].alpha_sup_u);
            band_hi = std::max(band_hi, report.metrics[i].alpha_sup_u);
        }
    const bool coex = band_hi < th.band_factor * band_lo &&
                      report.metrics[last].scaled_gap <
                          th.gap_tol * report.metrics[last].alpha_sup_u;

    const double su = report.points[last].norm_u.sup, sv = report.points[last].norm_v.sup;
    bool segr = su > 0.0 && sv > 0.0 &&
                report.metrics[last].uv_sup < th.product_tol * su * sv;
    for (size_t i = 0; i + 1 <= last && segr; ++i)
        if (!(report.metrics[i + 1].uv_sup < report.metrics[i].uv_sup)) segr = false;

    if (coex && !segr)
        report.verdict = Verdict::SmallCoexistence;
    else if (segr && !coex)
        report.verdict = Verdict::CompleteSegregation;
    else
        report.verdict = Verdict::Undetermined;
    return report.verdict;
}

std::vector<double> metric_values(const SweepReport& report, SweepMetricKind metric) {
    std::vector<double> out;
    out.reserve(report.metrics.size());
    for (const auto& mm : report.metrics) {
        switch (metric) {
            case SweepMetricKind::UVProduct: out.push_back(mm.uv_sup); break;
            case SweepMetricKind::ScaledGap: out.push_back(mm.scaled_gap); break;
            case SweepMetricKind::AlphaSupU: out.push_back(mm.alpha_sup_u); break;
            case SweepMetricKind::DistLimitU: out.push_back(mm.dist_to_limit_U); break;
            case SweepMetricKind::DistSegregation: out.push_back(mm.dist_to_segregation); break;
        }
    }
    return out;
}

double fit_rate(const SweepReport& report, SweepMetricKind metric) {
    const std::vector<double> vals = metric_values(report, metric);
    std::vector<double> la, lv;
    for (size_t i = 0; i < vals.size(); ++i)
        if (vals[i] > 0.0) {
            la.push_back(std::log(report.alphas[i]));
            lv.push_back(std::log(vals[i]));
        }
    if (la.size() < 4)
        throw DegenerateFit("fit_rate: needs at least 4 positive metric values, have " +
                            std::to_string(la.size()));
    const auto [vmin, vmax] = std::minmax_element(lv.begin(), lv.end());
    if (*vmax - *vmin < std::log(10.0))
        throw DegenerateFit("fit_rate: metric spans less than one decade");
    double ma = 0.0, mv = 0.0;
    for (size_t i = 0; i < la.size(); ++i) {
        ma += la[i];
        mv += lv[i];
    }
    ma /= static_cast<double>(la.size());
    mv /= static_cast<double>(la.size());
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < la.size(); ++i) {
        sxx += (la[i] - ma) * (la[i] - ma);
        sxy += (la[i] - ma) * (lv[i] - mv);
    }
    if (!(sxx > 0.0)) throw DegenerateFit("fit_rate: degenerate alpha spacing");
    return -sxy / sxx;
}

} // namespace skt
