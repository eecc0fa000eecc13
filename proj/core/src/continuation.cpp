#include "skt/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "skt/eigen.hpp"
#include "skt/errors.hpp"

namespace skt {

namespace {

double sup(const std::vector<double>& f) {
    double s = 0.0;
    for (double x : f) s = std::max(s, std::fabs(x));
    return s;
}

double hdot(double h, const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return h * s;
}

std::vector<double> residual_at(const ModelParams& p, const Grid& g, double lam,
                                const std::vector<double>& x) {
    return pack_residual(residual_wz(p.with_lambda(lam), unpack_wz(x), g));
}

BandedMatrix jacobian_at(const ModelParams& p, const Grid& g, double lam,
                         const std::vector<double>& x) {
    return jacobian_wz(p.with_lambda(lam), unpack_wz(x), g);
}

// discriminant floor of the (w,z) -> (u,v) recovery, kept a little above
// the differentiability floor of jacobian_wz
bool admissible_packed(double eps, const std::vector<double>& x) {
    for (size_t i = 0; i + 1 < x.size(); i += 2) {
        const double we = x[i] - eps;
        if (!(we * we + 4.0 * x[i + 1] > 1.5e-12)) return false;
    }
    return true;
}

// branch tangent: (-J^{-1} dF/dlambda, 1), h-weighted unit norm, oriented
// along prev when given
std::vector<double> tangent_at(const ModelParams& p, const Grid& g, double lam,
                               const StateWZ& s, const std::vector<double>* prev) {
    const std::vector<double> b = dresidual_wz_dlambda(p.with_lambda(lam), s, g);
    std::vector<double> t(b.size() + 1, 0.0);
    try {
        const BandedLU lu = BandedLU::factor(jacobian_wz(p.with_lambda(lam), s, g));
        const std::vector<double> y = lu.solve(b);
        for (size_t i = 0; i < y.size(); ++i) t[i] = -y[i];
        t.back() = 1.0;
    } catch (const Error&) {
        // singular at a crossing: reuse the previous direction if we have one
        if (prev && prev->size() == t.size()) return *prev;
        t.back() = 1.0;
    }
    std::vector<double> tx(t.begin(), t.end() - 1);
    const double nrm = std::sqrt(hdot(g.h, tx, tx) + t.back() * t.back());
    for (auto& c : t) c /= nrm;
    if (prev && prev->size() == t.size()) {
        const std::vector<double> px(prev->begin(), prev->end() - 1);
        const std::vector<double> txn(t.begin(), t.end() - 1);
        if (hdot(g.h, px, txn) + prev->back() * t.back() < 0.0)
            for (auto& c : t) c = -c;
    }
    return t;
}

struct Corrected {
    std::vector<double> x;
    double lam = 0.0;
    int iters = 0;
};

// Newton on the extended system { residual(x,lam) = 0,
// h <t_x, x-x0> + t_lam (lam-lam0) - ds = 0 } via bordered elimination
Corrected correct_extended(const std::vector<double>& x0, double lam0,
                           const std::vector<double>& t, double ds, const ModelParams& p,
                           const Grid& g, const ContinuationConfig& cfg) {
    const size_t nx = x0.size();
    std::vector<double> tx(t.begin(), t.end() - 1);
    const double tl = t.back();

    std::vector<double> x(nx);
    for (size_t i = 0; i < nx; ++i) x[i] = x0[i] + ds * tx[i];
    double lam = lam0 + ds * tl;
    if (!admissible_packed(p.eps, x))
        throw StepFailure("corrector: predictor leaves the admissible set");

    const double tolF = cfg.newton.tol_residual * std::max(1.0, cfg.newton.residual_scale);
    const double tolN = 1e-10 * std::max(1.0, std::fabs(ds));
    std::vector<double> F = residual_at(p, g, lam, x);
    auto constraint = [&](const std::vector<double>& xx, double ll) {
        std::vector<double> dx(nx);
        for (size_t i = 0; i < nx; ++i) dx[i] = xx[i] - x0[i];
        return hdot(g.h, tx, dx) + tl * (ll - lam0) - ds;
    };
    double N = constraint(x, lam);

    Corrected out;
    for (int it = 0; it < cfg.newton.max_iter; ++it) {
        if (sup(F) <= tolF && std::fabs(N) <= tolN) {
            out.x = std::move(x);
            out.lam = lam;
            out.iters = it;
            return out;
        }
        BandedLU lu;
        try {
            lu = BandedLU::factor(jacobian_at(p, g, lam, x));
        } catch (const SingularMatrix& e) {
            throw StepFailure(std::string("corrector: singular Jacobian: ") + e.what());
        }
        const std::vector<double> b = dresidual_wz_dlambda(p.with_lambda(lam), unpack_wz(x), g);
        const std::vector<double> y1 = lu.solve(b);
        const std::vector<double> y2 = lu.solve(F);
        const double denom = tl - hdot(g.h, tx, y1);
        if (std::fabs(denom) < 1e-300)
            throw StepFailure("corrector: bordered system is numerically singular");
        const double dlam = (hdot(g.h, tx, y2) - N) / denom;
        std::vector<double> dx(nx);
        for (size_t i = 0; i < nx; ++i) dx[i] = -y2[i] - y1[i] * dlam;

        const double phi0 = sup(F) + std::fabs(N);
        double step = 1.0;
        bool accepted = false;
        std::vector<double> xt(nx), Ft;
        double lt = 0.0, Nt = 0.0;
        while (step >= cfg.newton.min_step) {
            for (size_t i = 0; i < nx; ++i) xt[i] = x[i] + step * dx[i];
            lt = lam + step * dlam;
            if (admissible_packed(p.eps, xt)) {
                Ft = residual_at(p, g, lt, xt);
                Nt = constraint(xt, lt);
                bool finite = std::isfinite(Nt);
                for (double c : Ft)
                    if (!std::isfinite(c)) finite = false;
                if (finite && sup(Ft) + std::fabs(Nt) <= (1.0 - 1e-4 * step) * phi0) {
                    accepted = true;
                    break;
                }
            }
            step *= cfg.newton.damping;
        }
        if (!accepted) throw StepFailure("corrector: line search stalled");
        x = xt;
        lam = lt;
        F = std::move(Ft);
        N = Nt;
    }
    throw StepFailure("corrector: iteration budget exhausted");
}

double ext_distance(const Grid& g, const BranchPoint& a, const BranchPoint& b) {
    const std::vector<double> xa = pack_wz(a.state), xb = pack_wz(b.state);
    std::vector<double> d(xa.size());
    for (size_t i = 0; i < xa.size(); ++i) d[i] = xb[i] - xa[i];
    const double dl = b.param - a.param;
    return std::sqrt(hdot(g.h, d, d) + dl * dl);
}

std::vector<double> secant_tangent(const Grid& g, const BranchPoint& a, const BranchPoint& b) {
    const std::vector<double> xa = pack_wz(a.state), xb = pack_wz(b.state);
    std::vector<double> t(xa.size() + 1);
    for (size_t i = 0; i < xa.size(); ++i) t[i] = xb[i] - xa[i];
    t.back() = b.param - a.param;
    std::vector<double> tx(t.begin(), t.end() - 1);
    const double nrm = std::sqrt(hdot(g.h, tx, tx) + t.back() * t.back());
    if (!(nrm > 0.0)) throw StepFailure("secant_tangent: coincident branch points");
    for (auto& c : t) c /= nrm;
    return t;
}

// unit sup-norm, sign fixed so the largest-magnitude w-component
// (first attained) is positive
void normalize_kernel(std::vector<double>& k) {
    const double s = sup(k);
    if (s > 0.0)
        for (auto& c : k) c /= s;
    double best = 0.0;
    size_t bi = 0;
    for (size_t i = 0; i + 1 < k.size(); i += 2)
        if (std::fabs(k[i]) > best * (1.0 + 1e-12)) {
            best = std::fabs(k[i]);
            bi = i;
        }
    if (best == 0.0)  // no w-content: fix the sign on the z-part instead
        for (size_t i = 1; i < k.size(); i += 2)
            if (std::fabs(k[i]) > best * (1.0 + 1e-12)) {
                best = std::fabs(k[i]);
                bi = i;
            }
    if (best > 0.0 && k[bi] < 0.0)
        for (auto& c : k) c = -c;
}

bool eig_sign_flip(const BranchPoint& a, const BranchPoint& b) {
    if (a.eigs.empty() || b.eigs.empty()) return false;
    return (a.eigs[0] < 0.0) != (b.eigs[0] < 0.0);
}

bool det_flip(const BranchPoint& a, const BranchPoint& b) {
    return a.det_sign != 0 && b.det_sign != 0 && a.det_sign != b.det_sign;
}

bool crossing_between(const BranchPoint& a, const BranchPoint& b) {
    return eig_sign_flip(a, b) || det_flip(a, b);
}

bool is_trivial_state(const BranchPoint& pt) {
    return sup(pack_wz(pt.state)) <= 1e-12;
}

// A fixed-parameter warm start that undershoots the local amplitude can drop
// Newton into the basin of a smaller solution family: the trivial state, or
// the symmetric branch when walking a bifurcated one (which loses the w field
// while z survives). Flag a solve whose result loses the warm start's scale,
// overall or in either packed field.
bool captured_by_smaller_family(const std::vector<double>& x0, const std::vector<double>& x1) {
    const double s0 = sup(x0);
    if (!(s0 > 0.0)) return false;
    if (sup(x1) <= 0.05 * s0) return true;
    for (size_t f = 0; f < 2; ++f) {
        double f0 = 0.0, f1 = 0.0;
        for (size_t i = f; i < x0.size(); i += 2) {
            f0 = std::max(f0, std::fabs(x0[i]));
            f1 = std::max(f1, std::fabs(x1[i]));
        }
        if (f0 > 1e-6 * s0 && f1 <= 0.02 * f0) return true;
    }
    return false;
}

} // namespace

BranchPoint make_branch_point(const ModelParams& p, const Grid& g, double lambda,
                              const StateWZ& s, const ContinuationConfig& cfg) {
    const ModelParams pl = p.with_lambda(lambda);
    pl.validate(g);
    ResidualFn res = [&](const std::vector<double>& x) { return residual_at(p, g, lambda, x); };
    JacobianFn jac = [&](const std::vector<double>& x) { return jacobian_at(p, g, lambda, x); };
    AdmissibleFn adm = [&](const std::vector<double>& x) { return admissible_packed(p.eps, x); };
    NewtonReport rep = newton_solve(res, jac, pack_wz(s), cfg.newton, adm);

    BranchPoint pt;
    pt.param = lambda;
    pt.state = unpack_wz(rep.final_state);
    pt.uv = uv_from_wz(pt.state, p.eps);
    pt.norm_u = norms(pt.uv.u, g);
    pt.norm_v = norms(pt.uv.v, g);
    pt.det_sign = rep.det_sign;
    const int k = std::min(cfg.eig_count, 2 * g.n);
    pt.eigs = eigs_smallest_magnitude(jacobian_at(p, g, lambda, rep.final_state), k);
    const double tolneg =
        -1e-12 * std::max({1.0, pt.norm_u.sup, pt.norm_v.sup});
    double mn = 0.0;
    for (double c : pt.uv.u) mn = std::min(mn, c);
    for (double c : pt.uv.v) mn = std::min(mn, c);
    if (mn < tolneg) pt.flags |= BranchPoint::flag_positivity_lost;
    return pt;
}

BranchPoint seed_trivial_branch(const ModelParams& p, const Grid& g, double lambda0,
                                const ContinuationConfig& cfg) {
    StateWZ zero;
    zero.w.assign(g.n, 0.0);
    zero.z.assign(g.n, 0.0);
    BranchPoint pt = make_branch_point(p, g, lambda0, zero, cfg);
    pt.tangent.assign(2 * g.n + 1, 0.0);
    pt.tangent.back() = 1.0;
    return pt;
}

BranchPoint seed_primary_branch(const ModelParams& p, const Grid& g, double amplitude,
                                const ContinuationConfig& cfg) {
    if (!(amplitude > 0.0)) throw SeedFailure("seed_primary_branch: amplitude must be positive");
    if (!(p.eps > 0.0))
        throw SeedFailure("seed_primary_branch: requires a finite cross-diffusion weight");
    const auto modes = eigen_weighted(g, p.m, 1);
    const double lam1 = modes[0].value;
    const std::vector<double>& phi = modes[0].vector;
    const double lam_seed = lam1 * (1.0 + 10.0 * amplitude);
    if (cfg.window_lo != cfg.window_hi &&
        (lam_seed < cfg.window_lo || lam_seed > cfg.window_hi))
        throw SeedFailure("seed_primary_branch: seed parameter " + std::to_string(lam_seed) +
                          " falls outside the window");

    // Near onset u and v track each other, so the first equation reduces to
    // Delta(u + alpha*u^2) + u(lambda*m - (b1+c1)*u) = 0. Projecting u = t*phi
    // onto the first weighted mode fixes the amplitude; the cross-diffusion
    // flux contributes lam1*alpha*<m phi^3> to the quadratic coefficient and
    // dominates it once alpha is large.
    double num = 0.0, num3 = 0.0, den = 0.0;
    for (int i = 0; i < g.n; ++i) {
        num += p.m[i] * phi[i] * phi[i];
        num3 += p.m[i] * phi[i] * phi[i] * phi[i];
        den += phi[i] * phi[i] * phi[i];
    }
    const double t0 =
        (lam_seed - lam1) * num / (lam1 * p.alpha * num3 + (p.b1 + p.c1) * den);

    ResidualFn res = [&](const std::vector<double>& x) { return residual_at(p, g, lam_seed, x); };
    JacobianFn jac = [&](const std::vector<double>& x) { return jacobian_at(p, g, lam_seed, x); };
    AdmissibleFn adm = [&](const std::vector<double>& x) { return admissible_packed(p.eps, x); };

    for (double mult : {1.0, 2.0, 0.5, 4.0, 0.25, 8.0}) {
        const double t = t0 * mult;
        StateWZ s;
        s.w.assign(g.n, 0.0);
        s.z.resize(g.n);
        for (int i = 0; i < g.n; ++i) s.z[i] = (p.eps + t * phi[i]) * t * phi[i];
        auto rep = try_newton(res, jac, pack_wz(s), cfg.newton, adm);
        if (!rep || !rep->converged) continue;
        const StateWZ fin = unpack_wz(rep->final_state);
        double zsup = sup(fin.z);
        // collapse test against the unscaled predictor size, so an overshot
        // multiplier that falls back onto the true root still counts
        if (zsup <= 0.05 * (p.eps + t0) * t0) continue;
        const StateUV uv = uv_from_wz(fin, p.eps);
        double mn = std::numeric_limits<double>::infinity();
        for (double c : uv.u) mn = std::min(mn, c);
        for (double c : uv.v) mn = std::min(mn, c);
        if (!(mn > 0.0)) continue;
        BranchPoint pt = make_branch_point(p, g, lam_seed, fin, cfg);
        std::vector<double> up(2 * g.n + 1, 0.0);
        up.back() = 1.0;
        pt.tangent = tangent_at(p, g, lam_seed, pt.state, &up);
        return pt;
    }
    throw SeedFailure("seed_primary_branch: Newton only reached the trivial state; "
                      "amplitude too small or window below the bifurcation point");
}

StepOutcome arclength_step(const BranchPoint& pt, double ds, const ModelParams& p, const Grid& g,
                           const ContinuationConfig& cfg) {
    if (pt.tangent.size() != 2 * static_cast<size_t>(g.n) + 1)
        throw StepFailure("arclength_step: branch point carries no tangent");
    const std::vector<double> x0 = pack_wz(pt.state);
    double trial = ds;
    for (int halving = 0; halving <= 8; ++halving) {
        if (std::fabs(trial) < cfg.ds_min) break;
        try {
            Corrected c = correct_extended(x0, pt.param, pt.tangent, trial, p, g, cfg);
            StepOutcome out;
            out.point = make_branch_point(p, g, c.lam, unpack_wz(c.x), cfg);
            out.point.tangent = tangent_at(p, g, c.lam, out.point.state, &pt.tangent);
            out.ds_used = trial;
            double next = trial;
            if (c.iters <= 4)
                next = trial * 1.5;
            else if (c.iters >= 10)
                next = trial * 0.7;
            const double mag = std::clamp(std::fabs(next), cfg.ds_min, cfg.ds_max);
            out.ds_next = next >= 0.0 ? mag : -mag;
            return out;
        } catch (const Error&) {
            trial *= 0.5;
        }
    }
    throw StepFailure("arclength_step: corrector failed through 8 halvings of ds = " +
                      std::to_string(ds));
}

std::optional<BifurcationRecord> detect_and_localize(const ModelParams& p, const Grid& g,
                                                     const ContinuationConfig& cfg,
                                                     const BranchPoint& a, const BranchPoint& b) {
    if (!crossing_between(a, b)) return std::nullopt;
    BranchPoint pa = a, pb = b;
    const bool trivial = is_trivial_state(a) && is_trivial_state(b);

    for (int it = 0; it < 64 && std::fabs(pb.param - pa.param) > cfg.localization_tol; ++it) {
        bool moved = false;
        for (double frac : {0.5, 0.375, 0.625, 0.25, 0.75}) {
            BranchPoint mid;
            try {
                const std::vector<double> t = secant_tangent(g, pa, pb);
                const double dsm = frac * ext_distance(g, pa, pb);
                Corrected c = correct_extended(pack_wz(pa.state), pa.param, t, dsm, p, g, cfg);
                mid = make_branch_point(p, g, c.lam, unpack_wz(c.x), cfg);
            } catch (const Error&) {
                continue;
            }
            // keep the half that still brackets the crossing
            if (crossing_between(pa, mid)) {
                pb = std::move(mid);
                moved = true;
            } else if (crossing_between(mid, pb)) {
                pa = std::move(mid);
                moved = true;
            }
            if (moved) break;
        }
        if (!moved) break;  // monitors inconsistent inside the bracket; keep what we have
    }

    // A determinant sign change certifies an odd number of eigenvalue
    // crossings. A sign change of the smallest-magnitude eigenvalue alone,
    // though, also happens where two eigenvalues of opposite sign trade
    // places in magnitude (halfway between consecutive crossings of the
    // trivial branch, for instance). Only record an eig-only detection if the
    // monitor actually vanishes at the localized point.
    if (!det_flip(a, b) && !pa.eigs.empty() && !pb.eigs.empty()) {
        const double ea = std::fabs(a.eigs[0]), eb = std::fabs(b.eigs[0]);
        const double e_loc = std::min(std::fabs(pa.eigs[0]), std::fabs(pb.eigs[0]));
        double gate = 0.25 * std::max(ea, eb);
        const double seg = ext_distance(g, a, b);
        if (seg > 0.0)
            gate = std::max(gate, 2.0 * (ea + eb) * ext_distance(g, pa, pb) / seg);
        if (e_loc > gate) return std::nullopt;
    }

    BifurcationRecord rec;
    rec.param_at = 0.5 * (pa.param + pb.param);
    rec.localization_width = std::fabs(pb.param - pa.param);
    const BranchPoint& at =
        (!pa.eigs.empty() && !pb.eigs.empty() && std::fabs(pa.eigs[0]) <= std::fabs(pb.eigs[0]))
            ? pa
            : pb;
    std::vector<double> kern;
    eigs_smallest_magnitude(jacobian_at(p, g, at.param, pack_wz(at.state)), 1, &kern);
    normalize_kernel(kern);
    rec.kernel = std::move(kern);
    if (trivial)
        rec.kind = BifKind::SimpleFromTrivial;
    else if (!a.tangent.empty() && !b.tangent.empty() &&
             a.tangent.back() * b.tangent.back() < 0.0)
        rec.kind = BifKind::Fold;
    else
        rec.kind = BifKind::Pitchfork;
    return rec;
}

std::optional<BifurcationRecord> detect_and_localize(const Branch& br, const ModelParams& p,
                                                     const Grid& g,
                                                     const ContinuationConfig& cfg) {
    if (br.points.size() < 2) return std::nullopt;
    return detect_and_localize(p, g, cfg, br.points[br.points.size() - 2], br.points.back());
}

std::pair<BranchPoint, BranchPoint> switch_branch(const BifurcationRecord& rec,
                                                  const BranchPoint& base, double delta,
                                                  const ModelParams& p, const Grid& g,
                                                  const ContinuationConfig& cfg) {
    if (!(delta > 0.0)) throw SwitchFailure("switch_branch: delta must be positive");
    if (rec.kernel.size() != 2 * static_cast<size_t>(g.n))
        throw SwitchFailure("switch_branch: kernel does not match the grid");
    const std::vector<double> xb = pack_wz(base.state);
    const double lam = base.param;
    ResidualFn res = [&](const std::vector<double>& x) { return residual_at(p, g, lam, x); };
    JacobianFn jac = [&](const std::vector<double>& x) { return jacobian_at(p, g, lam, x); };
    AdmissibleFn adm = [&](const std::vector<double>& x) { return admissible_packed(p.eps, x); };

    // The bifurcating pair can sit well outside the caller's kick scale once
    // the base point is away from the branch point (its distance grows like
    // sqrt of the parameter offset), so escalate geometrically; the fell-back
    // and straddle gates below reject any landing that is not a genuine pair.
    double d = delta;
    for (int attempt = 0; attempt < 7; ++attempt, d *= 2.0) {
        std::vector<double> xp = xb, xm = xb;
        for (size_t i = 0; i < xb.size(); ++i) {
            xp[i] += d * rec.kernel[i];
            xm[i] -= d * rec.kernel[i];
        }
        auto rp = try_newton(res, jac, xp, cfg.newton, adm);
        auto rm = try_newton(res, jac, xm, cfg.newton, adm);
        if (!rp || !rm) continue;
        std::vector<double> dp(xb.size()), dm(xb.size()), dd(xb.size());
        for (size_t i = 0; i < xb.size(); ++i) {
            dp[i] = rp->final_state[i] - xb[i];
            dm[i] = rm->final_state[i] - xb[i];
            dd[i] = rp->final_state[i] - rm->final_state[i];
        }
        // landings are judged against the kick size: Newton wobble around the
        // base point scales with the residual tolerance, not with d
        const double off_tol = 0.05 * d;
        if (sup(dp) <= off_tol || sup(dm) <= off_tol) continue;  // fell back onto the base
        if (sup(dd) <= off_tol) continue;                        // both landed on one side
        const double proj_p = hdot(g.h, rec.kernel, dp);
        const double proj_m = hdot(g.h, rec.kernel, dm);
        if (!(proj_p > 0.0 && proj_m < 0.0) && !(proj_p < 0.0 && proj_m > 0.0)) continue;

        BranchPoint up = make_branch_point(p, g, lam, unpack_wz(rp->final_state), cfg);
        BranchPoint dn = make_branch_point(p, g, lam, unpack_wz(rm->final_state), cfg);
        if (proj_p < 0.0) std::swap(up, dn);
        std::vector<double> fwd(2 * g.n + 1, 0.0);
        fwd.back() = 1.0;
        up.tangent = tangent_at(p, g, lam, up.state, &fwd);
        dn.tangent = tangent_at(p, g, lam, dn.state, &fwd);
        return {up, dn};
    }
    throw SwitchFailure("switch_branch: both predictors fell back onto the base branch "
                        "(tried delta through 64 delta)");
}

Branch trace_branch(const BranchPoint& seed, const ModelParams& p, const Grid& g,
                    const ContinuationConfig& cfg, const std::string& id) {
    Branch br;
    br.id = id;
    br.mode = BranchMode::lambda;
    BranchPoint pt = seed;
    if (pt.tangent.size() != 2 * static_cast<size_t>(g.n) + 1) {
        std::vector<double> fwd(2 * g.n + 1, 0.0);
        fwd.back() = 1.0;
        pt.tangent = tangent_at(p, g, pt.param, pt.state, &fwd);
    }
    if (pt.tangent.back() < 0.0)
        for (auto& c : pt.tangent) c = -c;  // march toward larger parameter
    br.points.push_back(pt);

    const bool windowed = cfg.window_lo != cfg.window_hi;
    double ds = cfg.ds;
    for (int step = 0; step < cfg.max_steps; ++step) {
        if (windowed && (pt.param > cfg.window_hi || pt.param < cfg.window_lo)) break;
        StepOutcome out;
        try {
            out = arclength_step(pt, ds, p, g, cfg);
        } catch (const StepFailure&) {
            br.step_failed = true;
            break;
        }
        ds = out.ds_next;
        if (cfg.detect) {
            auto rec = detect_and_localize(p, g, cfg, pt, out.point);
            if (rec) br.bifurcations.push_back(*rec);
        }
        br.points.push_back(out.point);
        pt = br.points.back();
    }
    return br;
}

BranchPoint converge_at_param(const BranchPoint& near, double lambda, const ModelParams& p,
                              const Grid& g, const ContinuationConfig& cfg) {
    std::vector<double> x = pack_wz(near.state);
    double cur = near.param;
    const double maxstep = std::max(cfg.ds, 1e-3);
    AdmissibleFn adm = [&](const std::vector<double>& xx) {
        return admissible_packed(p.eps, xx);
    };
    int guard = 0;
    while (cur != lambda) {
        if (++guard > 100000)
            throw NewtonFailure("converge_at_param: step budget exhausted between " +
                                std::to_string(near.param) + " and " + std::to_string(lambda));
        double step = std::min(maxstep, std::fabs(lambda - cur));
        const double dir = lambda > cur ? 1.0 : -1.0;
        for (;;) {
            const double next = step >= std::fabs(lambda - cur) ? lambda : cur + dir * step;
            ResidualFn res = [&](const std::vector<double>& xx) {
                return residual_at(p, g, next, xx);
            };
            JacobianFn jac = [&](const std::vector<double>& xx) {
                return jacobian_at(p, g, next, xx);
            };
            auto rep = try_newton(res, jac, x, cfg.newton, adm);
            if (rep && rep->converged && !captured_by_smaller_family(x, rep->final_state)) {
                x = rep->final_state;
                cur = next;
                break;
            }
            step *= 0.5;
            if (step < 1e-9 * std::max(1.0, std::fabs(lambda)))
                throw NewtonFailure("converge_at_param: natural continuation stalled at " +
                                    std::to_string(cur));
        }
    }
    return make_branch_point(p, g, lambda, unpack_wz(x), cfg);
}

BranchPoint converge_at_param(const Branch& br, double lambda, const ModelParams& p,
                              const Grid& g, const ContinuationConfig& cfg) {
    if (br.points.empty()) throw NewtonFailure("converge_at_param: empty branch");
    size_t best = 0;
    for (size_t i = 1; i < br.points.size(); ++i)
        if (std::fabs(br.points[i].param - lambda) < std::fabs(br.points[best].param - lambda))
            best = i;
    return converge_at_param(br.points[best], lambda, p, g, cfg);
}

Branch to_d_mode(const Branch& br, const ModelParams& p, const Grid& g) {
    Branch out;
    out.id = br.id;
    out.mode = BranchMode::d;
    out.step_failed = br.step_failed;
    if (br.parent) out.parent = {br.parent->first, 1.0 / br.parent->second};
    const int n = g.n;
    for (const BranchPoint& pt : br.points) {
        if (!(pt.param > 0.0))
            throw ValidationError("to_d_mode: requires strictly positive parameter values");
        const double lam = pt.param, d = 1.0 / lam;
        BranchPoint q;
        q.param = d;
        q.state.w.resize(n);
        q.state.z.resize(n);
        q.uv.u.resize(n);
        q.uv.v.resize(n);
        for (int i = 0; i < n; ++i) {
            q.state.w[i] = pt.state.w[i] / lam;
            q.state.z[i] = pt.state.z[i] / (lam * lam);
            q.uv.u[i] = pt.uv.u[i] / lam;
            q.uv.v[i] = pt.uv.v[i] / lam;
        }
        const Residual r = residual_wz_d(p, q.state, g, d);
        if (r.sup() > 1e-9 * std::max(1.0, lam))
            throw ConvergenceFailure("to_d_mode: mapped state fails the transformed residual "
                                     "at parameter " + std::to_string(d));
        q.norm_u = norms(q.uv.u, g);
        q.norm_v = norms(q.uv.v, g);
        const BandedMatrix J = jacobian_wz_d(p, q.state, g, d);
        const int k = pt.eigs.empty() ? 6 : static_cast<int>(pt.eigs.size());
        q.eigs = eigs_smallest_magnitude(J, std::min(k, 2 * n));
        try {
            q.det_sign = BandedLU::factor(J).det_sign();
        } catch (const SingularMatrix&) {
            q.det_sign = 0;
        }
        q.flags = pt.flags;
        if (pt.tangent.size() == 2 * static_cast<size_t>(n) + 1) {
            std::vector<double> t(2 * n + 1);
            const double ldot = pt.tangent.back();
            for (int i = 0; i < n; ++i) {
                t[2 * i] = pt.tangent[2 * i] / lam - pt.state.w[i] * ldot / (lam * lam);
                t[2 * i + 1] = pt.tangent[2 * i + 1] / (lam * lam) -
                               2.0 * pt.state.z[i] * ldot / (lam * lam * lam);
            }
            t.back() = -ldot / (lam * lam);
            std::vector<double> tx(t.begin(), t.end() - 1);
            const double nrm = std::sqrt(hdot(g.h, tx, tx) + t.back() * t.back());
            if (nrm > 0.0)
                for (auto& c : t) c /= nrm;
            q.tangent = std::move(t);
        }
        out.points.push_back(std::move(q));
    }
    for (const BifurcationRecord& rec : br.bifurcations) {
        BifurcationRecord rd;
        const double lam = rec.param_at;
        rd.param_at = 1.0 / lam;
        rd.localization_width = rec.localization_width / (lam * lam);
        rd.kind = rec.kind;
        rd.kernel.resize(rec.kernel.size());
        for (size_t i = 0; i + 1 < rec.kernel.size(); i += 2) {
            rd.kernel[i] = rec.kernel[i] / lam;
            rd.kernel[i + 1] = rec.kernel[i + 1] / (lam * lam);
        }
        normalize_kernel(rd.kernel);
        out.bifurcations.push_back(std::move(rd));
    }
    return out;
}

Branch from_d_mode(const Branch& br, const ModelParams& p, const Grid& g) {
    Branch out;
    out.id = br.id;
    out.mode = BranchMode::lambda;
    out.step_failed = br.step_failed;
    if (br.parent) out.parent = {br.parent->first, 1.0 / br.parent->second};
    const int n = g.n;
    for (const BranchPoint& pt : br.points) {
        if (!(pt.param > 0.0))
            throw ValidationError("from_d_mode: requires strictly positive parameter values");
        const double d = pt.param, lam = 1.0 / d;
        BranchPoint q;
        q.param = lam;
        q.state.w.resize(n);
        q.state.z.resize(n);
        q.uv.u.resize(n);
        q.uv.v.resize(n);
        for (int i = 0; i < n; ++i) {
            q.state.w[i] = pt.state.w[i] * lam;
            q.state.z[i] = pt.state.z[i] * lam * lam;
            q.uv.u[i] = pt.uv.u[i] * lam;
            q.uv.v[i] = pt.uv.v[i] * lam;
        }
        const Residual r = residual_wz(p.with_lambda(lam), q.state, g);
        if (r.sup() > 1e-7 * std::max(1.0, lam * lam))
            throw ConvergenceFailure("from_d_mode: mapped state fails the residual at "
                                     "parameter " + std::to_string(lam));
        q.norm_u = norms(q.uv.u, g);
        q.norm_v = norms(q.uv.v, g);
        const BandedMatrix J = jacobian_wz(p.with_lambda(lam), q.state, g);
        const int k = pt.eigs.empty() ? 6 : static_cast<int>(pt.eigs.size());
        q.eigs = eigs_smallest_magnitude(J, std::min(k, 2 * n));
        try {
            q.det_sign = BandedLU::factor(J).det_sign();
        } catch (const SingularMatrix&) {
            q.det_sign = 0;
        }
        q.flags = pt.flags;
        if (pt.tangent.size() == 2 * static_cast<size_t>(n) + 1) {
            std::vector<double> t(2 * n + 1);
            const double ddot = pt.tangent.back();
            // lam-dot induced by d-dot, then the product rule on w = lam w_d
            const double ldot = -ddot * lam * lam;
            for (int i = 0; i < n; ++i) {
                t[2 * i] = pt.tangent[2 * i] * lam + pt.state.w[i] * ldot;
                t[2 * i + 1] = pt.tangent[2 * i + 1] * lam * lam +
                               2.0 * pt.state.z[i] * lam * ldot;
            }
            t.back() = ldot;
            std::vector<double> tx(t.begin(), t.end() - 1);
            const double nrm = std::sqrt(hdot(g.h, tx, tx) + t.back() * t.back());
            if (nrm > 0.0)
                for (auto& c : t) c /= nrm;
            q.tangent = std::move(t);
        }
        out.points.push_back(std::move(q));
    }
    for (const BifurcationRecord& rec : br.bifurcations) {
        BifurcationRecord rl;
        const double d = rec.param_at;
        rl.param_at = 1.0 / d;
        rl.localization_width = rec.localization_width / (d * d);
        rl.kind = rec.kind;
        rl.kernel.resize(rec.kernel.size());
        const double lam = 1.0 / d;
        for (size_t i = 0; i + 1 < rec.kernel.size(); i += 2) {
            rl.kernel[i] = rec.kernel[i] * lam;
            rl.kernel[i + 1] = rec.kernel[i + 1] * lam * lam;
        }
        normalize_kernel(rl.kernel);
        out.bifurcations.push_back(std::move(rl));
    }
    return out;
}

} // namespace skt
