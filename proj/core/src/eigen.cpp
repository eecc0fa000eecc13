#include "skt/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>

namespace skt {

namespace {

using cplx = std::complex<double>;

// ---- symmetric tridiagonal eigenvalues by Sturm sign-count bisection ----

// number of eigenvalues of tridiag(d, e) strictly below x
int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
    constexpr double pivmin = 1e-290;
    int count = 0;
    double q = d[0] - x;
    if (q < 0.0) ++count;
    const int n = static_cast<int>(d.size());
    for (int i = 1; i < n; ++i) {
        if (std::fabs(q) < pivmin) q = (q < 0.0 ? -pivmin : pivmin);
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if (q < 0.0) ++count;
    }
    return count;
}

// j-th smallest eigenvalue (1-based), bisected to floating point exhaustion
double bisect_eigenvalue(const std::vector<double>& d, const std::vector<double>& e, int j,
                         double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (sturm_count(d, e, mid) >= j)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

// deterministic pseudo-random fill, used where a generic direction is needed
double splitmix64_unit(uint64_t& s) {
    s += 0x9e3779b97f4a7c15ull;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double nrm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

std::vector<double> tridiag_apply(const std::vector<double>& d, const std::vector<double>& e,
                                  const std::vector<double>& x) {
    const int n = static_cast<int>(d.size());
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        double s = d[i] * x[i];
        if (i > 0) s += e[i - 1] * x[i - 1];
        if (i < n - 1) s += e[i] * x[i + 1];
        y[i] = s;
    }
    return y;
}

// inverse iteration on tridiag(d,e) near eigenvalue est
std::vector<double> tridiag_inverse_iteration(const std::vector<double>& d,
                                              const std::vector<double>& e, double est,
                                              std::vector<double> v,
                                              const std::vector<std::vector<double>>& prev,
                                              double scale) {
    const int n = static_cast<int>(d.size());
    auto build = [&](double shift) {
        BandedMatrix t(n, 1, 1);
        for (int i = 0; i < n; ++i) {
            t.at(i, i) = d[i] - shift;
            if (i > 0) t.at(i, i - 1) = e[i - 1];
            if (i < n - 1) t.at(i, i + 1) = e[i];
        }
        return t;
    };
    BandedLU lu;
    double shift = est;
    for (int attempt = 0;; ++attempt) {
        try {
            lu = BandedLU::factor(build(shift));
            break;
        } catch (const SingularMatrix&) {
            if (attempt >= 4) throw;
            shift = est + scale * 1e-14 * std::pow(10.0, attempt);
        }
    }
    double vn = nrm2(v);
    for (auto& c : v) c /= vn;
    double best_res = std::numeric_limits<double>::infinity();
    std::vector<double> best = v;
    for (int it = 0; it < 60; ++it) {
        std::vector<double> y = lu.solve(v);
        for (const auto& u : prev) {
            const double proj = dot(u, y);
            for (int i = 0; i < n; ++i) y[i] -= proj * u[i];
        }
        const double yn = nrm2(y);
        if (!(yn > 0.0) || !std::isfinite(yn)) break;
        for (auto& c : y) c /= yn;
        v = y;
        std::vector<double> bv = tridiag_apply(d, e, v);
        const double rho = dot(v, bv);
        double res = 0.0;
        for (int i = 0; i < n; ++i) res = std::max(res, std::fabs(bv[i] - rho * v[i]));
        if (res < best_res) {
            best_res = res;
            best = v;
        }
        if (res <= 1e-12 * scale && it >= 1) break;
    }
    if (best_res > 1e-9 * scale)
        throw ConvergenceFailure("eigen_weighted: inverse iteration residual " +
                                 std::to_string(best_res) + " above 1e-9 of matrix scale");
    return best;
}

// ---- complex Hessenberg QR for the Arnoldi projections ----

struct Givens {
    double c;  // real
    cplx s;
};

Givens make_givens(cplx f, cplx g) {
    const double af = std::abs(f), ag = std::abs(g);
    if (ag == 0.0) return {1.0, cplx(0.0, 0.0)};
    if (af == 0.0) return {0.0, std::conj(g) / ag};
    const double r = std::hypot(af, ag);
    return {af / r, (f / af) * std::conj(g) / r};
}

// eigenvalues of an upper Hessenberg matrix by single-shift QR with deflation
std::vector<cplx> hessenberg_eigenvalues(std::vector<cplx> h, int m) {
    auto H = [&](int i, int j) -> cplx& { return h[static_cast<size_t>(i) * m + j]; };
    std::vector<cplx> eig(m);
    int nn = m;
    int iter = 0;
    const double eps = std::numeric_limits<double>::epsilon();
    while (nn > 0) {
        int l = nn - 1;
        while (l > 0 &&
               std::abs(H(l, l - 1)) > eps * (std::abs(H(l - 1, l - 1)) + std::abs(H(l, l))))
            --l;
        if (l == nn - 1) {
            eig[nn - 1] = H(nn - 1, nn - 1);
            --nn;
            iter = 0;
            continue;
        }
        if (++iter > 60 * m) {
            // stagnation: accept diagonal of the remaining block
            for (int i = 0; i < nn; ++i) eig[i] = H(i, i);
            break;
        }
        // Wilkinson shift from the trailing 2x2 of the active block
        const cplx a = H(nn - 2, nn - 2), b = H(nn - 2, nn - 1);
        const cplx c = H(nn - 1, nn - 2), d = H(nn - 1, nn - 1);
        const cplx tr = a + d;
        const cplx disc = std::sqrt(tr * tr * 0.25 - (a * d - b * c));
        const cplx mu1 = tr * 0.5 + disc, mu2 = tr * 0.5 - disc;
        cplx shift = (std::abs(mu1 - d) < std::abs(mu2 - d)) ? mu1 : mu2;
        if (iter % 16 == 0) shift += std::abs(H(nn - 1, nn - 2));  // exceptional shift
        for (int i = l; i < nn; ++i) H(i, i) -= shift;
        std::vector<Givens> rot(nn - 1 - l);
        for (int i = l; i < nn - 1; ++i) {
            const Givens gv = make_givens(H(i, i), H(i + 1, i));
            rot[i - l] = gv;
            for (int q = i; q < nn; ++q) {
                const cplx t1 = H(i, q), t2 = H(i + 1, q);
                H(i, q) = gv.c * t1 + gv.s * t2;
                H(i + 1, q) = -std::conj(gv.s) * t1 + gv.c * t2;
            }
        }
        for (int i = l; i < nn - 1; ++i) {
            const Givens gv = rot[i - l];
            const int phi = std::min(i + 2, nn);
            for (int p = l; p < phi; ++p) {
                const cplx t1 = H(p, i), t2 = H(p, i + 1);
                H(p, i) = gv.c * t1 + std::conj(gv.s) * t2;
                H(p, i + 1) = -gv.s * t1 + gv.c * t2;
            }
        }
        for (int i = l; i < nn; ++i) H(i, i) += shift;
    }
    return eig;
}

// eigenvector of a small dense complex matrix for a known eigenvalue,
// one step of inverse iteration with partial pivoting
std::vector<cplx> dense_eigenvector(const std::vector<cplx>& h, int m, cplx theta) {
    std::vector<cplx> a = h;
    auto A = [&](int i, int j) -> cplx& { return a[static_cast<size_t>(i) * m + j]; };
    double scale = 0.0;
    for (const auto& v : a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) scale = 1.0;
    for (int i = 0; i < m; ++i) A(i, i) -= theta + cplx(scale * 1e-14, 0.0);
    std::vector<int> piv(m);
    for (int j = 0; j < m; ++j) {
        int p = j;
        for (int i = j + 1; i < m; ++i)
            if (std::abs(A(i, j)) > std::abs(A(p, j))) p = i;
        piv[j] = p;
        if (p != j)
            for (int q = 0; q < m; ++q) std::swap(A(j, q), A(p, q));
        if (std::abs(A(j, j)) < scale * 1e-300) A(j, j) = cplx(scale * 1e-300, 0.0);
        for (int i = j + 1; i < m; ++i) {
            const cplx f = A(i, j) / A(j, j);
            A(i, j) = f;
            for (int q = j + 1; q < m; ++q) A(i, q) -= f * A(j, q);
        }
    }
    std::vector<cplx> y(m, cplx(1.0, 0.0));
    for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < m; ++j) {
            if (piv[j] != j) std::swap(y[j], y[piv[j]]);
            for (int i = j + 1; i < m; ++i) y[i] -= A(i, j) * y[j];
        }
        for (int j = m - 1; j >= 0; --j) {
            for (int q = j + 1; q < m; ++q) y[j] -= A(j, q) * y[q];
            y[j] /= A(j, j);
        }
        double yn = 0.0;
        for (const auto& v : y) yn += std::norm(v);
        yn = std::sqrt(yn);
        for (auto& v : y) v /= yn;
    }
    return y;
}

} // namespace

std::vector<EigenPair> eigen_weighted(const Grid& g, const std::vector<double>& m, int k) {
    const int n = g.n;
    if (static_cast<int>(m.size()) != n)
        throw ValidationError("eigen_weighted: weight length must equal interior node count");
    if (k < 1 || k > n) throw ValidationError("eigen_weighted: need 1 <= k <= n");
    for (int i = 0; i < n; ++i)
        if (!(m[i] > 0.0))
            throw ValidationError("eigen_weighted: weight must be strictly positive at node " +
                                  std::to_string(i));

    // diag(m)^{-1/2} similarity: B = D^{-1} A D^{-1}, symmetric tridiagonal
    const double dd = 2.0 / (g.h * g.h), ee = -1.0 / (g.h * g.h);
    std::vector<double> d(n), e(n - 1);
    for (int i = 0; i < n; ++i) d[i] = dd / m[i];
    for (int i = 0; i + 1 < n; ++i) e[i] = ee / std::sqrt(m[i] * m[i + 1]);

    double lo = d[0], hi = d[0], scale = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = (i > 0 ? std::fabs(e[i - 1]) : 0.0) + (i < n - 1 ? std::fabs(e[i]) : 0.0);
        lo = std::min(lo, d[i] - r);
        hi = std::max(hi, d[i] + r);
        scale = std::max(scale, std::fabs(d[i]) + r);
    }
    const double pad = 1e-3 * (hi - lo) + 1.0;
    lo -= pad;
    hi += pad;

    std::vector<EigenPair> out;
    std::vector<std::vector<double>> prev;  // converged psi vectors, l2-orthonormal
    for (int j = 1; j <= k; ++j) {
        const double lam = bisect_eigenvalue(d, e, j, lo, hi);
        // sine profile of matching mode number: a good generic start
        std::vector<double> v0(n);
        for (int i = 0; i < n; ++i)
            v0[i] = std::sin(static_cast<double>(j) * M_PI * (i + 1) / (n + 1));
        std::vector<double> psi;
        try {
            psi = tridiag_inverse_iteration(d, e, lam, v0, prev, scale);
        } catch (const ConvergenceFailure&) {
            uint64_t seed = 0x5eed0000u + static_cast<uint64_t>(j);
            for (int i = 0; i < n; ++i) v0[i] = splitmix64_unit(seed);
            psi = tridiag_inverse_iteration(d, e, lam, v0, prev, scale);
        }
        prev.push_back(psi);

        EigenPair p;
        p.value = lam;
        p.vector.resize(n);
        for (int i = 0; i < n; ++i) p.vector[i] = psi[i] / std::sqrt(m[i]);
        double mx = 0.0;
        for (double c : p.vector) mx = std::max(mx, std::fabs(c));
        double s = 1.0 / mx;
        if (p.vector[0] < 0.0) s = -s;  // discrete phi'(a) > 0
        for (auto& c : p.vector) c *= s;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<double> eigs_smallest_magnitude(const BandedMatrix& a, int k,
                                            std::vector<double>* kernel_out, bool* any_complex) {
    const int n = a.n();
    if (k < 1 || k > n) throw ValidationError("eigs_smallest_magnitude: need 1 <= k <= n");
    const double amax = std::max(a.max_abs(), 1.0);

    // shift-invert factorization; nudge the shift if the matrix is
    // exactly singular (we then look around -sigma instead of 0)
    BandedLU lu;
    double sigma = 0.0;
    for (int attempt = 0;; ++attempt) {
        try {
            if (sigma == 0.0) {
                lu = BandedLU::factor(a);
            } else {
                BandedMatrix shifted = a;
                for (int i = 0; i < n; ++i) shifted.at(i, i) += sigma;
                lu = BandedLU::factor(shifted);
            }
            break;
        } catch (const SingularMatrix&) {
            if (attempt >= 6)
                throw ConvergenceFailure("eigs_smallest_magnitude: matrix stays singular "
                                         "under diagonal nudges");
            sigma = amax * 1e-13 * std::pow(10.0, attempt);
        }
    }

    int m = std::min(n, std::max(24, 4 * k));
    for (;;) {
        // Arnoldi on (A + sigma I)^{-1} with full re-orthogonalization
        std::vector<std::vector<double>> V;
        std::vector<double> v(n);
        uint64_t seed = 0xa51ce5u;
        for (int i = 0; i < n; ++i) v[i] = splitmix64_unit(seed);
        double vn = nrm2(v);
        for (auto& c : v) c /= vn;
        V.push_back(v);
        std::vector<cplx> H(static_cast<size_t>(m) * m, cplx(0.0, 0.0));
        auto Hat = [&](int i, int j) -> cplx& { return H[static_cast<size_t>(i) * m + j]; };
        int steps = 0;
        for (int i = 0; i < m; ++i) {
            std::vector<double> w = lu.solve(V[i]);
            for (int pass = 0; pass < 2; ++pass)
                for (int l = 0; l <= i; ++l) {
                    const double hli = dot(V[l], w);
                    Hat(l, i) += hli;  // both passes accumulate (iterated Gram-Schmidt)
                    for (int q = 0; q < n; ++q) w[q] -= hli * V[l][q];
                }
            const double wn = nrm2(w);
            steps = i + 1;
            if (i + 1 < m) {
                if (wn < 1e-14) break;  // happy breakdown, Krylov space exhausted
                Hat(i + 1, i) = wn;
                for (auto& c : w) c /= wn;
                V.push_back(w);
            }
        }
        const int ms = steps;
        std::vector<cplx> Hs(static_cast<size_t>(ms) * ms);
        for (int i = 0; i < ms; ++i)
            for (int j = 0; j < ms; ++j) Hs[static_cast<size_t>(i) * ms + j] = Hat(i, j);

        std::vector<cplx> theta = hessenberg_eigenvalues(Hs, ms);
        // eigenvalues of A: mu = 1/theta - sigma; keep the k smallest |mu|
        std::vector<std::pair<double, cplx>> mus;
        for (const auto& t : theta) {
            if (std::abs(t) < 1e-300) continue;
            const cplx mu = cplx(1.0, 0.0) / t - sigma;
            mus.push_back({std::abs(mu), mu});
        }
        std::sort(mus.begin(), mus.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        if (static_cast<int>(mus.size()) >= k || ms >= n) {
            std::vector<double> out;
            bool complex_seen = false;
            for (int i = 0; i < k && i < static_cast<int>(mus.size()); ++i) {
                const cplx mu = mus[i].second;
                if (std::abs(mu.imag()) > 1e-8 * std::max(1.0, std::abs(mu.real())))
                    complex_seen = true;
                out.push_back(mu.real());
            }
            while (static_cast<int>(out.size()) < k && !out.empty()) out.push_back(out.back());
            if (any_complex) *any_complex = complex_seen;
            if (kernel_out && !mus.empty()) {
                // Ritz vector of the eigenvalue nearest zero
                const cplx mu0 = mus[0].second;
                const cplx t0 = cplx(1.0, 0.0) / (mu0 + sigma);
                std::vector<cplx> y = dense_eigenvector(Hs, ms, t0);
                std::vector<double> x(n, 0.0);
                for (int l = 0; l < ms; ++l) {
                    const double yr = y[l].real();
                    for (int q = 0; q < n; ++q) x[q] += yr * V[l][q];
                }
                double mx = 0.0;
                for (double c : x) mx = std::max(mx, std::fabs(c));
                if (mx > 0.0)
                    for (auto& c : x) c /= mx;
                *kernel_out = std::move(x);
            }
            return out;
        }
        if (m >= std::min(n, 160))
            throw ConvergenceFailure("eigs_smallest_magnitude: Arnoldi failed to deliver " +
                                     std::to_string(k) + " Ritz values");
        m = std::min(n, 2 * m);
    }
}

} // namespace skt
