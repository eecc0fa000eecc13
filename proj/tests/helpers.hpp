#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "skt/grid.hpp"
#include "skt/model.hpp"

namespace tst {

// standard competition coefficients used across the suite:
// alpha=20, b=(3,2), c=(2,1), m constant 1
inline skt::ModelParams default_params(const skt::Grid& g, double lambda,
                                       double alpha = 20.0) {
    const std::vector<double> m(static_cast<size_t>(g.n), 1.0);
    return skt::ModelParams::make(alpha, 3.0, 2.0, 2.0, 1.0, m, lambda);
}

inline std::vector<double> ones(const skt::Grid& g) {
    return std::vector<double>(static_cast<size_t>(g.n), 1.0);
}

// first-mode bump sin(pi x_hat), sup-normalized on the grid
inline std::vector<double> bump(const skt::Grid& g, int mode = 1) {
    std::vector<double> f(static_cast<size_t>(g.n));
    const double L = g.b - g.a;
    for (int i = 0; i < g.n; ++i)
        f[i] = std::sin(mode * M_PI * (g.node(i) - g.a) / L);
    return f;
}

// random strictly positive (u,v) pair; admissible by construction
inline skt::StateUV random_uv(const skt::Grid& g, std::mt19937& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> pos(0.05, 1.0);
    skt::StateUV s;
    s.u.resize(static_cast<size_t>(g.n));
    s.v.resize(static_cast<size_t>(g.n));
    for (int i = 0; i < g.n; ++i) {
        s.u[i] = scale * pos(rng);
        s.v[i] = scale * pos(rng);
    }
    return s;
}

inline double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
    return d;
}

inline double sup_abs(const std::vector<double>& a) {
    double d = 0.0;
    for (double x : a) d = std::max(d, std::fabs(x));
    return d;
}

// mirror about the domain center (node i <-> node n-1-i)
inline std::vector<double> reflect(const std::vector<double>& a) {
    return std::vector<double>(a.rbegin(), a.rend());
}

} // namespace tst
