#include "skt/grid.hpp"

#include <cmath>
#include <string>

namespace skt {

Grid build_grid(double a, double b, int n) {
    if (!(a < b))
        throw InvalidDomain("build_grid: left endpoint must be below right endpoint (got a=" +
                            std::to_string(a) + ", b=" + std::to_string(b) + ")");
    if (n < 3)
        throw InvalidDomain("build_grid: need at least 3 interior nodes, got " + std::to_string(n));
    Grid g;
    g.a = a;
    g.b = b;
    g.n = n;
    g.h = (b - a) / (n + 1);
    return g;
}

Norms norms(const std::vector<double>& field, const Grid& g) {
    Norms out;
    double ss = 0.0;
    for (double v : field) {
        ss += v * v;
        double av = std::fabs(v);
        if (av > out.sup) out.sup = av;
    }
    out.l2 = std::sqrt(g.h * ss);
    return out;
}

double l2_norm(const std::vector<double>& field, const Grid& g) { return norms(field, g).l2; }

double sup_norm(const std::vector<double>& field) {
    double s = 0.0;
    for (double v : field) {
        double av = std::fabs(v);
        if (av > s) s = av;
    }
    return s;
}

} // namespace skt
