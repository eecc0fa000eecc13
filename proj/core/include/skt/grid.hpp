#pragma once

#include <vector>

#include "skt/errors.hpp"

namespace skt {

// Uniform 1D mesh on (a,b) with homogeneous Dirichlet conditions.
// Only the n interior nodes are stored; the boundary values are
// implicitly zero and eliminated from all discrete operators.
struct Grid {
    double a = 0.0;
    double b = 1.0;
    int n = 0;       // interior node count
    double h = 0.0;  // spacing (b-a)/(n+1)

    // x-coordinate of interior node i, i in [0, n)
    double node(int i) const { return a + (i + 1) * h; }
};

// Throws InvalidDomain unless a < b and n >= 3.
Grid build_grid(double a, double b, int n);

struct Norms {
    double l2 = 0.0;
    double sup = 0.0;
};

// l2 is the composite rectangle rule sqrt(h * sum f_i^2); the implicit
// zero boundary contributes nothing. sup is max |f_i| over interior nodes.
Norms norms(const std::vector<double>& field, const Grid& g);

double l2_norm(const std::vector<double>& field, const Grid& g);
double sup_norm(const std::vector<double>& field);

} // namespace skt
