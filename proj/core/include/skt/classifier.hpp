#pragma once

#include <string>
#include <vector>

#include "skt/continuation.hpp"
#include "skt/limits.hpp"

namespace skt {

// Which branch an alpha-sweep follows. j = 0 selects the coexistence
// branch; j >= 2 a pitchfork branch, sign picking its upper (+1) or
// lower (-1) half.
struct BranchSelector {
    int j = 0;
    int sign = +1;
};

enum class Verdict { SmallCoexistence, CompleteSegregation, Undetermined };

struct SweepMetrics {
    double uv_sup = 0.0;            // ||u v||_inf
    double scaled_gap = 0.0;        // ||alpha u - alpha v||_inf
    double alpha_sup_u = 0.0;       // alpha ||u||_inf
    double alpha_sup_v = 0.0;       // alpha ||v||_inf
    double dist_to_limit_U = 0.0;   // ||alpha u - U(lambda)||_inf
    double dist_to_segregation = 0.0;  // ||u - w_+||_inf + ||v - w_-||_inf (j >= 2 only)
};

struct ClassifyThresholds {
    double band_factor = 2.0;  // allowed variation of alpha||u||_inf over the top decade
    double gap_tol = 0.1;      // ||alpha u - alpha v||_inf / ||alpha u||_inf at the largest alpha
    double product_tol = 0.05; // ||uv||_inf/(||u||_inf ||v||_inf) at the largest alpha
};

struct SweepReport {
    double lambda = 0.0;
    BranchSelector selector;
    std::vector<double> alphas;          // strictly increasing
    std::vector<BranchPoint> points;     // converged solution per alpha
    std::vector<SweepMetrics> metrics;
    Verdict verdict = Verdict::Undetermined;
    double fitted_rate = 0.0;
    ClassifyThresholds thresholds;
    bool broken = false;   // some re-convergence failed; prefix retained
    std::string note;      // e.g. NoPositiveSolution below the existence threshold
};

// Re-converges the selected branch solution at fixed lambda for each
// alpha (ascending), warm-starting in (w,z) from the previous alpha with
// the natural 1/alpha scalings. Metrics are computed against limit_U and,
// for j >= 2, against the matching shoot_LS2 profile.
// seed: converged point at the smallest alpha (see locate_on_branch).
SweepReport alpha_sweep(double lambda, const std::vector<double>& alphas,
                        const BranchPoint& seed, BranchSelector sel, const ModelParams& base,
                        const Grid& g, ClassifyThresholds thr = {});

// Runs the continuation pipeline at base.alpha and extracts the branch
// solution at the given lambda: traces the coexistence branch and, for
// j >= 2, switches at the localized pitchfork and follows the requested
// half. Produces the sweep seed.
BranchPoint locate_on_branch(double lambda, BranchSelector sel, const ModelParams& base,
                             const Grid& g, const ContinuationConfig& cfg);

// Applies the decision rule to a finished sweep (>= 3 alphas) and stores
// the verdict in the report. Thresholds come from report.thresholds.
Verdict classify(SweepReport& report);

enum class SweepMetricKind { UVProduct, ScaledGap, AlphaSupU, DistLimitU, DistSegregation };

// Fitted exponent p with metric ~ C * alpha^{-p}, by least squares in
// log-log coordinates. Needs >= 4 positive values spanning at least one
// decade in the metric; otherwise DegenerateFit.
double fit_rate(const SweepReport& report, SweepMetricKind metric);

// Metric column extraction (positive entries only preserved as-is).
std::vector<double> metric_values(const SweepReport& report, SweepMetricKind metric);

} // namespace skt
