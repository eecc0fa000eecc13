#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skt/model.hpp"
#include "skt/newton.hpp"

namespace skt {

enum class BranchMode { lambda, d };

struct BranchPoint {
    double param = 0.0;  // lambda, or d in d-mode
    StateWZ state;
    StateUV uv;            // derived from state
    Norms norm_u, norm_v;  // L2 and sup of u and v
    std::vector<double> tangent;  // packed state followed by param, unit extended norm
    std::vector<double> eigs;     // smallest-magnitude Jacobian eigenvalues, by magnitude
    int det_sign = 1;
    unsigned flags = 0;  // bit 0: positivity lost at some interior node

    static constexpr unsigned flag_positivity_lost = 1u;
};

enum class BifKind { SimpleFromTrivial, Pitchfork, Fold };

struct BifurcationRecord {
    double param_at = 0.0;
    std::vector<double> kernel;  // packed (w,z) null vector, unit sup-norm
    BifKind kind = BifKind::Pitchfork;
    double localization_width = 0.0;
};

struct Branch {
    std::string id;
    // (parent branch id, parameter value of the bifurcation it grew from)
    std::optional<std::pair<std::string, double>> parent;
    std::vector<BranchPoint> points;
    std::vector<BifurcationRecord> bifurcations;
    BranchMode mode = BranchMode::lambda;
    bool step_failed = false;  // trace ended early in StepFailure
};

struct ContinuationConfig {
    double ds = 0.1;
    double ds_max = 1.0;
    double ds_min = 1e-7;
    int max_steps = 4000;
    double localization_tol = 1e-4;  // bifurcation bracket width in parameter units
    int eig_count = 6;
    NewtonConfig newton;
    double window_lo = 0.0, window_hi = 0.0;  // active-parameter window
    bool detect = true;
};

// Converge (re-verify) and decorate a point at the given parameter:
// recovers (u,v), norms, eigenvalue monitor, determinant sign, flags.
BranchPoint make_branch_point(const ModelParams& p, const Grid& g, double lambda,
                              const StateWZ& s, const ContinuationConfig& cfg);

// A point on the trivial branch (state identically zero).
BranchPoint seed_trivial_branch(const ModelParams& p, const Grid& g, double lambda0,
                                const ContinuationConfig& cfg);

// First nontrivial point of the coexistence branch, grown off the
// principal eigenfunction predictor at lambda = lambda_1(m) * (1 + 10*amplitude).
// Throws SeedFailure when amplitude <= 0, when the window excludes the
// seed parameter, or when Newton only finds the trivial state.
BranchPoint seed_primary_branch(const ModelParams& p, const Grid& g, double amplitude,
                                const ContinuationConfig& cfg);

struct StepOutcome {
    BranchPoint point;
    double ds_used = 0.0;
    double ds_next = 0.0;
};

// One pseudo-arclength predictor/corrector step. ds halves on corrector
// failure (StepFailure after 8 consecutive halvings) and the suggested
// next step grows after fast convergence, capped at cfg.ds_max.
StepOutcome arclength_step(const BranchPoint& pt, double ds, const ModelParams& p,
                           const Grid& g, const ContinuationConfig& cfg);

// Zero-crossing test on the segment (a,b): fires when the eigenvalue
// nearest zero changes sign or the determinant sign flips, then bisects
// along the arc until the crossing is bracketed within
// cfg.localization_tol in the parameter. Returns std::nullopt when no
// crossing is present.
std::optional<BifurcationRecord> detect_and_localize(const ModelParams& p, const Grid& g,
                                                     const ContinuationConfig& cfg,
                                                     const BranchPoint& a, const BranchPoint& b);

// Convenience overload operating on the last two points of a branch.
std::optional<BifurcationRecord> detect_and_localize(const Branch& br, const ModelParams& p,
                                                     const Grid& g, const ContinuationConfig& cfg);

// Corrects the two predictors base.state +/- delta * kernel at fixed
// parameter. Returns (upper, lower); with the kernel sign convention
// (leading w-component positive) the upper point carries the u-heavy
// left lobe. Throws SwitchFailure when delta <= 0 or both predictors
// fall back onto the base branch.
std::pair<BranchPoint, BranchPoint> switch_branch(const BifurcationRecord& rec,
                                                  const BranchPoint& base, double delta,
                                                  const ModelParams& p, const Grid& g,
                                                  const ContinuationConfig& cfg);

// Trace from seed across cfg.window, detecting and localizing
// bifurcations on the fly. On StepFailure the partial branch is
// returned with step_failed set.
Branch trace_branch(const BranchPoint& seed, const ModelParams& p, const Grid& g,
                    const ContinuationConfig& cfg, const std::string& id = "branch");

// Re-converge the branch solution at an exact parameter value by natural
// continuation from the nearest branch point. Throws NewtonFailure.
BranchPoint converge_at_param(const Branch& br, double lambda, const ModelParams& p,
                              const Grid& g, const ContinuationConfig& cfg);
BranchPoint converge_at_param(const BranchPoint& near, double lambda, const ModelParams& p,
                              const Grid& g, const ContinuationConfig& cfg);

// Map a lambda-branch to the diffusion-parameter form:
// d = 1/lambda, (u,v) -> (u,v)/lambda. Residuals of the transformed
// system are re-verified for every point.
Branch to_d_mode(const Branch& br, const ModelParams& p, const Grid& g);

// Inverse of to_d_mode.
Branch from_d_mode(const Branch& br, const ModelParams& p, const Grid& g);

} // namespace skt
