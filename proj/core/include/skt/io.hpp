#pragma once

#include <map>
#include <string>
#include <vector>

#include "skt/classifier.hpp"
#include "skt/continuation.hpp"

namespace skt {

// Fully validated run description parsed from the flat key = value
// config format (optional single-level [section] headers).
struct RunConfig {
    // domain / discretization
    double a = -0.5, b = 0.5;
    int n = 511;
    BranchMode mode = BranchMode::lambda;

    // model parameters
    double alpha = 20.0;
    double b1 = 3.0, b2 = 2.0, c1 = 2.0, c2 = 1.0;
    std::vector<double> m_table;  // empty means constant m
    double m_const = 1.0;

    // continuation window in the active parameter (lambda, or d in d-mode)
    double window_lo = 0.0, window_hi = 0.0;
    bool window_set = false;

    // [continuation]
    double ds = 0.1, ds_max = 1.0;
    double localization_tol = 1e-4;
    double amplitude = 1e-2;
    int max_steps = 4000;
    int eig_count = 6;

    // [sweep]
    double sweep_lambda = 0.0;
    std::vector<double> sweep_alphas;
    int sweep_j = 0;
    int sweep_sign = +1;

    // [classify]
    ClassifyThresholds thresholds;

    std::string outdir = "out";

    std::vector<double> weight(const Grid& g) const;
    ModelParams params(const Grid& g) const;
    Grid grid() const;
    ContinuationConfig continuation() const;
};

// Throws ParseError (with line/key diagnostics) on malformed text or
// unknown keys, ValidationError when a module precondition is violated.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// CSV next to a JSON sidecar carrying the full nodal states at 17
// significant digits. CSV columns:
//   index,param,l2_u,l2_v,sup_u,sup_v,eig1..eig6,det_sign,flags
// Both files start with a versioned header; read_branch checks it and
// throws SchemaMismatch on disagreement or truncation.
void write_branch(const Branch& br, const ModelParams& p, const Grid& g,
                  const std::string& csv_path);

struct LoadedBranch {
    Branch branch;
    ModelParams params;
    Grid grid;
};
LoadedBranch read_branch(const std::string& csv_path);

// Residual re-verification of every stored point (1e-9 sup-norm);
// returns the worst residual. Used by the verify subcommand.
double verify_branch(const LoadedBranch& lb);

// One polyline of an SVG plot.
struct SvgSeries {
    std::string label;
    std::string color;  // CSS color; empty picks from the default palette
    std::vector<std::pair<double, double>> xy;
};

// Self-contained deterministic SVG. kind is "diagram" (bifurcation
// diagram: parameter horizontal, branch norm vertical) or "profile"
// (x horizontal, field values vertical). Throws EmptyData when no
// series has points.
void emit_svg(const std::string& kind, const std::vector<SvgSeries>& series,
              const std::string& path, const std::string& xlabel = "",
              const std::string& ylabel = "");

// Writes sweep.csv (metric table) and sweep.json (full report incl.
// nodal states) under dir.
void write_sweep(const SweepReport& rep, const ModelParams& base, const Grid& g,
                 const std::string& dir);

// argv-level entry point used by the sktcont tool. Exit codes: 0 ok,
// 1 solver failure, 2 configuration/usage error. Every run writes
// <outdir>/manifest.json with the config hash, code version and
// timestamps.
int cli_dispatch(int argc, const char* const* argv);

extern const char* const kCodeVersion;

} // namespace skt
