#include "doctest.h"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "skt/continuation.hpp"
#include "skt/errors.hpp"
#include "skt/io.hpp"

using namespace skt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out.good());
    out << text;
}

fs::path scratch(const std::string& name) {
    fs::path dir = fs::path("io-scratch") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("sktcont");
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

std::string base_config(int n, const std::string& extra = "") {
    std::ostringstream ss;
    ss << "[domain]\na = -0.5\nb = 0.5\nn = " << n
       << "\n[model]\nalpha = 20\nb1 = 3\nb2 = 2\nc1 = 2\nc2 = 1\nm = 1\n"
       << "[continuation]\nds = 0.25\nds_max = 0.5\n"
       << extra;
    return ss.str();
}

// small nontrivial branch reused by the file-format cases
Branch tiny_branch(const ModelParams& p, const Grid& g, bool with_record) {
    ContinuationConfig cfg;
    cfg.ds = 0.5;
    cfg.ds_max = 0.5;
    if (with_record) {
        cfg.window_lo = 9.0;
        cfg.window_hi = 12.0;
        return trace_branch(seed_trivial_branch(p, g, 9.0, cfg), p, g, cfg, "trivial");
    }
    cfg.ds = 0.2;
    cfg.window_lo = 10.5;
    cfg.window_hi = 12.0;
    cfg.detect = false;
    return trace_branch(seed_primary_branch(p, g, 0.01, cfg), p, g, cfg, "coexistence");
}

} // namespace

TEST_CASE("config text: defaults and full round trip of every key") {
    const RunConfig d = parse_config("");
    CHECK(d.a == -0.5);
    CHECK(d.b == 0.5);
    CHECK(d.n == 511);
    CHECK(d.mode == BranchMode::lambda);
    CHECK(d.alpha == 20.0);
    CHECK(d.b1 == 3.0);
    CHECK(d.b2 == 2.0);
    CHECK(d.c1 == 2.0);
    CHECK(d.c2 == 1.0);
    CHECK(!d.window_set);
    CHECK(d.outdir == "out");

    const std::string text =
        "# comment line\n"
        "[domain]\n"
        "a = 0\n"
        "b = 2\n"
        "n = 63\n"
        "mode = d\n"
        "[model]\n"
        "alpha = 50   # trailing comment\n"
        "b1 = 1\nb2 = 2\nc1 = 1\nc2 = 1\n"
        "m = 2.5\n"
        "[continuation]\n"
        "window = 0.01:0.12\n"
        "ds = 0.05\nds_max = 0.2\nlocalization_tol = 1e-5\n"
        "amplitude = 0.02\nmax_steps = 500\neig_count = 4\n"
        "[sweep]\n"
        "sweep_lambda = 20\nsweep_alphas = 10, 100, 1000\nsweep_j = 2\nsweep_sign = -1\n"
        "[classify]\n"
        "band_factor = 3\ngap_tol = 0.2\nproduct_tol = 0.02\n"
        "[output]\noutdir = some/dir\n";
    const RunConfig c = parse_config(text);
    CHECK(c.mode == BranchMode::d);
    CHECK(c.n == 63);
    CHECK(c.alpha == 50.0);
    CHECK(c.window_set);
    CHECK(c.window_lo == 0.01);
    CHECK(c.window_hi == 0.12);
    CHECK(c.localization_tol == 1e-5);
    CHECK(c.amplitude == 0.02);
    CHECK(c.max_steps == 500);
    CHECK(c.eig_count == 4);
    CHECK(c.sweep_lambda == 20.0);
    CHECK(c.sweep_alphas == std::vector<double>{10.0, 100.0, 1000.0});
    CHECK(c.sweep_j == 2);
    CHECK(c.sweep_sign == -1);
    CHECK(c.thresholds.band_factor == 3.0);
    CHECK(c.thresholds.gap_tol == 0.2);
    CHECK(c.thresholds.product_tol == 0.02);
    CHECK(c.outdir == "some/dir");

    const Grid g = c.grid();
    CHECK(g.n == 63);
    const std::vector<double> m = c.weight(g);
    for (double v : m) CHECK(v == 2.5);

    // d-mode: the engine window stays unset; the driver maps it itself
    const ContinuationConfig cc = c.continuation();
    CHECK(cc.window_lo == 0.0);
    CHECK(cc.window_hi == 0.0);
    CHECK(cc.eig_count == 4);

    // lambda-mode: the window rides along
    const RunConfig cl = parse_config("window_lo = 9.5\nwindow_hi = 45\n");
    const ContinuationConfig ccl = cl.continuation();
    CHECK(ccl.window_lo == 9.5);
    CHECK(ccl.window_hi == 45.0);
}

TEST_CASE("config text: malformed input is rejected with position info") {
    try {
        parse_config("a = -0.5\nnot_a_key = 3\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        CHECK(std::string(e.what()).find("not_a_key") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("[nosuchsection]\n"), ParseError);
    CHECK_THROWS_AS(parse_config("a = twelve\n"), ParseError);
    CHECK_THROWS_AS(parse_config("n = 3.7\n"), ParseError);
    CHECK_THROWS_AS(parse_config("mode = gamma\n"), ParseError);
    CHECK_THROWS_AS(parse_config("sweep_sign = 2\n"), ParseError);
    CHECK_THROWS_AS(parse_config("window = 1;2\n"), ParseError);

    CHECK_THROWS_AS(parse_config("window = 12:9\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("mode = d\nwindow = -0.1:0.2\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("ds = 0.5\nds_max = 0.1\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("eig_count = 0\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("n = 2\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("a = 1\nb = 0\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("alpha = 0\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("m = -1\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("sweep_alphas = 10, 5\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("band_factor = 1\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("n = 5\nm_table = 1, 2\n"), ValidationError);

    // m_table of matching length is accepted as the weight
    const RunConfig c = parse_config("n = 3\nm_table = 1, 2, 1\n");
    const std::vector<double> m = c.weight(c.grid());
    CHECK(m == std::vector<double>{1.0, 2.0, 1.0});

    CHECK_THROWS_AS(load_config("no-such-file.conf"), Error);
}

TEST_CASE("branch files: bit-exact round trip and re-verification") {
    const fs::path dir = scratch("roundtrip");
    const Grid g = build_grid(-0.5, 0.5, 63);
    const ModelParams p = tst::default_params(g, 0.0);

    for (bool trivial : {true, false}) {
        const Branch br = tiny_branch(p, g, trivial);
        const std::string csv =
            (dir / (trivial ? "branch-trivial.csv" : "branch-coexistence.csv")).string();
        write_branch(br, p, g, csv);
        CHECK(slurp(csv).rfind("# sktcont-branch-csv 1.0.0", 0) == 0);

        const LoadedBranch lb = read_branch(csv);
        CHECK(lb.branch.id == br.id);
        CHECK(lb.branch.mode == BranchMode::lambda);
        CHECK(lb.branch.step_failed == br.step_failed);
        CHECK(lb.params.alpha == p.alpha);
        CHECK(lb.params.eps == p.eps);
        CHECK(lb.params.b1 == p.b1);
        CHECK(lb.params.c2 == p.c2);
        CHECK(lb.grid.n == g.n);
        CHECK(lb.grid.a == g.a);
        REQUIRE(lb.branch.points.size() == br.points.size());
        for (size_t i = 0; i < br.points.size(); ++i) {
            const BranchPoint& a = br.points[i];
            const BranchPoint& b = lb.branch.points[i];
            CHECK(a.param == b.param);
            for (int k = 0; k < g.n; ++k) {
                CHECK(a.state.w[k] == b.state.w[k]);
                CHECK(a.state.z[k] == b.state.z[k]);
                CHECK(a.uv.u[k] == b.uv.u[k]);
            }
            CHECK(a.det_sign == b.det_sign);
            CHECK(a.flags == b.flags);
            REQUIRE(a.eigs.size() == b.eigs.size());
            for (size_t k = 0; k < a.eigs.size(); ++k) CHECK(a.eigs[k] == b.eigs[k]);
            REQUIRE(a.tangent.size() == b.tangent.size());
            for (size_t k = 0; k < a.tangent.size(); ++k) CHECK(a.tangent[k] == b.tangent[k]);
            CHECK(a.norm_u.l2 == b.norm_u.l2);
            CHECK(a.norm_u.sup == b.norm_u.sup);
        }
        REQUIRE(lb.branch.bifurcations.size() == br.bifurcations.size());
        for (size_t i = 0; i < br.bifurcations.size(); ++i) {
            CHECK(lb.branch.bifurcations[i].param_at == br.bifurcations[i].param_at);
            CHECK(lb.branch.bifurcations[i].kind == br.bifurcations[i].kind);
            CHECK(lb.branch.bifurcations[i].localization_width ==
                  br.bifurcations[i].localization_width);
            REQUIRE(lb.branch.bifurcations[i].kernel.size() == br.bifurcations[i].kernel.size());
        }
        CHECK(verify_branch(lb) <= 1e-9);

        // rewriting the loaded branch reproduces the files byte for byte
        const std::string csv2 = (dir / "rewrite.csv").string();
        write_branch(lb.branch, lb.params, lb.grid, csv2);
        CHECK(slurp(csv2) == slurp(csv));
        CHECK(slurp((dir / "rewrite.json").string()) ==
              slurp(csv.substr(0, csv.size() - 4) + ".json"));
    }
}

TEST_CASE("branch files: diffusion-parameter form round trips too") {
    const fs::path dir = scratch("dmode");
    const Grid g = build_grid(-0.5, 0.5, 63);
    const ModelParams p = tst::default_params(g, 0.0);
    const Branch brd = to_d_mode(tiny_branch(p, g, false), p, g);
    const std::string csv = (dir / "branch-coexistence.csv").string();
    write_branch(brd, p, g, csv);

    const LoadedBranch lb = read_branch(csv);
    CHECK(lb.branch.mode == BranchMode::d);
    REQUIRE(lb.branch.points.size() == brd.points.size());
    for (size_t i = 0; i < brd.points.size(); ++i) {
        CHECK(lb.branch.points[i].param == brd.points[i].param);
        for (int k = 0; k < g.n; ++k) {
            CHECK(lb.branch.points[i].state.w[k] == brd.points[i].state.w[k]);
            // recovered (u,v) use the d-dependent offset; they must agree
            CHECK(lb.branch.points[i].uv.u[k] ==
                  doctest::Approx(brd.points[i].uv.u[k]).epsilon(1e-12));
        }
    }
    CHECK(verify_branch(lb) <= 1e-9);
}

TEST_CASE("branch files: corruption is detected") {
    const fs::path dir = scratch("corrupt");
    const Grid g = build_grid(-0.5, 0.5, 63);
    const ModelParams p = tst::default_params(g, 0.0);
    const Branch br = tiny_branch(p, g, false);
    const std::string csv = (dir / "branch-x.csv").string();
    const std::string json = (dir / "branch-x.json").string();
    write_branch(br, p, g, csv);
    const std::string csv_text = slurp(csv);
    const std::string json_text = slurp(json);

    spit(csv, "# other-tool 9.9.9\n" + csv_text.substr(csv_text.find('\n') + 1));
    CHECK_THROWS_AS(read_branch(csv), SchemaMismatch);

    // wrong column header
    {
        const size_t p1 = csv_text.find('\n');
        const size_t p2 = csv_text.find('\n', p1 + 1);
        spit(csv, csv_text.substr(0, p1 + 1) + "index,param,oops\n" + csv_text.substr(p2 + 1));
        CHECK_THROWS_AS(read_branch(csv), SchemaMismatch);
    }

    // drop the last data row: row count disagrees with the sidecar
    {
        std::string t = csv_text;
        while (!t.empty() && t.back() == '\n') t.pop_back();
        t = t.substr(0, t.rfind('\n') + 1);
        spit(csv, t);
        CHECK_THROWS_AS(read_branch(csv), SchemaMismatch);
    }

    spit(csv, csv_text);
    spit(json, json_text.substr(0, json_text.size() / 2));
    CHECK_THROWS_AS(read_branch(csv), SchemaMismatch);

    std::string wrong = json_text;
    wrong.replace(wrong.find("sktcont-branch-json 1.0.0"), 25, "sktcont-branch-json 2.0.0");
    spit(json, wrong);
    CHECK_THROWS_AS(read_branch(csv), SchemaMismatch);

    fs::remove(json);
    CHECK_THROWS_AS(read_branch(csv), SchemaMismatch);
}

TEST_CASE("svg output: deterministic bytes, legends, failure modes") {
    const fs::path dir = scratch("svg");
    SvgSeries s1{"first", "", {{0.0, 1.0}, {1.0, 2.0}, {2.0, 1.5}}};
    SvgSeries s2{"second", "#112233", {{0.0, 0.5}, {2.0, 2.5}}};
    const std::string p1 = (dir / "a.svg").string();
    const std::string p2 = (dir / "b.svg").string();
    emit_svg("diagram", {s1, s2}, p1, "param", "norm");
    emit_svg("diagram", {s1, s2}, p2, "param", "norm");
    const std::string t = slurp(p1);
    CHECK(t == slurp(p2));
    CHECK(t.find("<svg") != std::string::npos);
    CHECK(t.find("sktcont-svg 1.0.0") != std::string::npos);
    CHECK(t.find("first") != std::string::npos);
    CHECK(t.find("second") != std::string::npos);
    CHECK(t.find("#112233") != std::string::npos);
    CHECK(t.find("param") != std::string::npos);
    CHECK(t.find("norm") != std::string::npos);

    // single point: degenerate ranges still render
    emit_svg("profile", {SvgSeries{"dot", "", {{1.0, 1.0}}}}, (dir / "c.svg").string());
    CHECK(slurp((dir / "c.svg").string()).find("<svg") != std::string::npos);

    CHECK_THROWS_AS(emit_svg("diagram", {SvgSeries{"empty", "", {}}}, p1), EmptyData);
    CHECK_THROWS_AS(emit_svg("diagram", {}, p1), EmptyData);
    CHECK_THROWS_AS(emit_svg("pie", {s1}, p1), ValidationError);
}

TEST_CASE("sweep files carry the schema header and the verdict") {
    const fs::path dir = scratch("sweep-files");
    const Grid g = build_grid(-0.5, 0.5, 15);
    const ModelParams p = tst::default_params(g, 20.0);
    SweepReport rep;
    rep.lambda = 20.0;
    rep.selector = BranchSelector{0, 1};
    rep.alphas = {10.0, 100.0, 1000.0};
    for (double a : rep.alphas) {
        (void)a;
        BranchPoint pt;
        pt.param = 20.0;
        pt.state.w.assign(g.n, 0.25);
        pt.state.z.assign(g.n, 0.0625);
        pt.uv.u.assign(g.n, 0.25);
        pt.uv.v.assign(g.n, 0.25);
        rep.points.push_back(pt);
        rep.metrics.push_back(SweepMetrics{0.1, 0.2, 5.0, 5.0, 0.3, 0.0});
    }
    rep.verdict = Verdict::SmallCoexistence;
    rep.fitted_rate = 1.0;
    write_sweep(rep, p, g, dir.string());

    const std::string csv = slurp((dir / "sweep.csv").string());
    CHECK(csv.rfind("# sktcont-sweep-csv 1.0.0", 0) == 0);
    CHECK(csv.find("alpha") != std::string::npos);
    const std::string js = slurp((dir / "sweep.json").string());
    CHECK(js.find("sktcont-sweep-json 1.0.0") != std::string::npos);
    CHECK(js.find("small_coexistence") != std::string::npos);
    CHECK(js.find("\"lambda\"") != std::string::npos);
}

TEST_CASE("driver: usage and configuration failures exit with 2") {
    const fs::path dir = scratch("cli-usage");
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"frobnicate"}) == 2);
    CHECK(run_cli({"switch", "--at", "10"}) == 2);  // missing --branch
    CHECK(run_cli({"--help"}) == 0);

    const std::string bad = (dir / "bad.conf").string();
    spit(bad, "definitely = wrong\n");
    CHECK(run_cli({"eigs", "--config", bad, "--outdir", dir.string()}) == 2);

    // trace needs a window; the manifest still records the failed run
    const std::string cfg = (dir / "ok.conf").string();
    spit(cfg, base_config(63));
    CHECK(run_cli({"trace", "--config", cfg, "--outdir", dir.string()}) == 2);
    const std::string manifest = slurp((dir / "manifest.json").string());
    CHECK(manifest.find("sktcont-manifest 1.0.0") != std::string::npos);
    CHECK(manifest.find("\"status\": 2") != std::string::npos);
}

TEST_CASE("driver: eigenvalue table run end to end") {
    const fs::path dir = scratch("cli-eigs");
    const std::string cfg = (dir / "run.conf").string();
    spit(cfg, base_config(63));
    CHECK(run_cli({"eigs", "--config", cfg, "--outdir", dir.string(), "--k", "4"}) == 0);

    const std::string csv = slurp((dir / "eigs.csv").string());
    CHECK(csv.rfind("# sktcont-eigs-csv 1.0.0", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2 + 4);  // magic + header + 4 rows

    const std::string manifest = slurp((dir / "manifest.json").string());
    CHECK(manifest.find("\"code_version\": \"" + std::string(kCodeVersion) + "\"") !=
          std::string::npos);
    CHECK(manifest.find("\"status\": 0") != std::string::npos);
    CHECK(manifest.find("\"command\"") != std::string::npos);
    const size_t hp = manifest.find("\"config_hash\": \"");
    REQUIRE(hp != std::string::npos);
    const std::string hash = manifest.substr(hp + 16, 16);
    for (char c : hash) CHECK(std::isxdigit(static_cast<unsigned char>(c)));
}

TEST_CASE("driver: trace, verify, plot, determinism") {
    const fs::path dir = scratch("cli-trace");
    const std::string cfg = (dir / "run.conf").string();
    spit(cfg, base_config(63));

    const std::string out1 = (dir / "r1").string();
    CHECK(run_cli({"trace", "--config", cfg, "--outdir", out1, "--window", "10:11"}) == 0);
    const std::string triv = out1 + "/branch-trivial.csv";
    const std::string coex = out1 + "/branch-coexistence.csv";
    CHECK(fs::exists(triv));
    CHECK(fs::exists(coex));
    CHECK(run_cli({"verify", "--outdir", out1, triv, coex}) == 0);

    // identical run, identical branch bytes
    const std::string out2 = (dir / "r2").string();
    CHECK(run_cli({"trace", "--config", cfg, "--outdir", out2, "--window", "10:11"}) == 0);
    CHECK(slurp(triv) == slurp(out2 + "/branch-trivial.csv"));
    CHECK(slurp(coex) == slurp(out2 + "/branch-coexistence.csv"));
    CHECK(slurp(out1 + "/branch-coexistence.json") ==
          slurp(out2 + "/branch-coexistence.json"));

    // plots from the traced data
    CHECK(run_cli({"plot", "--config", cfg, "--outdir", out1, "--diagram", out1}) == 0);
    CHECK(slurp(out1 + "/diagram.svg").find("<svg") != std::string::npos);
    CHECK(run_cli({"plot", "--config", cfg, "--outdir", out1, "--profile", coex, "--at",
                   "11"}) == 0);
    CHECK(slurp(out1 + "/profile.svg").find("<svg") != std::string::npos);
    CHECK(run_cli({"plot", "--config", cfg, "--outdir", out1, "--diagram", out1, "--profile",
                   coex}) == 2);
    const std::string empty_dir = (dir / "empty").string();
    fs::create_directories(empty_dir);
    CHECK(run_cli({"plot", "--config", cfg, "--outdir", out1, "--diagram", empty_dir}) == 1);

    // verification fails loudly on a tampered state
    std::string jt = slurp(out1 + "/branch-coexistence.json");
    const size_t wp = jt.find("\"w\": [");
    REQUIRE(wp != std::string::npos);
    jt.replace(wp + 6, 1, "9");
    spit(out1 + "/branch-coexistence.json", jt);
    CHECK(run_cli({"verify", "--outdir", out1, coex}) != 0);
}

TEST_CASE("driver: switch onto the pitchfork pair") {
    const fs::path dir = scratch("cli-switch");
    const std::string cfg = (dir / "run.conf").string();
    spit(cfg, base_config(63));
    const std::string out = (dir / "o").string();
    CHECK(run_cli({"trace", "--config", cfg, "--outdir", out, "--window", "10:45"}) == 0);
    const std::string coex = out + "/branch-coexistence.csv";
    REQUIRE(fs::exists(coex));

    CHECK(run_cli({"switch", "--config", cfg, "--outdir", out, "--branch", coex, "--at",
                   "41"}) == 0);
    const std::string up = out + "/branch-coexistence-upper.csv";
    const std::string lo = out + "/branch-coexistence-lower.csv";
    REQUIRE(fs::exists(up));
    REQUIRE(fs::exists(lo));
    CHECK(run_cli({"verify", "--outdir", out, up, lo}) == 0);

    const LoadedBranch lu = read_branch(up);
    REQUIRE(lu.branch.parent.has_value());
    CHECK(lu.branch.parent->first == "coexistence");
    CHECK(lu.branch.parent->second > 35.0);
    CHECK(lu.branch.parent->second < 45.0);
    for (const BranchPoint& pt : lu.branch.points) CHECK(pt.param >= lu.branch.parent->second - 1.0);
}

TEST_CASE("driver: scalar limit solvers and the shooter") {
    const fs::path dir = scratch("cli-limits");
    const std::string cfg = (dir / "run.conf").string();
    spit(cfg, base_config(63));
    const std::string out = (dir / "o").string();

    CHECK(run_cli({"limits", "--config", cfg, "--outdir", out, "--lambda", "25", "--j", "2",
                   "--s", "0.05"}) == 0);
    CHECK(slurp(out + "/limits.csv").rfind("# sktcont-limits-csv 1.0.0", 0) == 0);
    CHECK(slurp(out + "/zj.csv").rfind("# sktcont-zj-csv 1.0.0", 0) == 0);

    CHECK(run_cli({"shoot", "--config", cfg, "--outdir", out, "--lambda", "43.0673", "--j",
                   "2", "--check"}) == 0);
    CHECK(slurp(out + "/shoot.csv").rfind("# sktcont-shoot-csv 1.0.0", 0) == 0);
    const std::string js = slurp(out + "/shoot.json");
    CHECK(js.find("sktcont-shoot-json 1.0.0") != std::string::npos);
    CHECK(js.find("\"zeros\": 1") != std::string::npos);

    // below the principal eigenvalue the limit family does not exist
    CHECK(run_cli({"limits", "--config", cfg, "--outdir", out, "--lambda", "5"}) == 1);
}

TEST_CASE("driver: sweep subcommand, including the nonexistence regime") {
    const fs::path dir = scratch("cli-sweep");
    const std::string cfg = (dir / "run.conf").string();
    spit(cfg, base_config(63, "[sweep]\nsweep_lambda = 20\nsweep_alphas = 20, 60, 200, 600\n"));
    const std::string out = (dir / "o").string();
    CHECK(run_cli({"sweep", "--config", cfg, "--outdir", out}) == 0);
    const std::string js = slurp(out + "/sweep.json");
    CHECK(js.find("sktcont-sweep-json 1.0.0") != std::string::npos);
    CHECK(js.find("small_coexistence") != std::string::npos);

    const std::string out2 = (dir / "o2").string();
    CHECK(run_cli({"sweep", "--config", cfg, "--outdir", out2, "--lambda", "5"}) == 0);
    const std::string js2 = slurp(out2 + "/sweep.json");
    CHECK(js2.find("NoPositiveSolution") != std::string::npos);
}
