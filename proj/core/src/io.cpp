#include "skt/io.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "skt/errors.hpp"
#include "skt/limits.hpp"

namespace fs = std::filesystem;

namespace skt {

const char* const kCodeVersion = "1.0.0";

namespace {

constexpr const char* kBranchCsvMagic = "# sktcont-branch-csv 1.0.0";
constexpr const char* kBranchCsvCols =
    "index,param,l2_u,l2_v,sup_u,sup_v,eig1,eig2,eig3,eig4,eig5,eig6,det_sign,flags";
constexpr const char* kBranchJsonSchema = "sktcont-branch-json 1.0.0";
constexpr const char* kSweepCsvMagic = "# sktcont-sweep-csv 1.0.0";
constexpr const char* kSweepJsonSchema = "sktcont-sweep-json 1.0.0";
constexpr const char* kManifestSchema = "sktcont-manifest 1.0.0";
constexpr const char* kSvgMagic = "sktcont-svg 1.0.0";
constexpr const char* kLimitsCsvMagic = "# sktcont-limits-csv 1.0.0";
constexpr const char* kShootCsvMagic = "# sktcont-shoot-csv 1.0.0";
constexpr const char* kEigsCsvMagic = "# sktcont-eigs-csv 1.0.0";
constexpr const char* kZjCsvMagic = "# sktcont-zj-csv 1.0.0";

// 17 significant digits round-trip any double exactly in decimal. Negative
// zero is spelled with a decimal point: bare "-0" goes down the integer path
// of the json parser and comes back as +0, breaking byte-exact rewrites.
std::string fmt17(double v) {
    if (v == 0.0 && std::signbit(v)) return "-0.0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void json_escape(std::ostream& os, const std::string& s) {
    os << '"';
    for (unsigned char c : s) {
        switch (c) {
            case '"': os << "\\\""; break;
            case '\\': os << "\\\\"; break;
            case '\n': os << "\\n"; break;
            case '\t': os << "\\t"; break;
            case '\r': os << "\\r"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    os << buf;
                } else {
                    os << c;
                }
        }
    }
    os << '"';
}

void json_array(std::ostream& os, const std::vector<double>& v) {
    os << '[';
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << fmt17(v[i]);
    }
    os << ']';
}

void write_text_file(const std::string& path, const std::string& text) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open for writing: " + path);
    f << text;
    if (!f) throw ValidationError("write failed: " + path);
}

std::string sidecar_path(const std::string& csv_path) {
    if (csv_path.size() >= 4 && csv_path.compare(csv_path.size() - 4, 4, ".csv") == 0)
        return csv_path.substr(0, csv_path.size() - 4) + ".json";
    return csv_path + ".json";
}

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double_strict(const std::string& v, int line, const std::string& key) {
    const std::string t = trim(v);
    char* end = nullptr;
    const double x = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
        throw ParseError("line " + std::to_string(line) + ": key '" + key +
                         "': cannot parse number from '" + v + "'");
    return x;
}

int parse_int_strict(const std::string& v, int line, const std::string& key) {
    const double x = parse_double_strict(v, line, key);
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x)
        throw ParseError("line " + std::to_string(line) + ": key '" + key +
                         "': expected an integer, got '" + v + "'");
    return i;
}

std::vector<double> parse_list_strict(const std::string& v, int line, const std::string& key) {
    std::vector<double> out;
    std::string item;
    std::string norm = v;
    std::replace(norm.begin(), norm.end(), ',', ' ');
    std::istringstream nn(norm);
    while (nn >> item) out.push_back(parse_double_strict(item, line, key));
    if (out.empty())
        throw ParseError("line " + std::to_string(line) + ": key '" + key + "': empty list");
    return out;
}

int parse_sign(const std::string& v, int line) {
    const std::string t = trim(v);
    if (t == "+" || t == "+1" || t == "1") return +1;
    if (t == "-" || t == "-1") return -1;
    throw ParseError("line " + std::to_string(line) + ": key 'sweep_sign': expected + or -");
}

std::pair<double, double> parse_window(const std::string& v) {
    const size_t c = v.find(':');
    if (c == std::string::npos)
        throw ParseError("window: expected lo:hi, got '" + v + "'");
    char* e1 = nullptr;
    char* e2 = nullptr;
    const std::string lo = trim(v.substr(0, c)), hi = trim(v.substr(c + 1));
    const double l = std::strtod(lo.c_str(), &e1);
    const double h = std::strtod(hi.c_str(), &e2);
    if (lo.empty() || hi.empty() || e1 != lo.c_str() + lo.size() || e2 != hi.c_str() + hi.size())
        throw ParseError("window: cannot parse bounds from '" + v + "'");
    if (!(l < h)) throw ValidationError("window: need lo < hi, got " + v);
    return {l, h};
}

const char* kind_name(BifKind k) {
    switch (k) {
        case BifKind::SimpleFromTrivial: return "simple_from_trivial";
        case BifKind::Pitchfork: return "pitchfork";
        case BifKind::Fold: return "fold";
    }
    return "pitchfork";
}

BifKind kind_from_name(const std::string& s) {
    if (s == "simple_from_trivial") return BifKind::SimpleFromTrivial;
    if (s == "pitchfork") return BifKind::Pitchfork;
    if (s == "fold") return BifKind::Fold;
    throw SchemaMismatch("unknown bifurcation kind '" + s + "'");
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::SmallCoexistence: return "small_coexistence";
        case Verdict::CompleteSegregation: return "complete_segregation";
        case Verdict::Undetermined: return "undetermined";
    }
    return "undetermined";
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string iso_utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

std::vector<double> RunConfig::weight(const Grid& g) const {
    if (m_table.empty()) {
        if (!(m_const > 0.0) || !std::isfinite(m_const))
            throw ValidationError("RunConfig: constant weight must be positive and finite");
        return std::vector<double>(static_cast<size_t>(g.n), m_const);
    }
    if (static_cast<int>(m_table.size()) != g.n)
        throw ValidationError("RunConfig: m_table has " + std::to_string(m_table.size()) +
                              " entries, grid has " + std::to_string(g.n) + " interior nodes");
    return m_table;
}

Grid RunConfig::grid() const {
    try {
        return build_grid(a, b, n);
    } catch (const InvalidDomain& e) {
        throw ValidationError(std::string("RunConfig: ") + e.what());
    }
}

ModelParams RunConfig::params(const Grid& g) const {
    ModelParams p = ModelParams::make(alpha, b1, b2, c1, c2, weight(g), 0.0);
    p.validate(g);
    return p;
}

ContinuationConfig RunConfig::continuation() const {
    ContinuationConfig cc;
    cc.ds = ds;
    cc.ds_max = ds_max;
    cc.localization_tol = localization_tol;
    cc.max_steps = max_steps;
    cc.eig_count = eig_count;
    // the window is kept in the active parameter; d-mode callers convert
    if (window_set && mode == BranchMode::lambda) {
        cc.window_lo = window_lo;
        cc.window_hi = window_hi;
    }
    return cc;
}

RunConfig parse_config(const std::string& text) {
    static const std::set<std::string> sections = {"domain",  "model",    "continuation",
                                                   "sweep",   "classify", "output"};
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int ln = 0;
    while (std::getline(in, raw)) {
        ++ln;
        std::string line = raw;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("line " + std::to_string(ln) + ": unterminated section header");
            const std::string sec = trim(line.substr(1, line.size() - 2));
            if (!sections.count(sec))
                throw ParseError("line " + std::to_string(ln) + ": unknown section '" + sec +
                                 "'");
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(ln) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError("line " + std::to_string(ln) + ": empty key");

        if (key == "a") cfg.a = parse_double_strict(val, ln, key);
        else if (key == "b") cfg.b = parse_double_strict(val, ln, key);
        else if (key == "n") cfg.n = parse_int_strict(val, ln, key);
        else if (key == "mode") {
            if (val == "lambda") cfg.mode = BranchMode::lambda;
            else if (val == "d") cfg.mode = BranchMode::d;
            else
                throw ParseError("line " + std::to_string(ln) +
                                 ": mode must be 'lambda' or 'd', got '" + val + "'");
        }
        else if (key == "alpha") cfg.alpha = parse_double_strict(val, ln, key);
        else if (key == "b1") cfg.b1 = parse_double_strict(val, ln, key);
        else if (key == "b2") cfg.b2 = parse_double_strict(val, ln, key);
        else if (key == "c1") cfg.c1 = parse_double_strict(val, ln, key);
        else if (key == "c2") cfg.c2 = parse_double_strict(val, ln, key);
        else if (key == "m") cfg.m_const = parse_double_strict(val, ln, key);
        else if (key == "m_table") cfg.m_table = parse_list_strict(val, ln, key);
        else if (key == "window") {
            const auto [lo, hi] = parse_window(val);
            cfg.window_lo = lo;
            cfg.window_hi = hi;
            cfg.window_set = true;
        }
        else if (key == "window_lo") { cfg.window_lo = parse_double_strict(val, ln, key); cfg.window_set = true; }
        else if (key == "window_hi") { cfg.window_hi = parse_double_strict(val, ln, key); cfg.window_set = true; }
        else if (key == "ds") cfg.ds = parse_double_strict(val, ln, key);
        else if (key == "ds_max") cfg.ds_max = parse_double_strict(val, ln, key);
        else if (key == "localization_tol") cfg.localization_tol = parse_double_strict(val, ln, key);
        else if (key == "amplitude") cfg.amplitude = parse_double_strict(val, ln, key);
        else if (key == "max_steps") cfg.max_steps = parse_int_strict(val, ln, key);
        else if (key == "eig_count") cfg.eig_count = parse_int_strict(val, ln, key);
        else if (key == "sweep_lambda") cfg.sweep_lambda = parse_double_strict(val, ln, key);
        else if (key == "sweep_alphas") cfg.sweep_alphas = parse_list_strict(val, ln, key);
        else if (key == "sweep_j") cfg.sweep_j = parse_int_strict(val, ln, key);
        else if (key == "sweep_sign") cfg.sweep_sign = parse_sign(val, ln);
        else if (key == "band_factor") cfg.thresholds.band_factor = parse_double_strict(val, ln, key);
        else if (key == "gap_tol") cfg.thresholds.gap_tol = parse_double_strict(val, ln, key);
        else if (key == "product_tol") cfg.thresholds.product_tol = parse_double_strict(val, ln, key);
        else if (key == "outdir") {
            if (val.empty())
                throw ParseError("line " + std::to_string(ln) + ": outdir must not be empty");
            cfg.outdir = val;
        }
        else
            throw ParseError("line " + std::to_string(ln) + ": unknown key '" + key + "'");
    }

    // validate every module precondition the config can violate up front
    const Grid g = cfg.grid();
    cfg.params(g);
    if (cfg.window_set) {
        if (!(cfg.window_lo < cfg.window_hi))
            throw ValidationError("RunConfig: window needs lo < hi");
        if (cfg.mode == BranchMode::d && !(cfg.window_lo > 0.0))
            throw ValidationError("RunConfig: d-mode window must be strictly positive");
    }
    if (!(cfg.ds > 0.0) || !(cfg.ds_max >= cfg.ds))
        throw ValidationError("RunConfig: need 0 < ds <= ds_max");
    if (!(cfg.localization_tol > 0.0))
        throw ValidationError("RunConfig: localization_tol must be positive");
    if (!(cfg.amplitude > 0.0)) throw ValidationError("RunConfig: amplitude must be positive");
    if (cfg.max_steps < 1) throw ValidationError("RunConfig: max_steps must be >= 1");
    if (cfg.eig_count < 1 || cfg.eig_count > 2 * cfg.n)
        throw ValidationError("RunConfig: eig_count out of range");
    if (!cfg.sweep_alphas.empty()) {
        for (size_t i = 0; i + 1 < cfg.sweep_alphas.size(); ++i)
            if (!(cfg.sweep_alphas[i] < cfg.sweep_alphas[i + 1]))
                throw ValidationError("RunConfig: sweep_alphas must be strictly increasing");
        if (!(cfg.sweep_alphas[0] > 0.0))
            throw ValidationError("RunConfig: sweep_alphas must be positive");
    }
    if (cfg.sweep_j != 0 && cfg.sweep_j < 2)
        throw ValidationError("RunConfig: sweep_j must be 0 or >= 2");
    if (cfg.sweep_sign != 1 && cfg.sweep_sign != -1)
        throw ValidationError("RunConfig: sweep_sign must be +1 or -1");
    if (!(cfg.thresholds.band_factor > 1.0) || !(cfg.thresholds.gap_tol > 0.0) ||
        !(cfg.thresholds.product_tol > 0.0))
        throw ValidationError("RunConfig: classification thresholds out of range");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void write_branch(const Branch& br, const ModelParams& p, const Grid& g,
                  const std::string& csv_path) {
    if (!std::isfinite(p.alpha))
        throw ValidationError("write_branch: params must carry a finite alpha");
    if (static_cast<int>(p.m.size()) != g.n)
        throw ValidationError("write_branch: weight/grid size mismatch");

    std::ostringstream csv;
    csv << kBranchCsvMagic << '\n' << kBranchCsvCols << '\n';
    for (size_t i = 0; i < br.points.size(); ++i) {
        const BranchPoint& pt = br.points[i];
        csv << i << ',' << fmt17(pt.param) << ',' << fmt17(pt.norm_u.l2) << ','
            << fmt17(pt.norm_v.l2) << ',' << fmt17(pt.norm_u.sup) << ','
            << fmt17(pt.norm_v.sup);
        for (int e = 0; e < 6; ++e) {
            const double val = pt.eigs.empty()
                                   ? 0.0
                                   : pt.eigs[std::min<size_t>(e, pt.eigs.size() - 1)];
            csv << ',' << fmt17(val);
        }
        csv << ',' << pt.det_sign << ',' << pt.flags << '\n';
    }
    write_text_file(csv_path, csv.str());

    std::ostringstream js;
    js << "{\n  \"schema\": \"" << kBranchJsonSchema << "\",\n  \"id\": ";
    json_escape(js, br.id);
    js << ",\n  \"mode\": \"" << (br.mode == BranchMode::lambda ? "lambda" : "d") << "\",\n";
    js << "  \"parent\": ";
    if (br.parent) {
        js << "{\"id\": ";
        json_escape(js, br.parent->first);
        js << ", \"param\": " << fmt17(br.parent->second) << "}";
    } else {
        js << "null";
    }
    js << ",\n  \"step_failed\": " << (br.step_failed ? "true" : "false") << ",\n";
    js << "  \"grid\": {\"a\": " << fmt17(g.a) << ", \"b\": " << fmt17(g.b)
       << ", \"n\": " << g.n << "},\n";
    js << "  \"params\": {\"alpha\": " << fmt17(p.alpha) << ", \"eps\": " << fmt17(p.eps)
       << ", \"b1\": " << fmt17(p.b1) << ", \"b2\": " << fmt17(p.b2) << ", \"c1\": "
       << fmt17(p.c1) << ", \"c2\": " << fmt17(p.c2) << ", \"m\": ";
    json_array(js, p.m);
    js << "},\n  \"points\": [";
    for (size_t i = 0; i < br.points.size(); ++i) {
        const BranchPoint& pt = br.points[i];
        js << (i ? ",\n    " : "\n    ");
        js << "{\"param\": " << fmt17(pt.param) << ", \"w\": ";
        json_array(js, pt.state.w);
        js << ", \"z\": ";
        json_array(js, pt.state.z);
        js << ", \"eigs\": ";
        json_array(js, pt.eigs);
        js << ", \"det_sign\": " << pt.det_sign << ", \"flags\": " << pt.flags
           << ", \"tangent\": ";
        if (pt.tangent.empty()) js << "null";
        else json_array(js, pt.tangent);
        js << "}";
    }
    js << "\n  ],\n  \"bifurcations\": [";
    for (size_t i = 0; i < br.bifurcations.size(); ++i) {
        const BifurcationRecord& rec = br.bifurcations[i];
        js << (i ? ",\n    " : "\n    ");
        js << "{\"param\": " << fmt17(rec.param_at) << ", \"kind\": \"" << kind_name(rec.kind)
           << "\", \"width\": " << fmt17(rec.localization_width) << ", \"kernel\": ";
        json_array(js, rec.kernel);
        js << "}";
    }
    js << "\n  ]\n}\n";
    write_text_file(sidecar_path(csv_path), js.str());
}

LoadedBranch read_branch(const std::string& csv_path) {
    std::ifstream cf(csv_path, std::ios::binary);
    if (!cf) throw SchemaMismatch("cannot open " + csv_path);
    std::string l1, l2;
    std::getline(cf, l1);
    std::getline(cf, l2);
    if (l1 != kBranchCsvMagic)
        throw SchemaMismatch(csv_path + ": expected header '" + kBranchCsvMagic + "'");
    if (l2 != kBranchCsvCols) throw SchemaMismatch(csv_path + ": unexpected column header");
    size_t rows = 0;
    std::string line;
    while (std::getline(cf, line))
        if (!trim(line).empty()) ++rows;

    const std::string jp = sidecar_path(csv_path);
    std::ifstream jf(jp, std::ios::binary);
    if (!jf) throw SchemaMismatch("missing sidecar " + jp);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(jf);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(jp + ": malformed or truncated JSON: " + e.what());
    }

    try {
        if (j.at("schema").get<std::string>() != kBranchJsonSchema)
            throw SchemaMismatch(jp + ": schema is '" + j.at("schema").get<std::string>() +
                                 "', expected '" + kBranchJsonSchema + "'");
        LoadedBranch lb;
        lb.branch.id = j.at("id").get<std::string>();
        const std::string mode = j.at("mode").get<std::string>();
        if (mode != "lambda" && mode != "d")
            throw SchemaMismatch(jp + ": unknown mode '" + mode + "'");
        lb.branch.mode = mode == "lambda" ? BranchMode::lambda : BranchMode::d;
        if (!j.at("parent").is_null())
            lb.branch.parent = {j.at("parent").at("id").get<std::string>(),
                                j.at("parent").at("param").get<double>()};
        lb.branch.step_failed = j.at("step_failed").get<bool>();
        const auto& jg = j.at("grid");
        lb.grid = build_grid(jg.at("a").get<double>(), jg.at("b").get<double>(),
                             jg.at("n").get<int>());
        const auto& jpar = j.at("params");
        lb.params = ModelParams::make(jpar.at("alpha").get<double>(), jpar.at("b1").get<double>(),
                                      jpar.at("b2").get<double>(), jpar.at("c1").get<double>(),
                                      jpar.at("c2").get<double>(),
                                      jpar.at("m").get<std::vector<double>>(), 0.0);
        lb.params.validate(lb.grid);

        const size_t n = static_cast<size_t>(lb.grid.n);
        for (const auto& jpt : j.at("points")) {
            BranchPoint pt;
            pt.param = jpt.at("param").get<double>();
            pt.state.w = jpt.at("w").get<std::vector<double>>();
            pt.state.z = jpt.at("z").get<std::vector<double>>();
            if (pt.state.w.size() != n || pt.state.z.size() != n)
                throw SchemaMismatch(jp + ": nodal state length disagrees with the grid");
            pt.eigs = jpt.at("eigs").get<std::vector<double>>();
            pt.det_sign = jpt.at("det_sign").get<int>();
            pt.flags = jpt.at("flags").get<unsigned>();
            if (!jpt.at("tangent").is_null())
                pt.tangent = jpt.at("tangent").get<std::vector<double>>();
            const double eps_eff = lb.branch.mode == BranchMode::lambda
                                       ? lb.params.eps
                                       : lb.params.eps * pt.param;
            pt.uv = uv_from_wz(pt.state, eps_eff);
            pt.norm_u = norms(pt.uv.u, lb.grid);
            pt.norm_v = norms(pt.uv.v, lb.grid);
            lb.branch.points.push_back(std::move(pt));
        }
        for (const auto& jb : j.at("bifurcations")) {
            BifurcationRecord rec;
            rec.param_at = jb.at("param").get<double>();
            rec.kind = kind_from_name(jb.at("kind").get<std::string>());
            rec.localization_width = jb.at("width").get<double>();
            rec.kernel = jb.at("kernel").get<std::vector<double>>();
            lb.branch.bifurcations.push_back(std::move(rec));
        }
        if (rows != lb.branch.points.size())
            throw SchemaMismatch(csv_path + ": CSV carries " + std::to_string(rows) +
                                 " rows but the sidecar has " +
                                 std::to_string(lb.branch.points.size()) + " points");
        return lb;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(jp + ": missing or mistyped field: " + e.what());
    }
}

double verify_branch(const LoadedBranch& lb) {
    double worst = 0.0;
    for (const BranchPoint& pt : lb.branch.points) {
        const Residual r =
            lb.branch.mode == BranchMode::lambda
                ? residual_wz(lb.params.with_lambda(pt.param), pt.state, lb.grid)
                : residual_wz_d(lb.params, pt.state, lb.grid, pt.param);
        worst = std::max(worst, r.sup());
    }
    return worst;
}

void emit_svg(const std::string& kind, const std::vector<SvgSeries>& series,
              const std::string& path, const std::string& xlabel, const std::string& ylabel) {
    if (kind != "diagram" && kind != "profile")
        throw ValidationError("emit_svg: kind must be 'diagram' or 'profile'");
    bool any = false;
    for (const auto& s : series)
        if (!s.xy.empty()) any = true;
    if (!any) throw EmptyData("emit_svg: no series has points");

    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool first = true;
    for (const auto& s : series)
        for (const auto& [x, y] : s.xy) {
            if (first) {
                xmin = xmax = x;
                ymin = ymax = y;
                first = false;
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    auto padded = [](double lo, double hi) {
        double pad = (hi - lo) * 0.05;
        if (!(pad > 0.0)) pad = std::max(1.0, std::fabs(hi)) * 0.1;
        return std::pair<double, double>(lo - pad, hi + pad);
    };
    const auto [xlo, xhi] = padded(xmin, xmax);
    const auto [ylo, yhi] = padded(ymin, ymax);

    const double W = 800, H = 560, ML = 76, MR = 24, MT = 28, MB = 56;
    const double PW = W - ML - MR, PH = H - MT - MB;
    auto mx = [&](double v) { return ML + (v - xlo) / (xhi - xlo) * PW; };
    auto my = [&](double v) { return MT + (yhi - v) / (yhi - ylo) * PH; };
    auto px = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    auto esc = [](const std::string& s) {
        std::string o;
        for (char c : s) {
            if (c == '&') o += "&amp;";
            else if (c == '<') o += "&lt;";
            else if (c == '>') o += "&gt;";
            else o += c;
        }
        return o;
    };
    // blue / red / purple first, matching the usual diagram scheme
    static const char* palette[] = {"#1f4fd8", "#d21f1f", "#8a1fd2",
                                    "#1f8a2a", "#d2841f", "#1fb4d2"};

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<!-- " << kSvgMagic << " kind=" << kind << " -->\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H
        << "\" fill=\"#ffffff\"/>\n";
    svg << "<rect x=\"" << px(ML) << "\" y=\"" << px(MT) << "\" width=\"" << px(PW)
        << "\" height=\"" << px(PH) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = xlo + (xhi - xlo) * i / 4.0;
        const double yv = ylo + (yhi - ylo) * i / 4.0;
        svg << "<line x1=\"" << px(mx(xv)) << "\" y1=\"" << px(MT + PH) << "\" x2=\""
            << px(mx(xv)) << "\" y2=\"" << px(MT + PH + 5) << "\" stroke=\"#000000\"/>\n";
        svg << "<text x=\"" << px(mx(xv)) << "\" y=\"" << px(MT + PH + 20)
            << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">"
            << esc(fmt6(xv)) << "</text>\n";
        svg << "<line x1=\"" << px(ML - 5) << "\" y1=\"" << px(my(yv)) << "\" x2=\"" << px(ML)
            << "\" y2=\"" << px(my(yv)) << "\" stroke=\"#000000\"/>\n";
        svg << "<text x=\"" << px(ML - 8) << "\" y=\"" << px(my(yv) + 4)
            << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">"
            << esc(fmt6(yv)) << "</text>\n";
    }
    if (!xlabel.empty())
        svg << "<text x=\"" << px(ML + PW / 2) << "\" y=\"" << px(H - 14)
            << "\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\">"
            << esc(xlabel) << "</text>\n";
    if (!ylabel.empty())
        svg << "<text x=\"18\" y=\"" << px(MT + PH / 2)
            << "\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\" "
               "transform=\"rotate(-90 18 "
            << px(MT + PH / 2) << ")\">" << esc(ylabel) << "</text>\n";

    size_t ci = 0;
    for (const auto& s : series) {
        const std::string color = s.color.empty() ? palette[ci % 6] : s.color;
        if (!s.xy.empty()) {
            svg << "<polyline fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.5\" points=\"";
            for (size_t i = 0; i < s.xy.size(); ++i) {
                if (i) svg << ' ';
                svg << px(mx(s.xy[i].first)) << ',' << px(my(s.xy[i].second));
            }
            svg << "\"/>\n";
        }
        if (!s.label.empty()) {
            const double ly = MT + 16 + 16.0 * static_cast<double>(ci);
            svg << "<line x1=\"" << px(ML + PW - 150) << "\" y1=\"" << px(ly - 4) << "\" x2=\""
                << px(ML + PW - 130) << "\" y2=\"" << px(ly - 4) << "\" stroke=\"" << color
                << "\" stroke-width=\"2\"/>\n";
            svg << "<text x=\"" << px(ML + PW - 124) << "\" y=\"" << px(ly)
                << "\" font-family=\"monospace\" font-size=\"11\">" << esc(s.label)
                << "</text>\n";
        }
        ++ci;
    }
    svg << "</svg>\n";
    write_text_file(path, svg.str());
}

void write_sweep(const SweepReport& rep, const ModelParams& base, const Grid& g,
                 const std::string& dir) {
    fs::create_directories(dir);
    std::ostringstream csv;
    csv << kSweepCsvMagic << '\n';
    csv << "index,alpha,uv_sup,scaled_gap,alpha_sup_u,alpha_sup_v,dist_limit_U,"
           "dist_segregation,sup_u,sup_v,l2_u,l2_v\n";
    for (size_t i = 0; i < rep.points.size(); ++i) {
        const SweepMetrics& mm = rep.metrics[i];
        const BranchPoint& pt = rep.points[i];
        csv << i << ',' << fmt17(rep.alphas[i]) << ',' << fmt17(mm.uv_sup) << ','
            << fmt17(mm.scaled_gap) << ',' << fmt17(mm.alpha_sup_u) << ','
            << fmt17(mm.alpha_sup_v) << ',' << fmt17(mm.dist_to_limit_U) << ','
            << fmt17(mm.dist_to_segregation) << ',' << fmt17(pt.norm_u.sup) << ','
            << fmt17(pt.norm_v.sup) << ',' << fmt17(pt.norm_u.l2) << ','
            << fmt17(pt.norm_v.l2) << '\n';
    }
    write_text_file(dir + "/sweep.csv", csv.str());

    std::ostringstream js;
    js << "{\n  \"schema\": \"" << kSweepJsonSchema << "\",\n";
    js << "  \"lambda\": " << fmt17(rep.lambda) << ",\n";
    js << "  \"selector\": {\"j\": " << rep.selector.j << ", \"sign\": " << rep.selector.sign
       << "},\n";
    js << "  \"verdict\": \"" << verdict_name(rep.verdict) << "\",\n";
    js << "  \"fitted_rate\": " << fmt17(rep.fitted_rate) << ",\n";
    js << "  \"thresholds\": {\"band_factor\": " << fmt17(rep.thresholds.band_factor)
       << ", \"gap_tol\": " << fmt17(rep.thresholds.gap_tol) << ", \"product_tol\": "
       << fmt17(rep.thresholds.product_tol) << "},\n";
    js << "  \"broken\": " << (rep.broken ? "true" : "false") << ",\n  \"note\": ";
    json_escape(js, rep.note);
    js << ",\n  \"grid\": {\"a\": " << fmt17(g.a) << ", \"b\": " << fmt17(g.b)
       << ", \"n\": " << g.n << "},\n";
    js << "  \"params\": {\"b1\": " << fmt17(base.b1) << ", \"b2\": " << fmt17(base.b2)
       << ", \"c1\": " << fmt17(base.c1) << ", \"c2\": " << fmt17(base.c2) << ", \"m\": ";
    json_array(js, base.m);
    js << "},\n  \"alphas\": ";
    json_array(js, rep.alphas);
    js << ",\n  \"points\": [";
    for (size_t i = 0; i < rep.points.size(); ++i) {
        const BranchPoint& pt = rep.points[i];
        const SweepMetrics& mm = rep.metrics[i];
        js << (i ? ",\n    " : "\n    ");
        js << "{\"alpha\": " << fmt17(rep.alphas[i]) << ", \"w\": ";
        json_array(js, pt.state.w);
        js << ", \"z\": ";
        json_array(js, pt.state.z);
        js << ", \"uv_sup\": " << fmt17(mm.uv_sup) << ", \"scaled_gap\": "
           << fmt17(mm.scaled_gap) << ", \"alpha_sup_u\": " << fmt17(mm.alpha_sup_u)
           << ", \"alpha_sup_v\": " << fmt17(mm.alpha_sup_v) << ", \"dist_limit_U\": "
           << fmt17(mm.dist_to_limit_U) << ", \"dist_segregation\": "
           << fmt17(mm.dist_to_segregation) << "}";
    }
    js << "\n  ]\n}\n";
    write_text_file(dir + "/sweep.json", js.str());
}

namespace {

void write_manifest(const std::string& outdir, const std::string& command, uint64_t config_hash,
                    const std::string& started, const std::string& finished, int status) {
    std::ostringstream js;
    js << "{\n  \"schema\": \"" << kManifestSchema << "\",\n";
    js << "  \"command\": ";
    json_escape(js, command);
    js << ",\n  \"config_hash\": \"" << hex64(config_hash) << "\",\n";
    js << "  \"code_version\": \"" << kCodeVersion << "\",\n";
    js << "  \"started\": \"" << started << "\",\n";
    js << "  \"finished\": \"" << finished << "\",\n";
    js << "  \"status\": " << status << "\n}\n";
    write_text_file(outdir + "/manifest.json", js.str());
}

// window of the internal lambda trace for the requested active-parameter window
std::pair<double, double> lambda_window(const RunConfig& cfg) {
    if (!cfg.window_set)
        throw ValidationError("trace requires a window (config 'window = lo:hi' or --window)");
    if (cfg.mode == BranchMode::lambda) return {cfg.window_lo, cfg.window_hi};
    return {1.0 / cfg.window_hi, 1.0 / cfg.window_lo};
}

void print_branch_summary(const Branch& br) {
    std::cout << "branch " << br.id << ": " << br.points.size() << " points";
    if (br.step_failed) std::cout << " (step failure, partial)";
    std::cout << ", " << br.bifurcations.size() << " bifurcation records";
    for (const auto& rec : br.bifurcations)
        std::cout << " [" << kind_name(rec.kind) << " at " << fmt6(rec.param_at) << " +/- "
                  << fmt6(rec.localization_width / 2) << "]";
    std::cout << "\n";
}

int run_trace(const RunConfig& cfg) {
    const Grid g = cfg.grid();
    const ModelParams p = cfg.params(g);
    ContinuationConfig cc = cfg.continuation();
    const auto [wlo, whi] = lambda_window(cfg);
    cc.window_lo = wlo;
    cc.window_hi = whi;

    const BranchPoint t0 = seed_trivial_branch(p, g, wlo, cc);
    Branch trivial = trace_branch(t0, p, g, cc, "trivial");
    Branch trivial_out =
        cfg.mode == BranchMode::d ? to_d_mode(trivial, p, g) : std::move(trivial);
    write_branch(trivial_out, p, g, cfg.outdir + "/branch-trivial.csv");
    print_branch_summary(trivial_out);

    if (cfg.mode == BranchMode::lambda) {
        try {
            const BranchPoint c0 = seed_primary_branch(p, g, cfg.amplitude, cc);
            const Branch coex = trace_branch(c0, p, g, cc, "coexistence");
            write_branch(coex, p, g, cfg.outdir + "/branch-coexistence.csv");
            print_branch_summary(coex);
        } catch (const SeedFailure& e) {
            std::cerr << "coexistence branch skipped: " << e.what() << "\n";
        }
    }
    return 0;
}

int run_switch(const RunConfig& cfg, const std::string& branch_path, double at, double delta) {
    LoadedBranch lb = read_branch(branch_path);
    const bool was_d = lb.branch.mode == BranchMode::d;
    const Branch brl = was_d ? from_d_mode(lb.branch, lb.params, lb.grid) : lb.branch;
    if (brl.bifurcations.empty())
        throw UsageError("switch: branch file carries no bifurcation records");
    const double at_l = was_d ? 1.0 / at : at;
    const BifurcationRecord* rec = &brl.bifurcations[0];
    for (const auto& r : brl.bifurcations)
        if (std::fabs(r.param_at - at_l) < std::fabs(rec->param_at - at_l)) rec = &r;

    ContinuationConfig cc = cfg.continuation();
    cc.window_lo = cc.window_hi = 0.0;
    const double lam_base = rec->param_at + std::max(0.01 * std::fabs(rec->param_at), 0.05);
    const BranchPoint base = converge_at_param(brl, lam_base, lb.params, lb.grid, cc);
    double d = delta;
    if (!(d > 0.0)) {
        double s = 0.0;
        for (double c : pack_wz(base.state)) s = std::max(s, std::fabs(c));
        d = 0.02 * std::max(0.5, s);
    }
    auto halves = switch_branch(*rec, base, d, lb.params, lb.grid, cc);

    ContinuationConfig ct = cc;
    if (cfg.window_set) {
        const auto [wlo, whi] = lambda_window(cfg);
        ct.window_lo = wlo;
        ct.window_hi = whi;
    } else {
        ct.window_lo = rec->param_at;
        ct.window_hi = brl.points.back().param;
    }
    for (int half = 0; half < 2; ++half) {
        const BranchPoint& seed = half == 0 ? halves.first : halves.second;
        const std::string id = brl.id + (half == 0 ? "-upper" : "-lower");
        Branch sub = trace_branch(seed, lb.params, lb.grid, ct, id);
        sub.parent = {brl.id, rec->param_at};
        const Branch out = was_d ? to_d_mode(sub, lb.params, lb.grid) : std::move(sub);
        write_branch(out, lb.params, lb.grid, cfg.outdir + "/branch-" + id + ".csv");
        print_branch_summary(out);
    }
    return 0;
}

int run_sweep(const RunConfig& cfg) {
    if (!(cfg.sweep_lambda > 0.0) || cfg.sweep_alphas.empty())
        throw ValidationError("sweep requires sweep_lambda and sweep_alphas");
    const Grid g = cfg.grid();
    const ModelParams p0 = cfg.params(g).with_alpha(cfg.sweep_alphas[0]);
    const BranchSelector sel{cfg.sweep_j, cfg.sweep_sign};
    const double lam1 = eigen_weighted(g, p0.m, 1)[0].value;

    SweepReport rep;
    if (cfg.sweep_lambda <= lam1) {
        rep = alpha_sweep(cfg.sweep_lambda, cfg.sweep_alphas, BranchPoint{}, sel, p0, g,
                          cfg.thresholds);
    } else {
        const BranchPoint seed =
            locate_on_branch(cfg.sweep_lambda, sel, p0, g, cfg.continuation());
        rep = alpha_sweep(cfg.sweep_lambda, cfg.sweep_alphas, seed, sel, p0, g, cfg.thresholds);
    }
    write_sweep(rep, p0, g, cfg.outdir);
    std::cout << "sweep lambda=" << fmt6(rep.lambda) << " j=" << sel.j
              << " sign=" << (sel.sign > 0 ? "+" : "-") << ": " << rep.points.size()
              << " points, verdict " << verdict_name(rep.verdict);
    if (rep.fitted_rate != 0.0) std::cout << ", fitted rate " << fmt6(rep.fitted_rate);
    std::cout << "\n";
    if (!rep.note.empty()) std::cout << "note: " << rep.note << "\n";
    for (size_t i = 0; i < rep.points.size(); ++i)
        std::cout << "  alpha=" << fmt6(rep.alphas[i]) << " |uv|=" << fmt6(rep.metrics[i].uv_sup)
                  << " |au-U|=" << fmt6(rep.metrics[i].dist_to_limit_U)
                  << " seg=" << fmt6(rep.metrics[i].dist_to_segregation) << "\n";
    return rep.broken ? 1 : 0;
}

int run_limits(const RunConfig& cfg, double lambda, int j, double s) {
    const Grid g = cfg.grid();
    const std::vector<double> m = cfg.weight(g);
    const LimitField z0 = solve_Z0(lambda, g, m);
    const LimitField U = limit_U(lambda, g, m);
    const LimitField th = solve_logistic(lambda, g, m);
    const LimitField ze = solve_sublinear(LimitKind::zeta0, g, m);
    const LimitField ps = solve_sublinear(LimitKind::Psi, g, m);

    std::ostringstream csv;
    csv << kLimitsCsvMagic << '\n' << "x,Z0,U,theta,zeta0,Psi\n";
    for (int i = 0; i < g.n; ++i)
        csv << fmt17(g.node(i)) << ',' << fmt17(z0.values[i]) << ',' << fmt17(U.values[i]) << ','
            << fmt17(th.values[i]) << ',' << fmt17(ze.values[i]) << ',' << fmt17(ps.values[i])
            << '\n';
    write_text_file(cfg.outdir + "/limits.csv", csv.str());
    std::cout << "limits at lambda=" << fmt6(lambda) << ": sup Z0=" << fmt6(sup_norm(z0.values))
              << " sup U=" << fmt6(sup_norm(U.values)) << " sup theta="
              << fmt6(sup_norm(th.values)) << "\n";

    if (j >= 2) {
        const LimitField zj = solve_Zj(j, s, g, m);
        std::ostringstream zc;
        zc << kZjCsvMagic << '\n' << "x,Zj\n";
        for (int i = 0; i < g.n; ++i)
            zc << fmt17(g.node(i)) << ',' << fmt17(zj.values[i]) << '\n';
        write_text_file(cfg.outdir + "/zj.csv", zc.str());
        const SandwichMargins sm = sandwich_margins(j, s, g, m);
        std::cout << "Z_" << j << "(s=" << fmt6(s) << "): sandwich lower margin "
                  << fmt6(sm.lower) << ", upper margin " << fmt6(sm.upper) << ", "
                  << (sm.holds() ? "holds" : "VIOLATED") << "\n";
    }
    return 0;
}

int run_shoot(const RunConfig& cfg, double lambda, int j, int sign, bool check) {
    const Grid g = cfg.grid();
    const std::vector<double> m = cfg.weight(g);
    for (double c : m)
        if (c != m[0])
            throw ValidationError("shoot requires a constant weight m");
    const double ell = 0.5 * (cfg.b - cfg.a);
    const Grid cg = build_grid(-ell, ell, cfg.n);
    const ShootingSolution sh = shoot_LS2(lambda, j, sign, ell, m[0], cfg.b1, cfg.c2, cg);

    std::ostringstream csv;
    csv << kShootCsvMagic << '\n' << "x,w\n";
    for (int i = 0; i < g.n; ++i)
        csv << fmt17(g.node(i)) << ',' << fmt17(sh.w[i]) << '\n';
    write_text_file(cfg.outdir + "/shoot.csv", csv.str());

    const double center = 0.5 * (cfg.a + cfg.b);
    std::ostringstream js;
    js << "{\n  \"schema\": \"sktcont-shoot-json 1.0.0\",\n";
    js << "  \"lambda\": " << fmt17(lambda) << ",\n  \"j\": " << j << ",\n  \"sign\": " << sign
       << ",\n  \"slope0\": " << fmt17(sh.slope0) << ",\n  \"zeros\": " << sh.zeros
       << ",\n  \"sign_at_center\": " << sh.sign_at_center << ",\n  \"boundary_defect\": "
       << fmt17(sh.boundary_defect) << ",\n  \"zero_positions\": ";
    std::vector<double> zp = sh.zero_positions;
    for (auto& c : zp) c += center;
    json_array(js, zp);
    js << ",\n  \"zero_slopes\": ";
    json_array(js, sh.zero_slopes);
    js << "\n}\n";
    write_text_file(cfg.outdir + "/shoot.json", js.str());

    std::cout << "shoot lambda=" << fmt6(lambda) << " j=" << j << " sign="
              << (sign > 0 ? "+" : "-") << ": slope0=" << fmt6(sh.slope0) << ", "
              << sh.zeros << " interior zeros, boundary defect " << fmt6(sh.boundary_defect)
              << "\n";
    if (check) {
        const LimitField gl = grid_solve_LS2(lambda, j, sign, cg, cfg.b1, cfg.c2, m);
        double diff = 0.0;
        for (int i = 0; i < g.n; ++i)
            diff = std::max(diff, std::fabs(gl.values[i] - sh.w[i]));
        std::cout << "grid cross-check: sup difference " << fmt6(diff) << "\n";
    }
    return 0;
}

int run_eigs(const RunConfig& cfg, int k) {
    const Grid g = cfg.grid();
    const std::vector<double> m = cfg.weight(g);
    const auto modes = eigen_weighted(g, m, k);
    std::ostringstream csv;
    csv << kEigsCsvMagic << '\n' << "j,lambda_j,d_j\n";
    for (int i = 0; i < k; ++i)
        csv << (i + 1) << ',' << fmt17(modes[i].value) << ',' << fmt17(1.0 / modes[i].value)
            << '\n';
    write_text_file(cfg.outdir + "/eigs.csv", csv.str());
    for (int i = 0; i < k; ++i)
        std::cout << "lambda_" << (i + 1) << " = " << fmt6(modes[i].value) << "  (d = "
                  << fmt6(1.0 / modes[i].value) << ")\n";
    return 0;
}

int run_plot_diagram(const RunConfig& cfg, const std::string& dir, const std::string& out) {
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    std::vector<SvgSeries> series;
    std::string mode_label = "lambda";
    for (const auto& path : paths) {
        LoadedBranch lb;
        try {
            lb = read_branch(path);
        } catch (const SchemaMismatch&) {
            continue;  // not a branch file
        }
        SvgSeries s;
        s.label = lb.branch.id;
        for (const auto& pt : lb.branch.points) s.xy.push_back({pt.param, pt.norm_u.l2});
        series.push_back(std::move(s));
        mode_label = lb.branch.mode == BranchMode::lambda ? "lambda" : "d";
    }
    if (series.empty()) throw EmptyData("plot: no branch files under " + dir);
    const std::string target = out.empty() ? cfg.outdir + "/diagram.svg" : out;
    emit_svg("diagram", series, target, mode_label, "l2 norm of u");
    std::cout << "diagram with " << series.size() << " branches -> " << target << "\n";
    return 0;
}

int run_plot_profile(const RunConfig& cfg, const std::string& file, double at,
                     const std::string& out) {
    const LoadedBranch lb = read_branch(file);
    if (lb.branch.points.empty()) throw EmptyData("plot: branch has no points");
    size_t best = 0;
    for (size_t i = 1; i < lb.branch.points.size(); ++i)
        if (std::fabs(lb.branch.points[i].param - at) <
            std::fabs(lb.branch.points[best].param - at))
            best = i;
    const BranchPoint& pt = lb.branch.points[best];
    SvgSeries su, sv;
    su.label = "u";
    sv.label = "v";
    for (int i = 0; i < lb.grid.n; ++i) {
        su.xy.push_back({lb.grid.node(i), pt.uv.u[i]});
        sv.xy.push_back({lb.grid.node(i), pt.uv.v[i]});
    }
    const std::string target = out.empty() ? cfg.outdir + "/profile.svg" : out;
    emit_svg("profile", {su, sv}, target, "x", "u, v");
    std::cout << "profile at param=" << fmt6(pt.param) << " -> " << target << "\n";
    return 0;
}

int run_verify(const std::vector<std::string>& files) {
    if (files.empty()) throw UsageError("verify: no branch files given");
    int rc = 0;
    for (const auto& f : files) {
        const LoadedBranch lb = read_branch(f);
        const double worst = verify_branch(lb);
        const bool ok = worst <= 1e-9;
        std::cout << f << ": " << lb.branch.points.size() << " points, worst residual "
                  << fmt6(worst) << (ok ? " ok" : " FAIL") << "\n";
        if (!ok) rc = 1;
    }
    return rc;
}

} // namespace

int cli_dispatch(int argc, const char* const* argv) {
    CLI::App app{"stationary cross-diffusion continuation toolkit"};
    app.require_subcommand(1);

    std::string config_path, window_str, outdir_str, branch_path, sign_str = "+";
    std::string diagram_dir, profile_file, out_path;
    std::vector<std::string> verify_files;
    double lambda = 0.0, at = 0.0, s_par = 0.0, delta = 0.0;
    int jmode = 0, kcount = 0;
    bool check = false;

    const auto add_common = [&](CLI::App* sc) {
        sc->add_option("--config", config_path, "config file (key = value)");
        sc->add_option("--outdir", outdir_str, "output directory override");
        sc->add_option("--window", window_str, "active-parameter window lo:hi");
    };

    CLI::App* sc_trace = app.add_subcommand(
        "trace", "trace the trivial (and coexistence) branches across the window");
    add_common(sc_trace);

    CLI::App* sc_switch =
        app.add_subcommand("switch", "switch onto the bifurcating branch pair and trace it");
    add_common(sc_switch);
    sc_switch->add_option("--branch", branch_path, "branch CSV written by trace")->required();
    sc_switch->add_option("--at", at, "bifurcation parameter to switch at")->required();
    sc_switch->add_option("--delta", delta, "kernel predictor amplitude");

    CLI::App* sc_sweep = app.add_subcommand("sweep", "alpha-sweep at fixed lambda and classify");
    add_common(sc_sweep);
    sc_sweep->add_option("--lambda", lambda, "sweep lambda override");
    sc_sweep->add_option("--j", jmode, "branch selector override (0 or >= 2)");
    sc_sweep->add_option("--sign", sign_str, "branch half override (+ or -)");

    CLI::App* sc_limits = app.add_subcommand("limits", "solve the limiting scalar problems");
    add_common(sc_limits);
    sc_limits->add_option("--lambda", lambda, "lambda of the limit family")->required();
    sc_limits->add_option("--j", jmode, "also continue Z_j in s (j >= 2)");
    sc_limits->add_option("--s", s_par, "s parameter for Z_j");

    CLI::App* sc_shoot =
        app.add_subcommand("shoot", "shooting solution of the segregation limit equation");
    add_common(sc_shoot);
    sc_shoot->add_option("--lambda", lambda, "lambda")->required();
    sc_shoot->add_option("--j", jmode, "zero count class (j >= 1)")->required();
    sc_shoot->add_option("--sign", sign_str, "sign of w'(-ell): + or -");
    sc_shoot->add_flag("--check", check, "cross-validate against the grid Newton solver");

    CLI::App* sc_eigs = app.add_subcommand("eigs", "weighted Dirichlet eigenvalues");
    add_common(sc_eigs);
    sc_eigs->add_option("--k", kcount, "number of modes (default eig_count)");

    CLI::App* sc_plot = app.add_subcommand("plot", "emit SVG diagrams and profiles");
    add_common(sc_plot);
    sc_plot->add_option("--diagram", diagram_dir, "directory of branch CSVs");
    sc_plot->add_option("--profile", profile_file, "branch CSV for a solution profile");
    sc_plot->add_option("--at", at, "parameter value the profile is taken at");
    sc_plot->add_option("--out", out_path, "output SVG path");

    CLI::App* sc_verify =
        app.add_subcommand("verify", "reload branch files and re-verify stored residuals");
    sc_verify->add_option("--outdir", outdir_str, "manifest directory");
    sc_verify->add_option("files", verify_files, "branch CSV files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    RunConfig cfg;
    std::string config_text;
    try {
        if (!config_path.empty()) {
            std::ifstream f(config_path, std::ios::binary);
            if (!f) throw ParseError("cannot open config file: " + config_path);
            std::ostringstream ss;
            ss << f.rdbuf();
            config_text = ss.str();
            cfg = parse_config(config_text);
        }
        if (!outdir_str.empty()) cfg.outdir = outdir_str;
        if (!window_str.empty()) {
            const auto [lo, hi] = parse_window(window_str);
            cfg.window_lo = lo;
            cfg.window_hi = hi;
            cfg.window_set = true;
        }
        if (sc_sweep->parsed()) {
            if (sc_sweep->count("--lambda")) cfg.sweep_lambda = lambda;
            if (sc_sweep->count("--j")) cfg.sweep_j = jmode;
            if (sc_sweep->count("--sign")) cfg.sweep_sign = parse_sign(sign_str, 0);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    std::string cmdline;
    for (int i = 0; i < argc; ++i) {
        if (i) cmdline += ' ';
        cmdline += argv[i];
    }
    const uint64_t hash = fnv1a(config_text + '\x1f' + cmdline);
    const std::string command = app.get_subcommands().front()->get_name();
    const std::string started = iso_utc_now();
    const auto finish = [&](int status) {
        try {
            write_manifest(cfg.outdir, command, hash, started, iso_utc_now(), status);
        } catch (const Error& e) {
            std::cerr << "manifest: " << e.what() << "\n";
        }
        return status;
    };

    try {
        int rc = 0;
        if (sc_trace->parsed()) rc = run_trace(cfg);
        else if (sc_switch->parsed()) rc = run_switch(cfg, branch_path, at, delta);
        else if (sc_sweep->parsed()) rc = run_sweep(cfg);
        else if (sc_limits->parsed()) rc = run_limits(cfg, lambda, jmode, s_par);
        else if (sc_shoot->parsed()) rc = run_shoot(cfg, lambda, jmode, parse_sign(sign_str, 0), check);
        else if (sc_eigs->parsed()) rc = run_eigs(cfg, kcount > 0 ? kcount : cfg.eig_count);
        else if (sc_plot->parsed()) {
            if (!diagram_dir.empty() == !profile_file.empty())
                throw UsageError("plot: give exactly one of --diagram or --profile");
            rc = diagram_dir.empty() ? run_plot_profile(cfg, profile_file, at, out_path)
                                     : run_plot_diagram(cfg, diagram_dir, out_path);
        }
        else if (sc_verify->parsed()) rc = run_verify(verify_files);
        return finish(rc);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return finish(2);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return finish(2);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return finish(2);
    } catch (const Error& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return finish(1);
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return finish(1);
    }
}

} // namespace skt
