#include "tcdiag/experiment.h"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "tcdiag/analysis.h"
#include "tcdiag/errors.h"
#include "tcdiag/exact_oracle.h"
#include "tcdiag/loop_exact.h"
#include "tcdiag/regions.h"
#include "tcdiag/verify.h"

namespace tcdiag {

namespace {

using Json = nlohmann::json;

const std::set<std::string> kCommands = {
    "moments", "threshold", "negativity", "coherent-info", "relative-entropy", "verify", "collapse"};

std::string fmt_double(double x) {
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

int line_of(const YAML::Node &node) {
    return node.Mark().line >= 0 ? node.Mark().line + 1 : -1;
}

/// Field name to source line, filled while parsing so validation can point at the offending entry.
using LineMap = std::map<std::string, int>;

void check_keys(const YAML::Node &map, const std::string &where, const std::set<std::string> &allowed) {
    if (!map.IsMap()) {
        throw ConfigError(where + " must be a mapping", line_of(map));
    }
    for (auto it = map.begin(); it != map.end(); ++it) {
        auto key = it->first.as<std::string>();
        if (!allowed.count(key)) {
            std::string full = where.empty() ? key : where + "." + key;
            throw ConfigError("unknown key '" + full + "'", line_of(it->first));
        }
    }
}

template <class T>
T scalar(const YAML::Node &node, const std::string &field, const char *what) {
    if (!node.IsScalar()) {
        throw ConfigError(field + ": expected " + what, line_of(node));
    }
    try {
        return node.as<T>();
    } catch (const YAML::Exception &) {
        throw ConfigError(field + ": expected " + what + ", got '" + node.Scalar() + "'", line_of(node));
    }
}

template <class T>
void read(const YAML::Node &block, const char *key, const std::string &prefix, T &dst, const char *what, LineMap &lines) {
    if (auto node = block[key]) {
        std::string field = prefix + "." + key;
        dst = scalar<T>(node, field, what);
        lines[field] = line_of(node);
    }
}

std::vector<double> read_grid(const YAML::Node &node, const std::string &field) {
    std::vector<double> out;
    if (node.IsSequence()) {
        for (const auto &v : node) {
            out.push_back(scalar<double>(v, field, "a number"));
        }
    } else if (node.IsMap()) {
        check_keys(node, field, {"from", "to", "step"});
        if (!node["from"] || !node["to"] || !node["step"]) {
            throw ConfigError(field + ": range needs from, to and step", line_of(node));
        }
        double from = scalar<double>(node["from"], field + ".from", "a number");
        double to = scalar<double>(node["to"], field + ".to", "a number");
        double step = scalar<double>(node["step"], field + ".step", "a number");
        if (!(step > 0) || !(to >= from)) {
            throw ConfigError(field + ": range needs step > 0 and to >= from", line_of(node));
        }
        for (long k = 0;; k++) {
            double v = std::round((from + k * step) * 1e12) / 1e12;
            if (v > to + 1e-12) {
                break;
            }
            out.push_back(v);
        }
    } else {
        out.push_back(scalar<double>(node, field, "a number"));
    }
    return out;
}

std::vector<int> read_ints(const YAML::Node &node, const std::string &field) {
    std::vector<int> out;
    if (node.IsSequence()) {
        for (const auto &v : node) {
            out.push_back(scalar<int>(v, field, "an integer"));
        }
    } else {
        out.push_back(scalar<int>(node, field, "an integer"));
    }
    return out;
}

void fail(const std::string &field, const std::string &msg, const LineMap *lines) {
    int line = -1;
    if (lines) {
        auto it = lines->find(field);
        if (it != lines->end()) {
            line = it->second;
        }
    }
    throw ConfigError(field + " " + msg, line);
}

void validate_impl(const ExperimentConfig &c, const LineMap *lines) {
    if (!kCommands.count(c.command)) {
        fail("command", "must be one of moments, threshold, negativity, coherent-info, relative-entropy, verify, collapse", lines);
    }
    bool needs_grid = c.command != "verify";
    if (needs_grid) {
        if (c.L.empty()) {
            fail("physics.L", "must list at least one system size", lines);
        }
        if (c.p.empty()) {
            fail("physics.p", "must list at least one error rate", lines);
        }
    }
    for (int L : c.L) {
        if (L < 2) {
            fail("physics.L", "entries must be >= 2", lines);
        }
    }
    for (size_t k = 1; k < c.L.size(); k++) {
        if (!(c.L[k] > c.L[k - 1])) {
            fail("physics.L", "must be strictly ascending", lines);
        }
    }
    for (double p : c.p) {
        if (!(p >= 0 && p <= 0.5)) {
            fail("physics.p", "entries must lie in [0, 0.5]", lines);
        }
    }
    for (size_t k = 1; k < c.p.size(); k++) {
        if (!(c.p[k] > c.p[k - 1])) {
            fail("physics.p", "must be strictly ascending", lines);
        }
    }
    if (c.n < 2) {
        fail("physics.n", "must be >= 2", lines);
    }
    if (c.error != "x" && c.error != "z" && c.error != "both") {
        fail("physics.error", "must be x, z or both", lines);
    }
    if (c.engine != "auto" && c.engine != "dense" && c.engine != "loops" && c.engine != "mc") {
        fail("physics.engine", "must be auto, dense, loops or mc", lines);
    }
    if (c.observable != "binder" && c.observable != "binder-flavor-averaged") {
        fail("physics.observable", "must be binder or binder-flavor-averaged", lines);
    }
    if (c.regions.geometry != "wedges") {
        fail("physics.regions.geometry", "must be wedges", lines);
    }
    if (c.regions.side < 0) {
        fail("physics.regions.side", "must be >= 0", lines);
    }
    for (int s : c.separations) {
        if (s < 1) {
            fail("physics.separations", "entries must be >= 1", lines);
        }
    }
    if (c.level != "quick" && c.level != "full") {
        fail("verify.level", "must be quick or full", lines);
    }
    if (c.sweeps_thermalize < 0) {
        fail("mc.sweeps_thermalize", "must be >= 0", lines);
    }
    if (c.sweeps_measure <= 0) {
        fail("mc.sweeps_measure", "must be positive", lines);
    }
    if (c.measure_interval <= 0) {
        fail("mc.measure_interval", "must be positive", lines);
    }
    if (c.chains <= 0) {
        fail("mc.chains", "must be positive", lines);
    }
    if (c.blocks <= 0) {
        fail("mc.blocks", "must be positive", lines);
    }
    if (c.sweeps_measure / c.measure_interval < c.blocks) {
        fail("mc.blocks", "exceeds the number of measurements per chain", lines);
    }
    if (c.update != "metropolis" && c.update != "heat-bath") {
        fail("mc.update", "must be metropolis or heat-bath", lines);
    }
    if (c.bootstrap < 2) {
        fail("analysis.bootstrap", "must be >= 2", lines);
    }
    if (c.collapse_bootstrap < 0) {
        fail("analysis.collapse_bootstrap", "must be >= 0", lines);
    }
    if (c.neighbors < 1) {
        fail("analysis.neighbors", "must be >= 1", lines);
    }
    if (c.collapse_fit != "staged" && c.collapse_fit != "joint") {
        fail("analysis.collapse_fit", "must be staged or joint", lines);
    }
    if (c.format != "csv" && c.format != "jsonl") {
        fail("io.format", "must be csv or jsonl", lines);
    }
    if (c.command == "threshold" && c.L.size() < 2) {
        fail("physics.L", "needs at least two sizes for a crossing", lines);
    }
    if (c.command == "collapse" && c.L.size() < 3) {
        fail("physics.L", "needs at least three sizes for a collapse", lines);
    }
    if (c.command == "negativity" && c.error == "both") {
        fail("physics.error", "must be x or z for negativity (one error type only)", lines);
    }
    if (c.command == "relative-entropy" && c.separations.empty()) {
        fail("physics.separations", "must list at least one separation", lines);
    }
    int flavors = c.command == "negativity" ? 2 * c.n - 1 : c.n - 1;
    bool mc_command = c.command == "threshold" || c.command == "collapse";
    if ((mc_command || c.engine == "mc") && flavors > kMaxFlavors) {
        fail("physics.n", "gives " + std::to_string(flavors) + " flavors; at most " + std::to_string(kMaxFlavors) + " are supported", lines);
    }
    if (c.tempering && !mc_command) {
        fail("mc.tempering", "is only available for threshold and collapse", lines);
    }
}

ExperimentConfig parse_impl(const YAML::Node &root) {
    ExperimentConfig c;
    LineMap lines;
    if (!root.IsMap()) {
        throw ConfigError("config must be a mapping", line_of(root));
    }
    check_keys(root, "", {"command", "physics", "mc", "analysis", "io", "verify"});
    if (!root["command"]) {
        throw ConfigError("missing required key 'command'", 1);
    }
    c.command = scalar<std::string>(root["command"], "command", "a string");
    lines["command"] = line_of(root["command"]);
    if (auto ph = root["physics"]) {
        check_keys(ph, "physics", {"L", "n", "p", "error", "engine", "observable", "regions", "separations"});
        if (ph["L"]) {
            c.L = read_ints(ph["L"], "physics.L");
            lines["physics.L"] = line_of(ph["L"]);
        }
        read(ph, "n", "physics", c.n, "an integer", lines);
        if (ph["p"]) {
            c.p = read_grid(ph["p"], "physics.p");
            lines["physics.p"] = line_of(ph["p"]);
        }
        read(ph, "error", "physics", c.error, "a string", lines);
        read(ph, "engine", "physics", c.engine, "a string", lines);
        read(ph, "observable", "physics", c.observable, "a string", lines);
        if (auto rg = ph["regions"]) {
            check_keys(rg, "physics.regions", {"geometry", "side", "row", "col"});
            read(rg, "geometry", "physics.regions", c.regions.geometry, "a string", lines);
            read(rg, "side", "physics.regions", c.regions.side, "an integer", lines);
            read(rg, "row", "physics.regions", c.regions.row, "an integer", lines);
            read(rg, "col", "physics.regions", c.regions.col, "an integer", lines);
        }
        if (ph["separations"]) {
            c.separations = read_ints(ph["separations"], "physics.separations");
            lines["physics.separations"] = line_of(ph["separations"]);
        }
    }
    if (auto mc = root["mc"]) {
        check_keys(mc, "mc", {"sweeps_thermalize", "sweeps_measure", "measure_interval", "chains", "seed", "blocks",
                              "update", "product_term", "ordered_start", "tempering"});
        read(mc, "sweeps_thermalize", "mc", c.sweeps_thermalize, "an integer", lines);
        read(mc, "sweeps_measure", "mc", c.sweeps_measure, "an integer", lines);
        read(mc, "measure_interval", "mc", c.measure_interval, "an integer", lines);
        read(mc, "chains", "mc", c.chains, "an integer", lines);
        read(mc, "seed", "mc", c.seed, "an unsigned 64-bit integer", lines);
        read(mc, "blocks", "mc", c.blocks, "an integer", lines);
        read(mc, "update", "mc", c.update, "a string", lines);
        read(mc, "product_term", "mc", c.product_term, "a boolean", lines);
        read(mc, "ordered_start", "mc", c.ordered_start, "a boolean", lines);
        read(mc, "tempering", "mc", c.tempering, "a boolean", lines);
    }
    if (auto an = root["analysis"]) {
        check_keys(an, "analysis", {"bootstrap", "collapse_bootstrap", "collapse_fit", "neighbors", "input"});
        read(an, "bootstrap", "analysis", c.bootstrap, "an integer", lines);
        read(an, "collapse_bootstrap", "analysis", c.collapse_bootstrap, "an integer", lines);
        read(an, "collapse_fit", "analysis", c.collapse_fit, "a string", lines);
        read(an, "neighbors", "analysis", c.neighbors, "an integer", lines);
        read(an, "input", "analysis", c.input, "a path", lines);
    }
    if (auto io = root["io"]) {
        check_keys(io, "io", {"out", "format"});
        read(io, "out", "io", c.out, "a path", lines);
        read(io, "format", "io", c.format, "a string", lines);
    }
    if (auto vf = root["verify"]) {
        check_keys(vf, "verify", {"level"});
        read(vf, "level", "verify", c.level, "a string", lines);
    }
    validate_impl(c, &lines);
    return c;
}

std::string yaml_string(const std::string &s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"' || ch == '\\') {
            out += '\\';
        }
        out += ch;
    }
    return out + "\"";
}

template <class T, class F>
std::string flow_list(const std::vector<T> &v, F format) {
    std::string out = "[";
    for (size_t k = 0; k < v.size(); k++) {
        out += (k ? ", " : "") + format(v[k]);
    }
    return out + "]";
}

// ---------------------------------------------------------------------------------------------
// Result collection

struct Collector {
    const ExperimentConfig &cfg;
    const RunOptions &options;
    std::vector<ResultRow> rows;
    std::vector<std::string> accumulator_lines;
    std::ostringstream report;

    void add(const std::string &quantity, int L, double p, const Estimate &e, const std::string &method,
             uint64_t sweeps = 0, int chains = 0) {
        ResultRow r;
        r.quantity = quantity;
        r.n = cfg.n;
        r.L = L;
        r.p = p;
        r.value = e.value;
        r.error = e.error;
        r.method = method;
        r.seed_base = cfg.seed;
        r.chains = chains;
        r.sweeps = sweeps;
        if (e.flagged) {
            r.flag = e.note.empty() ? "flagged" : e.note;
        }
        rows.push_back(r);
    }
    void exact(const std::string &quantity, int L, double p, double value, const std::string &method) {
        add(quantity, L, p, {value, 0.0, false, ""}, method);
    }
    void log(const std::string &msg) {
        if (options.log) {
            *options.log << msg << std::endl;
        }
    }
};

std::string mc_method(const ExperimentConfig &c) {
    std::string m = "mc-" + c.update;
    if (c.tempering) {
        m += "+pt";
    }
    if (!c.product_term) {
        m += "+no-product";
    }
    return m;
}

uint64_t sweeps_per_chain(const ExperimentConfig &c) {
    return (uint64_t)c.sweeps_thermalize + c.sweeps_measure;
}

/// Runs independent chains for one grid point and records every chain snapshot.
MomentAccumulator simulate(Collector &col, const MCConfig &mc, const Observables &obs, const std::string &tag,
                           double p_label) {
    auto t0 = std::chrono::steady_clock::now();
    MomentAccumulator acc = run_chains(mc, obs, col.options.threads, [&](const MomentAccumulator &chain) {
        col.accumulator_lines.push_back(accumulator_json(chain, mc.L, col.cfg.n, p_label, tag));
    });
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s L=%d p=%s: %d chain(s) in %.1f s", tag.c_str(), mc.L, fmt_double(p_label).c_str(),
                  mc.chain_count, dt);
    col.log(buf);
    return acc;
}

int grid_index(const std::vector<double> &grid, double p) {
    for (size_t k = 0; k < grid.size(); k++) {
        if (std::fabs(grid[k] - p) < 1e-12) {
            return (int)k;
        }
    }
    return -1;
}

/// Binder-curve accumulators per (L, p index), simulated or read back from an earlier run.
std::map<std::pair<int, int>, MomentAccumulator> gather_scan(Collector &col) {
    const auto &c = col.cfg;
    std::map<std::pair<int, int>, MomentAccumulator> out;
    if (!c.input.empty()) {
        std::string path = (std::filesystem::path(c.input) / "accumulators.jsonl").string();
        for (auto &t : read_accumulators(path)) {
            if (t.tag != "scan" || t.n != c.n) {
                continue;
            }
            if (std::find(c.L.begin(), c.L.end(), t.L) == c.L.end()) {
                continue;
            }
            int k = grid_index(c.p, t.p);
            if (k < 0) {
                continue;
            }
            auto key = std::make_pair(t.L, k);
            if (out.count(key)) {
                out[key].merge(t.acc);
            } else {
                out[key] = t.acc;
            }
            col.accumulator_lines.push_back(accumulator_json(t.acc, t.L, t.n, t.p, t.tag));
        }
        for (int L : c.L) {
            for (size_t k = 0; k < c.p.size(); k++) {
                if (!out.count({L, (int)k})) {
                    throw ConfigError("analysis.input has no accumulators for L=" + std::to_string(L) +
                                      " p=" + fmt_double(c.p[k]));
                }
            }
        }
        col.log("read " + std::to_string(out.size()) + " grid points from " + path);
        return out;
    }
    Observables obs;
    for (int L : c.L) {
        if (c.tempering) {
            MCConfig mc = c.mc(L, c.p.front());
            std::vector<MomentAccumulator> merged(c.p.size());
            auto t0 = std::chrono::steady_clock::now();
            for (int chain = 0; chain < c.chains; chain++) {
                auto accs = run_tempered_chain(mc, c.p, obs, chain);
                for (size_t k = 0; k < accs.size(); k++) {
                    col.accumulator_lines.push_back(accumulator_json(accs[k], L, c.n, c.p[k], "scan"));
                    merged[k].merge(accs[k]);
                }
            }
            double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            col.log("tempered ladder L=" + std::to_string(L) + ": " + fmt_double(std::round(dt * 10) / 10) + " s");
            for (size_t k = 0; k < merged.size(); k++) {
                out[{L, (int)k}] = merged[k];
            }
        } else {
            for (size_t k = 0; k < c.p.size(); k++) {
                out[{L, (int)k}] = simulate(col, c.mc(L, c.p[k]), obs, "scan", c.p[k]);
            }
        }
    }
    return out;
}

void report_crossing(Collector &col, const CrossingResult &cr) {
    auto &r = col.report;
    r << "Binder crossings (" << col.cfg.observable << ", n=" << col.cfg.n << ")\n";
    for (const auto &pc : cr.pairs) {
        r << "  L=" << pc.L1 << " vs L=" << pc.L2 << ": ";
        if (pc.found) {
            r << "p = " << fmt_double(pc.p) << " +- " << fmt_double(pc.error) << "\n";
            col.add("p_c_pair:" + std::to_string((int)pc.L1) + "-" + std::to_string((int)pc.L2), 0, pc.p,
                    {pc.p, pc.error, false, ""}, "binder-crossing");
        } else {
            r << "no crossing in the common window\n";
            col.add("p_c_pair:" + std::to_string((int)pc.L1) + "-" + std::to_string((int)pc.L2), 0, 0,
                    {std::nan(""), 0, true, "no crossing"}, "binder-crossing");
        }
    }
    if (cr.found) {
        r << "  pooled: p_c = " << fmt_double(cr.pooled.value) << " +- " << fmt_double(cr.pooled.error) << "\n";
        col.add("p_c", 0, cr.pooled.value, cr.pooled, "binder-crossing");
    } else {
        r << "  pooled: no crossing\n";
        col.add("p_c", 0, 0, {std::nan(""), 0, true, cr.note}, "binder-crossing");
    }
    if (!cr.note.empty()) {
        r << "  note: " << cr.note << "\n";
    }
}

void run_scan(Collector &col, bool collapse) {
    const auto &c = col.cfg;
    auto data = gather_scan(col);
    std::string method = c.input.empty() ? mc_method(c) : "mc-reanalysis";
    std::vector<Curve> curves;
    std::vector<ScalingPoint> points;
    for (int L : c.L) {
        Curve curve;
        curve.L = L;
        for (size_t k = 0; k < c.p.size(); k++) {
            const auto &acc = data.at({L, (int)k});
            double p = c.p[k];
            auto b = binder_ratio(acc), bfa = binder_ratio_flavor_averaged(acc), m2 = magnetization_squared(acc);
            uint64_t sweeps = acc.sweeps;
            int chains = (int)(acc.block_counts.size() / std::max(1, c.blocks));
            col.add("binder", L, p, b, method, sweeps, chains);
            col.add("binder_flavor_averaged", L, p, bfa, method, sweeps, chains);
            col.add("m2", L, p, m2, method, sweeps, chains);
            Estimate chosen = c.observable == "binder" ? b : bfa;
            curve.p.push_back(p);
            curve.value.push_back(chosen.value);
            curve.error.push_back(chosen.error);
            points.push_back({(double)L, p, chosen.value, chosen.error, m2.value, m2.error});
        }
        curves.push_back(curve);
    }
    CrossingOptions co;
    co.bootstrap_samples = c.bootstrap;
    co.seed = c.seed;
    report_crossing(col, binder_crossing(curves, co));
    if (!collapse) {
        return;
    }
    CollapseOptions opt;
    opt.neighbors = c.neighbors;
    opt.staged = c.collapse_fit == "staged";
    ScalingFit fit = fss_collapse(points, opt);
    std::vector<double> pcs, nus, betas;
    std::mt19937_64 rng(derive_seed(c.seed, 0xC011A95E));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int b = 0; b < c.collapse_bootstrap; b++) {
        auto resampled = points;
        for (auto &pt : resampled) {
            pt.binder += pt.binder_error * gauss(rng);
            pt.m2 += pt.m2_error * gauss(rng);
        }
        CollapseOptions quick = opt;
        quick.nu_starts = {fit.nu};
        quick.beta_starts = {fit.beta};
        quick.p_c_starts = 1;
        auto f = fss_collapse(resampled, quick);
        pcs.push_back(f.p_c);
        nus.push_back(f.nu);
        betas.push_back(f.beta);
    }
    auto sd = [](const std::vector<double> &v) {
        if (v.size() < 2) {
            return 0.0;
        }
        double m = 0, s = 0;
        for (double x : v) {
            m += x;
        }
        m /= v.size();
        for (double x : v) {
            s += (x - m) * (x - m);
        }
        return std::sqrt(s / (v.size() - 1));
    };
    Estimate note{0, 0, !fit.converged, fit.note};
    auto with = [&](double v, double e) {
        Estimate x = note;
        x.value = v;
        x.error = e;
        return x;
    };
    col.add("p_c_collapse", 0, fit.p_c, with(fit.p_c, sd(pcs)), "fss-collapse");
    col.add("nu", 0, fit.p_c, with(fit.nu, sd(nus)), "fss-collapse");
    col.add("beta", 0, fit.p_c, with(fit.beta, sd(betas)), "fss-collapse");
    col.add("collapse_cost", 0, fit.p_c, with(fit.collapse_cost, 0), "fss-collapse");
    std::optional<ScalingFit> other;
    if (opt.staged) {
        CollapseOptions joint = opt;
        joint.staged = false;
        other = fss_collapse(points, joint);
        Estimate jn{0, 0, !other->converged, other->note};
        auto jwith = [&](double v) {
            Estimate x = jn;
            x.value = v;
            return x;
        };
        col.add("p_c_joint", 0, other->p_c, jwith(other->p_c), "fss-collapse-joint");
        col.add("nu_joint", 0, other->p_c, jwith(other->nu), "fss-collapse-joint");
        col.add("beta_joint", 0, other->p_c, jwith(other->beta), "fss-collapse-joint");
        col.add("collapse_cost_joint", 0, other->p_c, jwith(other->collapse_cost), "fss-collapse-joint");
    }
    auto &r = col.report;
    r << "Finite-size collapse over L = " << flow_list(c.L, [](int x) { return std::to_string(x); }) << ", p in ["
      << fmt_double(fit.p_min) << ", " << fmt_double(fit.p_max) << "]\n";
    r << "  p_c = " << fmt_double(fit.p_c) << " +- " << fmt_double(sd(pcs)) << "\n";
    r << "  nu = " << fmt_double(fit.nu) << " +- " << fmt_double(sd(nus)) << "\n";
    r << "  beta = " << fmt_double(fit.beta) << " +- " << fmt_double(sd(betas)) << "\n";
    r << "  cost = " << fmt_double(fit.collapse_cost) << " (Binder " << fmt_double(fit.binder_cost) << ", m^2 "
      << fmt_double(fit.magnetization_cost) << ")" << (fit.converged ? "" : " [" + fit.note + "]") << "\n";
    if (other) {
        r << "  joint fit of all three: p_c = " << fmt_double(other->p_c) << ", nu = " << fmt_double(other->nu)
          << ", beta = " << fmt_double(other->beta) << ", cost = " << fmt_double(other->collapse_cost) << "\n";
    }
    r << "  landscape (p_c, nu, beta, cost):\n";
    for (const auto &s : fit.landscape) {
        r << "    " << fmt_double(s[0]) << " " << fmt_double(s[1]) << " " << fmt_double(s[2]) << " " << fmt_double(s[3])
          << "\n";
    }
}

bool use_dense(const ExperimentConfig &c, int L) {
    return c.engine == "dense" || (c.engine == "auto" && L <= kMaxDenseL);
}

void run_moments(Collector &col) {
    const auto &c = col.cfg;
    if (c.engine == "mc") {
        throw UnsupportedModeError("moments are computed exactly; physics.engine must be auto, dense or loops");
    }
    for (int L : c.L) {
        auto code = build_code(L);
        std::optional<DenseState> rho0;
        if (use_dense(c, L)) {
            if (L > kMaxDenseL) {
                throw CapacityError("dense engine supports L <= " + std::to_string(kMaxDenseL));
            }
            rho0 = build_rho0(code, Rho0Variant::MaxMixedLogical);
        }
        for (double p : c.p) {
            ErrorModel model = c.model(p);
            if (c.engine != "dense") {
                col.exact("moment", L, p, moment_via_loops(code, model, c.n), "loops");
            }
            if (rho0) {
                col.exact("moment", L, p, renyi_moment(apply_channel(*rho0, model), c.n), "dense");
            }
        }
        col.report << "moments tr rho^" << c.n << " computed at L=" << L << "\n";
    }
}

std::string region_label(const Tripartition &t) {
    return t.describe();
}

Tripartition tripartition_for(const ExperimentConfig &c, const ToricCode &code) {
    int L = code.L;
    int side = c.regions.side > 0 ? c.regions.side : std::max(2, L / 4);
    if (side + 2 > L) {
        throw ConfigError("physics.regions.side " + std::to_string(side) + " does not fit in L=" + std::to_string(L));
    }
    int row = c.regions.row >= 0 ? c.regions.row : (L - side) / 2;
    int col = c.regions.col >= 0 ? c.regions.col : (L - side) / 2;
    return wedge_tripartition(code, side, row, col);
}

void run_negativity(Collector &col) {
    const auto &c = col.cfg;
    int order = 2 * c.n;
    LoopKind kind = c.error == "z" ? LoopKind::X : LoopKind::Z;
    for (int L : c.L) {
        auto code = build_code(L);
        auto tri = tripartition_for(c, code);
        auto regions = kp_regions(tri);
        col.report << "negativity E^(" << order << ") at L=" << L << ", " << region_label(tri) << "\n";
        bool mc = c.engine == "mc" || (c.engine == "auto" && L > 3);
        Observables obs;
        obs.magnetization = false;
        std::vector<std::string> names;
        for (const auto &[name, region] : regions) {
            obs.pin_regions.push_back(make_pin_region(code, kind, region, name));
            names.push_back(name);
        }
        for (double p : c.p) {
            ErrorModel model = c.model(p);
            std::vector<RegionEstimate> est;
            std::string method;
            uint64_t sweeps = 0;
            std::optional<Estimate> jackknife;
            if (mc) {
                MCConfig m = c.mc(L, p);
                m.n = order;
                auto acc = simulate(col, m, obs, "negativity", p);
                method = mc_method(c);
                sweeps = acc.sweeps;
                for (const auto &name : names) {
                    est.push_back({name, estimate_pinning(acc, order, name)});
                }
                jackknife = kitaev_preskill_jackknife(acc, order, names);
            } else if (c.engine == "dense") {
                if (L > kMaxDenseL) {
                    throw CapacityError("dense engine supports L <= " + std::to_string(kMaxDenseL));
                }
                auto rho = apply_channel(build_rho0(code, Rho0Variant::MaxMixedLogical), model);
                method = "dense";
                for (const auto &[name, region] : regions) {
                    est.push_back({name, {renyi_negativity(rho, region, order), 0, false, ""}});
                }
            } else {
                method = "loops";
                for (const auto &[name, region] : regions) {
                    est.push_back({name, {negativity_via_pinning(code, model, order, region), 0, false, ""}});
                }
            }
            for (const auto &r : est) {
                col.add("negativity:" + r.name, L, p, r.e, method, sweeps, mc ? c.chains : 0);
            }
            auto kp = kitaev_preskill(est, region_label(tri));
            if (jackknife) {
                if (kp.gamma.flagged && !jackknife->flagged) {
                    jackknife->flagged = true;
                    jackknife->note = kp.gamma.note;
                }
                col.add("gamma_N_jackknife", L, p, *jackknife, method, sweeps, c.chains);
            }
            col.add("gamma_N", L, p, kp.gamma, method, sweeps, mc ? c.chains : 0);
            col.add("gamma_N_simplified", L, p, kp.gamma_simplified, method, sweeps, mc ? c.chains : 0);
            col.report << "  p=" << fmt_double(p) << ": gamma_N = " << fmt_double(kp.gamma.value) << " +- "
                       << fmt_double(kp.gamma.error) << (kp.gamma.flagged ? " [" + kp.gamma.note + "]" : "") << "\n";
        }
    }
}

std::string sector_label(const std::vector<uint8_t> &d) {
    std::string s;
    for (auto v : d) {
        s += std::to_string(v);
    }
    return s;
}

std::vector<uint8_t> sector_of_index(uint64_t idx, int flavors) {
    std::vector<uint8_t> d(flavors);
    for (int s = 0; s < flavors; s++) {
        d[s] = (idx >> (2 * s)) & 3;
    }
    return d;
}

void run_coherent_info(Collector &col) {
    const auto &c = col.cfg;
    int flavors = c.n - 1;
    uint64_t sectors = uint64_t{1} << (2 * flavors);
    const double log2 = std::log(2.0);
    for (int L : c.L) {
        auto code = build_code(L);
        bool loops_fit = flavors * (L * L + 1) <= kMaxLoopTermsLog2;
        bool mc = c.engine == "mc" || (c.engine == "auto" && !loops_fit);
        for (double p : c.p) {
            ErrorModel model = c.model(p);
            if (c.engine == "dense") {
                if (L > kMaxDenseL) {
                    throw CapacityError("dense engine supports L <= " + std::to_string(kMaxDenseL));
                }
                auto rho = apply_channel(build_rho0(code, Rho0Variant::BellWithReference), model);
                col.exact("coherent_info", L, p, renyi_coherent_info(rho, c.n), "dense");
                continue;
            }
            if (!mc) {
                for (LoopKind kind : {LoopKind::X, LoopKind::Z}) {
                    auto df = defect_free_energies(code, kind, c.n, model.tension(kind));
                    for (uint64_t k = 1; k < df.size(); k++) {
                        col.exact(std::string("defect_free_energy:") + loop_kind_name(kind) + ":" +
                                      sector_label(sector_of_index(k, flavors)),
                                  L, p, df[k], "loops");
                    }
                }
                col.exact("coherent_info", L, p, coherent_info_via_defects(code, model, c.n), "loops");
                continue;
            }
            // Monte Carlo: defect free energies of every sector for each loop type with nonzero tension.
            double total = 0, var = 0;
            bool flagged = false;
            std::string note;
            for (LoopKind kind : {LoopKind::X, LoopKind::Z}) {
                double rate = model.rate(kind);
                std::vector<Estimate> df(sectors);
                if (rate > 0) {
                    Observables obs;
                    obs.magnetization = false;
                    for (uint64_t k = 1; k < sectors; k++) {
                        auto d = sector_of_index(k, flavors);
                        obs.defects.push_back(make_defect_probe(code, kind, d, sector_label(d)));
                    }
                    auto acc = simulate(col, c.mc(L, rate), obs, std::string("defects-") + loop_kind_name(kind), p);
                    for (uint64_t k = 1; k < sectors; k++) {
                        df[k] = estimate_defect_free_energy(acc, sector_label(sector_of_index(k, flavors)));
                        col.add(std::string("defect_free_energy:") + loop_kind_name(kind) + ":" +
                                    sector_label(sector_of_index(k, flavors)),
                                L, p, df[k], mc_method(c), acc.sweeps, c.chains);
                    }
                }
                double hi = 0, acc_w = 0;
                for (const auto &e : df) {
                    hi = std::max(hi, -e.value);
                }
                for (const auto &e : df) {
                    acc_w += std::exp(-e.value - hi);
                }
                for (const auto &e : df) {
                    double w = std::exp(-e.value - hi) / acc_w;
                    var += w * w * e.error * e.error;
                    if (e.flagged) {
                        flagged = true;
                        note = e.note;
                    }
                }
                total += hi + std::log(acc_w);
            }
            double ic = total / flavors - 2 * log2;
            col.add("coherent_info", L, p, {ic, std::sqrt(var) / flavors, flagged, note}, mc_method(c),
                    sweeps_per_chain(c), c.chains);
        }
        col.report << "coherent information I_c^(" << c.n << ") at L=" << L << "\n";
    }
}

void run_relative_entropy(Collector &col) {
    const auto &c = col.cfg;
    for (int L : c.L) {
        auto code = build_code(L);
        for (int s : c.separations) {
            if (s >= L) {
                throw ConfigError("physics.separations entry " + std::to_string(s) + " must be < L=" + std::to_string(L));
            }
        }
        bool loops_fit = (uint64_t)(c.n - 1) * (L * L + 1) <= kMaxLoopTermsLog2;
        bool mc = c.engine == "mc" || (c.engine == "auto" && !loops_fit);
        if (c.engine == "dense") {
            throw UnsupportedModeError("relative-entropy supports engines auto, loops and mc");
        }
        for (double p : c.p) {
            ErrorModel model = c.model(p);
            std::vector<double> xs, ys, es;
            std::string method;
            if (mc) {
                Observables obs;
                obs.magnetization = false;
                for (int s : c.separations) {
                    obs.displacements.push_back({0, s});
                }
                auto acc = simulate(col, c.mc(L, model.p_x), obs, "correlator", p);
                method = mc_method(c);
                for (int s : c.separations) {
                    auto e = estimate_correlator(acc, c.n, {0, s});
                    col.add("relative_entropy:sep=" + std::to_string(s), L, p, e, method, acc.sweeps, c.chains);
                    if (std::isfinite(e.value) && !e.flagged) {
                        xs.push_back(s);
                        ys.push_back(e.value);
                        es.push_back(e.error);
                    }
                }
            } else {
                method = "loops";
                for (int s : c.separations) {
                    double d = relative_entropy_via_loops(code, model, c.n, 0, code.site(0, s));
                    col.exact("relative_entropy:sep=" + std::to_string(s), L, p, d, method);
                    if (std::isfinite(d)) {
                        xs.push_back(s);
                        ys.push_back(d);
                    }
                }
                es.clear();
            }
            if (xs.size() >= 3) {
                auto fit = linear_fit(xs, ys, es);
                col.add("relative_entropy_slope", L, p, {fit.slope, fit.slope_error, false, ""}, method);
                col.add("relative_entropy_intercept", L, p, {fit.intercept, fit.intercept_error, false, ""}, method);
                col.exact("relative_entropy_r2", L, p, fit.r_squared, method);
                col.report << "  L=" << L << " p=" << fmt_double(p) << ": D = " << fmt_double(fit.intercept) << " + "
                           << fmt_double(fit.slope) << " * r (R^2 = " << fmt_double(fit.r_squared) << ")\n";
            }
        }
    }
}

RunOutcome run_verify(Collector &col) {
    auto rep = verify_suite(col.cfg.level);
    for (const auto &chk : rep.checks) {
        ResultRow r;
        r.quantity = "verify:" + chk.name;
        r.n = col.cfg.n;
        r.value = chk.residual;
        r.method = "verify-" + col.cfg.level;
        r.seed_base = col.cfg.seed;
        r.flag = chk.passed ? "" : "FAILED " + chk.detail;
        col.rows.push_back(r);
    }
    col.report << rep.str();
    RunOutcome out;
    out.status = rep.passed() ? ExitStatus::Ok : ExitStatus::AssertionFailure;
    return out;
}

std::string timestamp_utc() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

void write_file(const std::filesystem::path &path, const std::string &content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot write " + path.string());
    }
    f << content;
}

}  // namespace

MCConfig ExperimentConfig::mc(int L_, double p_) const {
    MCConfig m;
    m.L = L_;
    m.n = n;
    m.p = p_;
    m.sweeps_thermalize = sweeps_thermalize;
    m.sweeps_measure = sweeps_measure;
    m.measure_interval = measure_interval;
    m.chain_count = chains;
    m.seed_base = seed;
    m.blocks = blocks;
    m.product_term = product_term;
    m.ordered_start = ordered_start;
    m.rule = update == "heat-bath" ? UpdateRule::HeatBath : UpdateRule::Metropolis;
    return m;
}

ErrorModel ExperimentConfig::model(double p_) const {
    if (error == "x") {
        return ErrorModel(p_, 0);
    }
    if (error == "z") {
        return ErrorModel(0, p_);
    }
    return ErrorModel(p_, p_);
}

ExperimentConfig parse_config(const std::string &text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException &e) {
        throw ConfigError("YAML syntax error: " + e.msg, e.mark.line + 1);
    }
    return parse_impl(root);
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("cannot open config file " + path);
    }
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError &e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void validate_config(const ExperimentConfig &config) {
    validate_impl(config, nullptr);
}

std::string echo_config(const ExperimentConfig &c) {
    std::ostringstream o;
    auto num = [](double x) { return fmt_double(x); };
    auto integer = [](int x) { return std::to_string(x); };
    o << "command: " << c.command << "\n";
    o << "physics:\n";
    o << "  L: " << flow_list(c.L, integer) << "\n";
    o << "  n: " << c.n << "\n";
    o << "  p: " << flow_list(c.p, num) << "\n";
    o << "  error: " << c.error << "\n";
    o << "  engine: " << c.engine << "\n";
    o << "  observable: " << c.observable << "\n";
    o << "  regions:\n";
    o << "    geometry: " << c.regions.geometry << "\n";
    o << "    side: " << c.regions.side << "\n";
    o << "    row: " << c.regions.row << "\n";
    o << "    col: " << c.regions.col << "\n";
    o << "  separations: " << flow_list(c.separations, integer) << "\n";
    o << "mc:\n";
    o << "  sweeps_thermalize: " << c.sweeps_thermalize << "\n";
    o << "  sweeps_measure: " << c.sweeps_measure << "\n";
    o << "  measure_interval: " << c.measure_interval << "\n";
    o << "  chains: " << c.chains << "\n";
    o << "  seed: " << c.seed << "\n";
    o << "  blocks: " << c.blocks << "\n";
    o << "  update: " << c.update << "\n";
    o << "  product_term: " << (c.product_term ? "true" : "false") << "\n";
    o << "  ordered_start: " << (c.ordered_start ? "true" : "false") << "\n";
    o << "  tempering: " << (c.tempering ? "true" : "false") << "\n";
    o << "analysis:\n";
    o << "  bootstrap: " << c.bootstrap << "\n";
    o << "  collapse_bootstrap: " << c.collapse_bootstrap << "\n";
    o << "  collapse_fit: " << c.collapse_fit << "\n";
    o << "  neighbors: " << c.neighbors << "\n";
    o << "  input: " << yaml_string(c.input) << "\n";
    o << "io:\n";
    o << "  out: " << yaml_string(c.out) << "\n";
    o << "  format: " << c.format << "\n";
    o << "verify:\n";
    o << "  level: " << c.level << "\n";
    return o.str();
}

std::string results_csv(const std::vector<ResultRow> &rows) {
    std::ostringstream o;
    o << "quantity,n,L,p,value,error,method,seed_base,chains,sweeps,flag\n";
    for (const auto &r : rows) {
        std::string flag = r.flag;
        std::replace(flag.begin(), flag.end(), ',', ';');
        o << r.quantity << "," << r.n << "," << r.L << "," << fmt_double(r.p) << "," << fmt_double(r.value) << ","
          << fmt_double(r.error) << "," << r.method << "," << r.seed_base << "," << r.chains << "," << r.sweeps << ","
          << flag << "\n";
    }
    return o.str();
}

std::string results_jsonl(const std::vector<ResultRow> &rows) {
    std::string out;
    for (const auto &r : rows) {
        Json j;
        j["quantity"] = r.quantity;
        j["n"] = r.n;
        j["L"] = r.L;
        j["p"] = r.p;
        j["value"] = std::isfinite(r.value) ? Json(r.value) : Json(fmt_double(r.value));
        j["error"] = std::isfinite(r.error) ? Json(r.error) : Json(fmt_double(r.error));
        j["method"] = r.method;
        j["seed_base"] = r.seed_base;
        j["chains"] = r.chains;
        j["sweeps"] = r.sweeps;
        j["flag"] = r.flag;
        out += j.dump() + "\n";
    }
    return out;
}

std::string accumulator_json(const MomentAccumulator &acc, int L, int n, double p, const std::string &tag) {
    Json j;
    j["tag"] = tag;
    j["L"] = L;
    j["n"] = n;
    j["p"] = p;
    j["chain_id"] = acc.chain_id;
    j["seed"] = acc.seed;
    j["sweep_count"] = acc.sweeps;
    j["samples"] = acc.samples;
    j["names"] = acc.names;
    Json sums = Json::array();
    for (const auto &row : acc.block_sums) {
        Json r = Json::array();
        for (double v : row) {
            r.push_back(std::isfinite(v) ? Json(v) : Json(fmt_double(v)));
        }
        sums.push_back(r);
    }
    j["block_sums"] = sums;
    j["block_counts"] = acc.block_counts;
    j["pin_hits"] = acc.pin_hits;
    return j.dump();
}

std::vector<TaggedAccumulator> read_accumulators(const std::string &path) {
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("cannot open accumulator file " + path);
    }
    std::vector<TaggedAccumulator> out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        lineno++;
        if (line.empty()) {
            continue;
        }
        try {
            Json j = Json::parse(line);
            TaggedAccumulator t;
            t.tag = j.at("tag").get<std::string>();
            t.L = j.at("L").get<int>();
            t.n = j.at("n").get<int>();
            t.p = j.at("p").get<double>();
            auto &a = t.acc;
            a.chain_id = j.at("chain_id").get<int>();
            a.seed = j.at("seed").get<uint64_t>();
            a.sweeps = j.at("sweep_count").get<uint64_t>();
            a.samples = j.at("samples").get<uint64_t>();
            a.names = j.at("names").get<std::vector<std::string>>();
            for (const auto &row : j.at("block_sums")) {
                std::vector<double> r;
                for (const auto &v : row) {
                    r.push_back(v.is_string() ? std::stod(v.get<std::string>()) : v.get<double>());
                }
                a.block_sums.push_back(r);
            }
            a.block_counts = j.at("block_counts").get<std::vector<double>>();
            a.pin_hits = j.at("pin_hits").get<std::vector<uint64_t>>();
            out.push_back(std::move(t));
        } catch (const Json::exception &e) {
            throw ConfigError(path + ": malformed accumulator record: " + e.what(), lineno);
        }
    }
    return out;
}

RunOutcome run_experiment(const ExperimentConfig &config, const RunOptions &options) {
    validate_config(config);
    auto t0 = std::chrono::steady_clock::now();
    Collector col{config, options, {}, {}, {}};
    RunOutcome outcome;
    const auto &cmd = config.command;
    if (cmd == "moments") {
        run_moments(col);
    } else if (cmd == "threshold") {
        run_scan(col, false);
    } else if (cmd == "collapse") {
        run_scan(col, true);
    } else if (cmd == "negativity") {
        run_negativity(col);
    } else if (cmd == "coherent-info") {
        run_coherent_info(col);
    } else if (cmd == "relative-entropy") {
        run_relative_entropy(col);
    } else if (cmd == "verify") {
        outcome = run_verify(col);
    }
    outcome.rows = col.rows;
    outcome.report = col.report.str();
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!options.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::path dir(options.out_dir);
        fs::create_directories(dir);
        if (config.format == "csv") {
            write_file(dir / "results.csv", results_csv(outcome.rows));
        } else {
            write_file(dir / "results.jsonl", results_jsonl(outcome.rows));
        }
        if (!col.accumulator_lines.empty()) {
            std::string acc;
            for (const auto &l : col.accumulator_lines) {
                acc += l + "\n";
            }
            write_file(dir / "accumulators.jsonl", acc);
        }
        write_file(dir / "report.txt", outcome.report);
        Json m;
        m["tool"] = "tcdiag";
        m["version"] = kVersion;
        m["compiler"] = __VERSION__;
        m["command"] = config.command;
        m["config"] = echo_config(config);
        m["seed_base"] = config.seed;
        m["seed_scheme"] = "chain c runs mt19937_64 seeded with splitmix64(splitmix64(seed_base) xor (c + 1) * 0xD1B54A32D192ED03)";
        Json seeds = Json::array();
        for (int c = 0; c < config.chains; c++) {
            seeds.push_back(derive_seed(config.seed, c));
        }
        m["chain_seeds"] = seeds;
        m["files"] = {config.format == "csv" ? "results.csv" : "results.jsonl", "report.txt"};
        if (!col.accumulator_lines.empty()) {
            m["files"].push_back("accumulators.jsonl");
        }
        m["status"] = (int)outcome.status;
        m["timing"] = {{"timestamp", timestamp_utc()}, {"wall_time_s", wall}};
        write_file(dir / "manifest.json", m.dump(2) + "\n");
    }
    return outcome;
}

}  // namespace tcdiag
