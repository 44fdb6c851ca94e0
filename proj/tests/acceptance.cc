// Acceptance run: one PASS/FAIL line per criterion, followed by the numbers behind it.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "tcdiag/analysis.h"
#include "tcdiag/exact_oracle.h"
#include "tcdiag/experiment.h"
#include "tcdiag/loop_exact.h"
#include "tcdiag/verify.h"

using namespace tcdiag;

namespace {

const double kLog2 = std::log(2.0);

struct Verdict {
    bool pass = false;
    std::string summary;
    std::string detail;
};

struct Settings {
    std::string configs;
    std::string out;
    int threads = 1;
};

std::string num(double x, int digits = 6) {
    std::ostringstream o;
    o.precision(digits);
    o << x;
    return o.str();
}

// Relative difference with a floor of 1e-14 on the scale; equal infinities count as agreement.
double rel_diff(double a, double b) {
    if (a == b) {
        return 0;
    }
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-14});
}

class Table {
   public:
    explicit Table(std::vector<ResultRow> rows) : rows_(std::move(rows)) {}
    const ResultRow &get(const std::string &quantity, int L = -1, double p = NAN) const {
        for (const auto &r : rows_) {
            if (r.quantity == quantity && (L < 0 || r.L == L) && (std::isnan(p) || std::fabs(r.p - p) < 1e-12)) {
                return r;
            }
        }
        throw std::runtime_error("no result row " + quantity);
    }

   private:
    std::vector<ResultRow> rows_;
};

Table run_config(const Settings &s, const std::string &name, std::ostringstream &detail) {
    auto cfg = load_config(s.configs + "/" + name + ".yaml");
    RunOptions opt;
    opt.out_dir = s.out + "/" + name;
    opt.threads = s.threads;
    auto outcome = run_experiment(cfg, opt);
    detail << "    config " << name << ".yaml, output in " << opt.out_dir << "\n";
    return Table(outcome.rows);
}

std::string row_text(const ResultRow &r) {
    return num(r.value) + " +- " + num(r.error, 2) + (r.flag.empty() ? "" : " [" + r.flag + "]");
}

Verdict cross_engine() {
    std::ostringstream d;
    double worst = 0;
    std::string worst_at;
    int count = 0;
    auto code = build_code(2);
    auto mixed = build_rho0(code, Rho0Variant::MaxMixedLogical);
    auto bell = build_rho0(code, Rho0Variant::BellWithReference);
    auto excitation = dual_string(code, 0, 3);
    std::vector<EdgeSet> regions = {EdgeSet::from_indices(code.N, {0, 4}), EdgeSet::from_indices(code.N, {0, 1, 4})};
    auto note = [&](const std::string &what, double dense, double loops) {
        double r = rel_diff(dense, loops);
        count++;
        if (r > worst || worst_at.empty()) {
            worst = std::max(worst, r);
            worst_at = what + ": dense " + num(dense, 15) + ", loops " + num(loops, 15);
        }
    };
    for (int n : {2, 3}) {
        for (double p : {0.0, 0.05, 0.1, 0.178, 0.3, 0.45}) {
            std::string tag = " n=" + std::to_string(n) + " p=" + num(p);
            ErrorModel both(p, p);
            auto rho = apply_channel(mixed, both);
            note("tr rho^n" + tag, renyi_moment(rho, n), moment_via_loops(code, both, n));
            note("D" + tag, renyi_relative_entropy(rho, apply_channel(conjugate(mixed, excitation), both), n),
                 relative_entropy_via_loops(code, both, n, 0, 3));
            note("I_c" + tag, renyi_coherent_info(apply_channel(bell, both), n), coherent_info_via_defects(code, both, n));
            for (const auto &single : {ErrorModel(0, p), ErrorModel(p, 0)}) {
                auto rho1 = apply_channel(mixed, single);
                for (const auto &region : regions) {
                    note("E^(2n)" + tag, renyi_negativity(rho1, region, 2 * n),
                         negativity_via_pinning(code, single, 2 * n, region));
                }
            }
        }
    }
    d << "    worst: " << worst_at << "\n";
    return {worst <= 1e-10, std::to_string(count) + " comparisons, max relative difference " + num(worst, 3), d.str()};
}

Verdict duality() {
    std::ostringstream d;
    double worst = 0;
    for (auto [L, n] : {std::pair{2, 2}, std::pair{2, 3}, std::pair{3, 2}}) {
        auto code = build_code(L);
        for (double p : {0.05, 0.178, 0.3}) {
            auto rep = verify_duality(code, ErrorModel(p, 0.5 * p), n);
            worst = std::max(worst, rep.max_residual());
            d << "    L=" << L << " n=" << n << " p_x=" << p << " p_z=" << 0.5 * p << ": " << rep.checks.size()
              << " identities, max residual " << num(rep.max_residual(), 3) << "\n";
        }
    }
    return {worst <= 1e-10, "max relative residual " + num(worst, 3), d.str()};
}

Verdict crossing(const Settings &s, const std::string &config, double target, double tol) {
    std::ostringstream d;
    auto t = run_config(s, config, d);
    const auto &pc = t.get("p_c");
    for (const char *pair : {"p_c_pair:16-24", "p_c_pair:16-32", "p_c_pair:24-32"}) {
        d << "    " << pair << " = " << row_text(t.get(pair)) << "\n";
    }
    bool ok = std::isfinite(pc.value) && std::fabs(pc.value - target) <= tol;
    return {ok, "p_c = " + row_text(pc) + ", target " + num(target) + " +- " + num(tol), d.str()};
}

Verdict collapse(const Settings &s) {
    std::ostringstream d;
    auto t = run_config(s, "collapse_n4", d);
    const auto &pc = t.get("p_c_collapse");
    const auto &nu = t.get("nu");
    d << "    beta = " << row_text(t.get("beta")) << ", cost = " << num(t.get("collapse_cost").value) << "\n";
    d << "    Binder crossing p_c = " << row_text(t.get("p_c")) << "\n";
    d << "    joint three-parameter fit: p_c = " << num(t.get("p_c_joint").value) << ", nu = "
      << num(t.get("nu_joint").value) << ", beta = " << num(t.get("beta_joint").value) << "\n";
    bool ok = std::fabs(pc.value - 0.231) <= 0.015 && std::fabs(nu.value - 0.74) <= 0.20;
    return {ok, "p_c = " + row_text(pc) + ", nu = " + row_text(nu) + ", targets 0.231 +- 0.015 and 0.74 +- 0.20",
            d.str()};
}

Verdict negativity(const Settings &s) {
    std::ostringstream d;
    auto t = run_config(s, "negativity_L8", d);
    const auto &memory = t.get("gamma_N", 8, 0.05);
    const auto &lost = t.get("gamma_N", 8, 0.35);
    for (double p : {0.05, 0.35}) {
        d << "    p_z=" << p << ": jackknife " << row_text(t.get("gamma_N_jackknife", 8, p)) << ", three-term "
          << row_text(t.get("gamma_N_simplified", 8, p)) << "\n";
    }
    bool ok = std::fabs(memory.value - kLog2) <= 0.10 && std::fabs(lost.value) <= 0.10;
    return {ok, "gamma_N(0.05) = " + row_text(memory) + ", gamma_N(0.35) = " + row_text(lost) + ", targets log 2 and 0 +- 0.10",
            d.str()};
}

Verdict plateaus(const Settings &s) {
    std::ostringstream d;
    auto exact = run_config(s, "coherent_info_loops", d);
    double low = exact.get("coherent_info", 3, 0.02).value, high = exact.get("coherent_info", 3, 0.48).value;
    bool loops_ok = std::fabs(low - 2 * kLog2) <= 0.02 && std::fabs(high + 2 * kLog2) <= 0.02;
    d << "    loops L=3: I_c(0.02) = " << num(low) << ", I_c(0.48) = " << num(high) << " (2 log 2 = " << num(2 * kLog2) << ")\n";

    auto mc = run_config(s, "coherent_info_mc", d);
    const std::vector<std::string> sectors = {"1", "2", "3"};
    bool pm_ok = true;
    double worst_z = 0;
    for (const char *kind : {"X", "Z"}) {
        for (const auto &sec : sectors) {
            const auto &r = mc.get(std::string("defect_free_energy:") + kind + ":" + sec, 16, 0.05);
            double z = std::fabs(r.value) / std::max(r.error, 1e-300);
            worst_z = std::max(worst_z, z);
            pm_ok = pm_ok && r.flag.empty() && z < 4;
        }
    }
    d << "    MC L=16 p=0.05: every dF within " << num(worst_z, 3) << " standard errors of 0\n";
    std::vector<double> Ls, dfs, errs;
    std::string flags;
    for (int L : {8, 12, 16}) {
        const auto &r = mc.get("defect_free_energy:X:1", L, 0.3);
        Ls.push_back(L);
        dfs.push_back(r.value);
        errs.push_back(r.error);
        d << "    MC p=0.3 L=" << L << ": dF = " << row_text(r) << "\n";
        if (!r.flag.empty()) {
            flags = r.flag;
        }
    }
    auto fit = linear_fit(Ls, dfs);
    bool fm_ok = fit.slope > 0 && fit.r_squared > 0.95 && dfs[0] > 5;
    d << "    MC p=0.3: dF = " << num(fit.intercept) << " + " << num(fit.slope) << " L, R^2 = " << num(fit.r_squared) << "\n";
    if (!flags.empty()) {
        d << "    ordered-phase estimates carry the estimator's flag (" << flags
          << "); they bound dF from above and stay far above zero\n";
    }
    return {loops_ok && pm_ok && fm_ok,
            std::string("loops plateaus ") + (loops_ok ? "ok" : "off") + ", PM dF ~ 0 " + (pm_ok ? "ok" : "off") +
                ", FM dF linear in L (slope " + num(fit.slope, 4) + ", R^2 " + num(fit.r_squared, 4) + ") " +
                (fm_ok ? "ok" : "off"),
            d.str()};
}

Verdict relative_entropy(const Settings &s) {
    std::ostringstream d;
    auto t = run_config(s, "relative_entropy", d);
    double r2 = t.get("relative_entropy_r2", 32, 0.05).value;
    double slope = t.get("relative_entropy_slope", 32, 0.05).value;
    double fm_slope = t.get("relative_entropy_slope", 32, 0.3).value;
    double lo = INFINITY, hi = -INFINITY;
    for (int sep : {2, 3, 4, 5, 6, 8, 10, 12, 16}) {
        double v = t.get("relative_entropy:sep=" + std::to_string(sep), 32, 0.3).value;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    d << "    PM p=0.05: slope " << num(slope) << " per site, R^2 = " << num(r2, 8) << "\n";
    d << "    FM p=0.3: slope " << num(fm_slope, 3) << ", D spread over separations 2..16 = " << num(hi - lo, 3) << "\n";
    bool ok = r2 > 0.95 && slope > 0.5 && (hi - lo) < 0.01 * slope;
    return {ok, "PM R^2 = " + num(r2, 8) + " (> 0.95), FM spread " + num(hi - lo, 3) + " vs PM slope " + num(slope, 4),
            d.str()};
}

Verdict property_suite() {
    auto t0 = std::chrono::steady_clock::now();
    auto rep = verify_suite("quick");
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream d;
    std::istringstream lines(rep.str());
    for (std::string line; std::getline(lines, line);) {
        d << "    " << line << "\n";
    }
    return {rep.passed() && secs < 60, std::to_string(rep.checks.size()) + " checks, " + (rep.passed() ? "all pass" : "failures") +
                                          ", " + num(secs, 3) + " s (< 60 s)",
            d.str()};
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Acceptance criteria"};
    Settings s;
    s.configs = TCDIAG_CONFIG_DIR;
    s.out = "acceptance-out";
    s.threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<int> only;
    bool verbose = false;
    app.add_option("--configs", s.configs, "Directory holding the criterion configs");
    app.add_option("-o,--out", s.out, "Output directory for the runs");
    app.add_option("--threads", s.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--only", only, "Run only these criteria")->delimiter(',')->check(CLI::Range(1, 10));
    app.add_flag("-v,--verbose", verbose, "Print the numbers behind each verdict");
    CLI11_PARSE(app, argc, argv);

    struct Criterion {
        int id;
        std::string title;
        double budget_s;
        std::function<Verdict()> run;
    };
    std::vector<Criterion> criteria = {
        {1, "exact cross-engine equivalence at L=2", 300, [] { return cross_engine(); }},
        {2, "duality identity", 1800, [] { return duality(); }},
        {3, "n=2 Binder crossing", 0, [&] { return crossing(s, "threshold_n2", 0.178, 0.010); }},
        {4, "n=3 Binder crossing", 0, [&] { return crossing(s, "threshold_n3", 0.211, 0.012); }},
        {5, "n=4 threshold and exponent from collapse", 0, [&] { return collapse(s); }},
        {6, "single-flavor surrogate crossing", 0, [&] { return crossing(s, "threshold_decoupled", 0.293, 0.010); }},
        {7, "topological negativity at L=8, order 4", 0, [&] { return negativity(s); }},
        {8, "coherent-information plateaus and defect free energies", 0, [&] { return plateaus(s); }},
        {9, "relative-entropy scaling", 0, [&] { return relative_entropy(s); }},
        {10, "verify quick property suite", 60, [] { return property_suite(); }},
    };
    std::set<int> selected(only.begin(), only.end());
    std::filesystem::create_directories(s.out);
    int failures = 0;
    for (const auto &c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) {
            continue;
        }
        auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception &e) {
            v = {false, std::string("error: ") + e.what(), ""};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs > c.budget_s) {
            v.pass = false;
            v.summary += ", over the " + num(c.budget_s) + " s budget";
        }
        failures += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title << "): " << v.summary << " ["
                  << num(secs, 3) << " s]\n";
        if (verbose || !v.pass) {
            std::cout << v.detail;
        }
        std::cout.flush();
    }
    return failures == 0 ? 0 : 1;
}
