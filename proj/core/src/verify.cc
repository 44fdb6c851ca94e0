#include "tcdiag/verify.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tcdiag/error_model.h"
#include "tcdiag/exact_oracle.h"
#include "tcdiag/experiment.h"
#include "tcdiag/loop_exact.h"
#include "tcdiag/regions.h"
#include "tcdiag/spin_mc.h"

namespace tcdiag {

namespace {

struct Checker {
    VerifyReport &rep;

    /// Records a numeric comparison; tol is relative to max(1, |expected|).
    void close(const std::string &name, double got, double expected, double tol) {
        double scale = std::max(1.0, std::fabs(expected));
        double res = got == expected ? 0.0 : std::fabs(got - expected) / scale;
        std::ostringstream d;
        d.precision(12);
        d << "got " << got << ", expected " << expected;
        rep.checks.push_back({name, res <= tol, res, d.str()});
    }
    void truth(const std::string &name, bool ok, const std::string &detail = "") {
        rep.checks.push_back({name, ok, ok ? 0.0 : 1.0, detail});
    }
};

void pauli_identities(Checker &ck) {
    for (int L : {3, 4}) {
        auto code = build_code(L);
        bool commute = true;
        for (int s = 0; s < code.num_sites(); s++) {
            for (int q = 0; q < code.num_sites(); q++) {
                commute &= commutation_sign(code.star(s), code.plaquette(q)) == 1;
            }
            for (int l = 0; l < 2; l++) {
                commute &= commutation_sign(code.star(s), code.logical_z(l)) == 1;
                commute &= commutation_sign(code.logical_x(l), code.plaquette(s)) == 1;
            }
        }
        ck.truth("pauli: stabilizers commute with each other and the logicals (L=" + std::to_string(L) + ")", commute);
        bool pairing = true;
        for (int l = 0; l < 2; l++) {
            for (int m = 0; m < 2; m++) {
                pairing &= commutation_sign(code.logical_x(l), code.logical_z(m)) == (l == m ? -1 : 1);
            }
        }
        ck.truth("pauli: logical pairing (L=" + std::to_string(L) + ")", pairing);
        ck.truth("pauli: loop group rank (L=" + std::to_string(L) + ")",
                 loop_group(code, LoopKind::X).rank() == L * L + 1 && loop_group(code, LoopKind::Z).rank() == L * L + 1);
    }
}

PauliString random_pauli(size_t n, std::mt19937_64 &rng) {
    PauliString g(n);
    for (size_t k = 0; k < n; k++) {
        uint64_t r = rng();
        g.x.set(k, r & 1);
        g.z.set(k, (r >> 1) & 1);
    }
    return g;
}

/// Restricted signs compose bilinearly and split over a region and its complement;
/// Y counts obey y_A(gh) = y_A(g) y_A(h) sgn_A(g, h).
void region_algebra(Checker &ck) {
    auto code = build_code(3);
    std::mt19937_64 rng(20240601);
    int bad_split = 0, bad_bilinear = 0, bad_y = 0;
    for (int trial = 0; trial < 500; trial++) {
        auto g = random_pauli(code.N, rng), h = random_pauli(code.N, rng), k = random_pauli(code.N, rng);
        EdgeSet a(code.N);
        uint64_t bits = rng();
        for (int e = 0; e < code.N; e++) {
            a.set(e, (bits >> e) & 1);
        }
        bad_split += region_sign(g, h, a) * region_sign(g, h, ~a) != commutation_sign(g, h);
        bad_bilinear += region_sign(g * h, k, a) != region_sign(g, k, a) * region_sign(h, k, a);
        bad_y += y_phase(g * h, a) != y_phase(g, a) * y_phase(h, a) * region_sign(g, h, a);
    }
    ck.truth("pauli: sgn_A sgn_complement = full commutation sign", bad_split == 0, std::to_string(bad_split) + " violations");
    ck.truth("pauli: sgn_A is bilinear", bad_bilinear == 0, std::to_string(bad_bilinear) + " violations");
    ck.truth("pauli: y_A(gh) = y_A(g) y_A(h) sgn_A(g, h)", bad_y == 0, std::to_string(bad_y) + " violations");
}

MCConfig limit_config(int n, double p) {
    MCConfig c;
    c.L = 8;
    c.n = n;
    c.p = p;
    c.sweeps_thermalize = 500;
    c.sweeps_measure = 5000;
    c.seed_base = 11;
    c.rule = UpdateRule::HeatBath;
    return c;
}

void binder_limits(Checker &ck) {
    Observables obs;
    for (int n : {2, 3}) {
        auto pm = binder_ratio(run_chain(limit_config(n, 0.01), obs, 0));
        auto fm = binder_ratio(run_chain(limit_config(n, 0.45), obs, 0));
        ck.close("binder: paramagnetic limit 3 (n=" + std::to_string(n) + ")", pm.value, 3.0,
                 std::max(0.1, 4 * pm.error) / 3);
        ck.close("binder: ordered limit 1 (n=" + std::to_string(n) + ")", fm.value, 1.0, std::max(0.01, 4 * fm.error));
    }
}

void negativity_symmetry(Checker &ck) {
    auto code = build_code(3);
    auto a = block_region(code, 0, 0, 1, 1);
    EdgeSet rest = ~a;
    for (int order : {4, 6}) {
        if (order == 6) {
            // The order-6 enumeration at L = 3 exceeds the loop capacity; use L = 2.
            auto c2 = build_code(2);
            auto a2 = EdgeSet::from_indices(c2.N, {0, 4});
            auto r2 = ~a2;
            ck.close("negativity: E_A = E_complement (L=2, order 6)",
                     negativity_via_pinning(c2, LoopKind::X, 0.4, order, a2),
                     negativity_via_pinning(c2, LoopKind::X, 0.4, order, r2), 1e-12);
            continue;
        }
        auto c2 = build_code(2);
        auto a2 = EdgeSet::from_indices(c2.N, {0, 1, 4});
        auto rho = apply_channel(build_rho0(c2, Rho0Variant::MaxMixedLogical), ErrorModel(0, 0.13));
        ck.close("negativity: dense E_A = E_complement (L=2, order 4)", renyi_negativity(rho, a2, order),
                 renyi_negativity(rho, ~a2, order), 1e-10);
        ck.close("negativity: E_A = E_complement (L=3, order 4)", negativity_via_pinning(code, LoopKind::X, 0.4, order, a),
                 negativity_via_pinning(code, LoopKind::X, 0.4, order, rest), 1e-12);
    }
}

void defect_zero(Checker &ck) {
    auto code = build_code(3);
    for (int n : {2, 3}) {
        double worst = 0;
        for (LoopKind kind : {LoopKind::X, LoopKind::Z}) {
            for (double f : defect_free_energies(code, kind, n, 0.0)) {
                worst = std::max(worst, std::fabs(f));
            }
        }
        ck.close("defects: dF = 0 at zero rate (L=3, n=" + std::to_string(n) + ")", worst, 0.0, 1e-12);
    }
}

void determinism(Checker &ck) {
    MCConfig c = limit_config(3, 0.2);
    c.sweeps_measure = 2000;
    c.chain_count = 3;
    c.rule = UpdateRule::Metropolis;
    Observables obs;
    obs.displacements = {{0, 1}};
    auto a = run_chains(c, obs, 1);
    auto b = run_chains(c, obs, 3);
    auto again = run_chains(c, obs, 1);
    ck.truth("mc: identical accumulators for 1 and 3 threads", a == b);
    ck.truth("mc: identical accumulators on rerun", a == again);

    ExperimentConfig cfg;
    cfg.command = "threshold";
    cfg.L = {4, 6};
    cfg.n = 3;
    cfg.p = {0.15, 0.2, 0.25};
    cfg.sweeps_thermalize = 100;
    cfg.sweeps_measure = 400;
    cfg.chains = 2;
    cfg.bootstrap = 20;
    RunOptions opt;
    opt.threads = 2;
    auto first = results_csv(run_experiment(cfg, opt).rows);
    auto second = results_csv(run_experiment(cfg, opt).rows);
    ck.truth("mc: byte-identical results table on rerun", first == second);
}

void cross_engine(Checker &ck) {
    auto code = build_code(2);
    auto mixed = build_rho0(code, Rho0Variant::MaxMixedLogical);
    auto bell = build_rho0(code, Rho0Variant::BellWithReference);
    auto strip = EdgeSet::from_indices(code.N, {0, 4});
    for (int n : {2, 3}) {
        for (double p : {0.05, 0.2}) {
            std::string tag = " (L=2, n=" + std::to_string(n) + ", p=" + std::to_string(p).substr(0, 4) + ")";
            ErrorModel both(p, p);
            auto rho = apply_channel(mixed, both);
            ck.close("cross-engine: moment" + tag, renyi_moment(rho, n), moment_via_loops(code, both, n), 1e-10);
            ck.close("cross-engine: coherent information" + tag, renyi_coherent_info(apply_channel(bell, both), n),
                     coherent_info_via_defects(code, both, n), 1e-10);
            auto excited = apply_channel(conjugate(mixed, dual_string(code, 0, 3)), both);
            ck.close("cross-engine: relative entropy" + tag, renyi_relative_entropy(rho, excited, n),
                     relative_entropy_via_loops(code, both, n, 0, 3), 1e-10);
            ErrorModel z_only(0, p);
            ck.close("cross-engine: negativity" + tag, renyi_negativity(apply_channel(mixed, z_only), strip, 2 * n),
                     negativity_via_pinning(code, z_only, 2 * n, strip), 1e-10);
        }
    }
}

void duality(Checker &ck) {
    for (auto [L, n] : {std::pair{2, 2}, std::pair{2, 3}, std::pair{3, 2}}) {
        auto code = build_code(L);
        auto rep = verify_duality(code, ErrorModel(0.109, 0.0763), n);
        ck.close("duality: loops vs error configurations (L=" + std::to_string(L) + ", n=" + std::to_string(n) + ")",
                 rep.max_residual(), 0.0, 1e-10);
    }
}

}  // namespace

bool VerifyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck &c) { return c.passed; });
}

double VerifyReport::max_residual() const {
    double m = 0;
    for (const auto &c : checks) {
        m = std::max(m, c.residual);
    }
    return m;
}

std::string VerifyReport::str() const {
    std::ostringstream o;
    int ok = 0;
    for (const auto &c : checks) {
        ok += c.passed;
        o << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.passed && !c.detail.empty()) {
            o << ": " << c.detail;
        }
        o << "\n";
    }
    o << "verify " << level << ": " << ok << "/" << checks.size() << " passed, max residual " << max_residual() << "\n";
    return o.str();
}

VerifyReport verify_suite(const std::string &level) {
    if (level != "quick" && level != "full") {
        throw std::invalid_argument("verify level must be quick or full, got " + level);
    }
    VerifyReport rep;
    rep.level = level;
    Checker ck{rep};
    pauli_identities(ck);
    region_algebra(ck);
    binder_limits(ck);
    negativity_symmetry(ck);
    defect_zero(ck);
    determinism(ck);
    if (level == "full") {
        cross_engine(ck);
        duality(ck);
    }
    return rep;
}

}  // namespace tcdiag
