#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <tuple>

#include "tcdiag/loop_exact.h"
#include "tcdiag/regions.h"
#include "tcdiag/spin_mc.h"

using namespace tcdiag;

namespace {

MCConfig small_config(int L, int n, double p, int sweeps, uint64_t seed) {
    MCConfig c;
    c.L = L;
    c.n = n;
    c.p = p;
    c.sweeps_thermalize = 500;
    c.sweeps_measure = sweeps;
    c.seed_base = seed;
    c.blocks = 20;
    return c;
}

double z_score(const Estimate &e, double exact) {
    return std::fabs(e.value - exact) / std::max(e.error, 1e-300);
}

TEST(SpinSystem, EnergyBookkeeping) {
    auto c = small_config(8, 4, 0.2, 1, 3);
    std::mt19937_64 rng(9);
    auto sys = initial_system(c, rng);
    for (int t = 0; t < 10000; t++) {
        metropolis_sweep(sys, rng);
    }
    EXPECT_EQ(sys.bond_sum, sys.bond_sum_from_scratch());
}

TEST(Metropolis, ZeroCouplingAcceptsEverything) {
    SpinSystem sys(6, 3, 0.0);
    std::mt19937_64 rng(1);
    EXPECT_EQ(metropolis_sweep(sys, rng), 36u * 3u);
}

TEST(Metropolis, InfiniteCouplingFreezesOrderedStart) {
    SpinSystem sys(6, 2, INFINITY);
    std::mt19937_64 rng(1);
    EXPECT_EQ(metropolis_sweep(sys, rng), 0u);
}

// Exact Boltzmann distribution of the 2x2 torus, from the spin geometry and the Hamiltonian written out here.
std::vector<double> exact_distribution(const SpinSystem &geom) {
    int bits = geom.num_sites() * geom.flavors;
    std::vector<double> w(size_t{1} << bits);
    double z = 0;
    for (size_t cfg = 0; cfg < w.size(); cfg++) {
        auto s = [&](int site, int f) { return ((cfg >> (site * geom.flavors + f)) & 1) ? -1 : 1; };
        double e = 0;
        for (int b = 0; b < geom.num_bonds(); b++) {
            auto [i, j] = geom.bond_sites(b);
            int prod_i = 1, prod_j = 1;
            for (int f = 0; f < geom.flavors; f++) {
                e -= geom.J * s(i, f) * s(j, f);
                prod_i *= s(i, f);
                prod_j *= s(j, f);
            }
            if (geom.product_term) {
                e -= geom.J * prod_i * prod_j;
            }
        }
        w[cfg] = std::exp(-e);
        z += w[cfg];
    }
    for (double &x : w) {
        x /= z;
    }
    return w;
}

size_t encode(const SpinSystem &sys) {
    size_t cfg = 0;
    for (int i = 0; i < sys.num_sites(); i++) {
        for (int f = 0; f < sys.flavors; f++) {
            cfg |= size_t((sys.spins[i] >> f) & 1) << (i * sys.flavors + f);
        }
    }
    return cfg;
}

// Each single-spin update must leave the Boltzmann distribution invariant on its own.
TEST(Sweep, AcceptanceTablesSatisfyDetailedBalance) {
    for (auto rule : {UpdateRule::Metropolis, UpdateRule::HeatBath}) {
        SpinSystem sys(2, 2, 0.37);
        sys.rule = rule;
        std::mt19937_64 rng(1);
        metropolis_sweep(sys, rng);
        for (int t = -8; t <= 8; t++) {
            double forward = sys.accept_table[t + 8], backward = sys.accept_table[8 - t];
            EXPECT_NEAR(forward / backward, std::exp(-2 * sys.J * t), 1e-12) << "t=" << t;
        }
    }
}

// Empirical stationary distribution on the 2x2 torus. Metropolis with a single flavor is left out:
// its fixed-order scan is reducible there.
TEST(Sweep, SamplesBoltzmannOnTwoByTwo) {
    struct Case {
        UpdateRule rule;
        int flavors;
    };
    for (auto [rule, flavors] : {Case{UpdateRule::HeatBath, 1}, Case{UpdateRule::HeatBath, 2}, Case{UpdateRule::Metropolis, 2}}) {
        SpinSystem sys(2, flavors, 0.3);
        sys.rule = rule;
        auto prob = exact_distribution(sys);
        std::mt19937_64 rng(77);
        const int batches = 50, per_batch = 20000;
        std::vector<std::vector<double>> freq(prob.size(), std::vector<double>(batches));
        for (int b = 0; b < batches; b++) {
            for (int t = 0; t < per_batch; t++) {
                metropolis_sweep(sys, rng);
                freq[encode(sys)][b] += 1.0 / per_batch;
            }
        }
        for (size_t cfg = 0; cfg < prob.size(); cfg++) {
            auto e = blocked_mean(freq[cfg], 1);
            EXPECT_LT(std::fabs(e.value - prob[cfg]), 4.5 * e.error + 1e-4)
                << "flavors " << flavors << " heat-bath " << (rule == UpdateRule::HeatBath) << " configuration " << cfg
                << ": " << e.value << " +- " << e.error << " vs " << prob[cfg];
        }
    }
}

TEST(RunChains, DeterministicAcrossWorkerCounts) {
    auto c = small_config(6, 3, 0.2, 2000, 42);
    c.chain_count = 3;
    Observables obs;
    obs.displacements = {{0, 2}};
    auto a = run_chains(c, obs, 1);
    auto b = run_chains(c, obs, 3);
    auto again = run_chains(c, obs, 1);
    EXPECT_TRUE(a == b);
    EXPECT_TRUE(a == again);
    EXPECT_EQ(a.block_counts.size(), 60u);
}

TEST(RunChains, DistinctChainSeeds) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(Binder, Limits) {
    for (int n : {2, 3, 4}) {
        Observables obs;
        auto pm = run_chain(small_config(16, n, 0.01, 20000, 5), obs, 0);
        auto fm = run_chain(small_config(16, n, 0.45, 20000, 5), obs, 0);
        auto b_pm = binder_ratio(pm), b_fm = binder_ratio(fm);
        EXPECT_NEAR(b_pm.value, 3.0, std::max(0.15, 4 * b_pm.error)) << "n=" << n;
        EXPECT_NEAR(b_fm.value, 1.0, std::max(0.01, 4 * b_fm.error)) << "n=" << n;
        EXPECT_NEAR(pm.mean("mfa"), 0.0, 0.05);
    }
}

TEST(Estimators, DefectTrivialSectorIsZero) {
    auto code = build_code(8);
    Observables obs;
    obs.defects = {make_defect_probe(code, LoopKind::X, {0}, "none")};
    auto acc = run_chain(small_config(8, 2, 0.3, 2000, 1), obs, 0);
    auto e = estimate_defect_free_energy(acc, "none");
    EXPECT_EQ(e.value, 0.0);
    EXPECT_EQ(e.error, 0.0);
}

TEST(Estimators, PinningAtZeroRate) {
    auto code = build_code(6);
    auto a = block_region(code, 1, 1, 1, 1);
    int boundary = (int)cut_cells(code, LoopKind::X, a).size();
    Observables obs;
    obs.magnetization = false;
    obs.pin_regions = {make_pin_region(code, LoopKind::X, a, "A")};
    auto cfg = small_config(6, 4, 0.0, 200000, 8);
    // Metropolis at zero coupling flips every spin deterministically; heat-bath flips with probability 1/2.
    cfg.rule = UpdateRule::HeatBath;
    auto acc = run_chain(cfg, obs, 0);
    EXPECT_NEAR(acc.mean("pin:A"), std::pow(2.0, -2.0 * (boundary - 1)), 5e-4);
    auto e = estimate_pinning(acc, 4, "A");
    EXPECT_LT(std::fabs(e.value - (boundary - 1) * std::log(2.0)), 4 * e.error + 1e-3);
}

// Every estimator against exact enumeration at L = 3, n = 2 (pinning at order 4).
class SmallSystem : public ::testing::TestWithParam<double> {};

TEST_P(SmallSystem, MatchesLoopExact) {
    double p = GetParam();
    auto code = build_code(3);
    double mu = tension_from_rate(p);
    auto region = block_region(code, 0, 0, 1, 1);
    Observables obs;
    obs.displacements = {{0, 1}, {1, 1}};
    obs.defects = {
        make_defect_probe(code, LoopKind::X, {1}, "d1"),
        make_defect_probe(code, LoopKind::X, {3}, "d3"),
    };
    auto cfg = small_config(3, 2, p, 400000, 11);
    cfg.rule = UpdateRule::HeatBath;
    auto acc = run_chain(cfg, obs, 0);

    ErrorModel zmodel(p, 0);
    for (auto d : obs.displacements) {
        double exact = relative_entropy_via_loops(code, zmodel, 2, 0, code.site(d[0], d[1]));
        auto e = estimate_correlator(acc, 2, d);
        EXPECT_LT(z_score(e, exact), 3.0) << "p=" << p << " corr " << d[0] << "," << d[1] << " " << e.value << " vs " << exact;
    }
    auto df = defect_free_energies(code, LoopKind::X, 2, mu);
    for (auto [name, exact, cycles] : {std::tuple{"d1", df[1], 1}, std::tuple{"d3", df[3], 2}}) {
        auto e = estimate_defect_free_energy(acc, name);
        // Deep in the ordered phase the exponential average is dominated by rare events; the estimator
        // must then say so instead of reporting a confident value.
        if (e.flagged) {
            EXPECT_GE(p, 0.25) << name << ": " << e.note;
            EXPECT_GT(e.value, exact - 3.5 * e.error - 1e-9) << "p=" << p << " " << name;
            EXPECT_LT(e.value, exact + cycles * std::log(3.0) + 3.5 * e.error) << "p=" << p << " " << name;
            continue;
        }
        EXPECT_LT(z_score(e, exact), 3.5) << "p=" << p << " " << name << " " << e.value << " +- " << e.error << " vs " << exact;
    }

    Observables pin;
    pin.magnetization = false;
    pin.pin_regions = {make_pin_region(code, LoopKind::X, region, "A")};
    auto pcfg = small_config(3, 4, p, 400000, 12);
    pcfg.rule = UpdateRule::HeatBath;
    auto pacc = run_chain(pcfg, pin, 0);
    double exact = negativity_via_pinning(code, LoopKind::X, mu, 4, region);
    auto e = estimate_pinning(pacc, 4, "A");
    EXPECT_LT(z_score(e, exact), 3.0) << "p=" << p << " pin " << e.value << " vs " << exact;
}

INSTANTIATE_TEST_SUITE_P(Rates, SmallSystem, ::testing::Values(0.05, 0.15, 0.25, 0.4));

TEST(Rbim, NishimoriCouplingAndOrder) {
    EXPECT_NEAR(nishimori_coupling(0.109), 1.0505, 1e-4);
    auto c = small_config(16, 2, 0.01, 5000, 3);
    EXPECT_GT(rbim_chain(c, 0).mean("m2"), 0.9);
    c.p = 0.3;
    EXPECT_LT(rbim_chain(c, 0).mean("m2"), 0.1);
    c.p = 0.0;
    EXPECT_THROW(rbim_chain(c, 0), std::invalid_argument);
}

}  // namespace
