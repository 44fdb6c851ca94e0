#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "tcdiag/analysis.h"

using namespace tcdiag;

namespace {

// Binder-like scaling form: 3 deep in the disordered phase, 1 deep in the ordered phase.
double scaling_binder(double x) {
    return 1 + 2 / (1 + std::exp(4 * x));
}
double scaling_m2(double x) {
    return 0.5 + 0.4 * std::tanh(x);
}

std::vector<ScalingPoint> synthetic(double p_c, double nu, double beta, double noise, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 1);
    std::vector<ScalingPoint> out;
    for (int L : {12, 16, 24, 32}) {
        for (int k = 0; k <= 20; k++) {
            double p = p_c - 0.05 + 0.005 * k;
            double x = (p - p_c) * std::pow(L, 1 / nu);
            double b = scaling_binder(x), m = scaling_m2(x) * std::pow(L, -2 * beta / nu);
            double eb = noise * 0.01, em = noise * 0.01 * m;
            out.push_back({(double)L, p, b + eb * g(rng), eb, m + em * g(rng), em});
        }
    }
    return out;
}

std::vector<Curve> curves_of(const std::vector<ScalingPoint> &pts) {
    std::map<double, Curve> by_l;
    for (const auto &pt : pts) {
        auto &c = by_l[pt.L];
        c.L = pt.L;
        c.p.push_back(pt.p);
        c.value.push_back(pt.binder);
        c.error.push_back(pt.binder_error);
    }
    std::vector<Curve> out;
    for (auto &[l, c] : by_l) {
        out.push_back(c);
    }
    return out;
}

TEST(Crossing, StraightLines) {
    Curve a{8, {0.1, 0.2, 0.3}, {2.0, 1.5, 1.0}, {}};
    Curve b{16, {0.1, 0.2, 0.3}, {2.5, 1.5, 0.5}, {}};
    auto x = curve_crossing(a, b);
    ASSERT_TRUE(x.has_value());
    EXPECT_NEAR(*x, 0.2, 1e-12);
}

TEST(Crossing, SyntheticBinderCurves) {
    auto curves = curves_of(synthetic(0.2, 1.0, 0.125, 1.0, 4));
    auto r = binder_crossing(curves);
    ASSERT_TRUE(r.found);
    EXPECT_EQ(r.pairs.size(), 6u);
    EXPECT_NEAR(r.pooled.value, 0.2, 3 * r.pooled.error + 1e-4);
    EXPECT_LT(r.pooled.error, 0.005);
    EXPECT_GT(r.pooled.error, 0);
    EXPECT_TRUE(r.note.empty());
}

TEST(Crossing, IdenticalCurvesHaveNoCrossing) {
    Curve a{8, {0.1, 0.2, 0.3, 0.4}, {2.0, 1.5, 1.2, 1.0}, {0, 0, 0, 0}};
    Curve b = a;
    b.L = 16;
    auto r = binder_crossing({a, b});
    EXPECT_FALSE(r.found);
    EXPECT_TRUE(std::isnan(r.pooled.value));
    EXPECT_TRUE(r.pooled.flagged);
    EXPECT_THROW(binder_crossing({a}), std::invalid_argument);
}

TEST(Collapse, RecoversKnownExponents) {
    auto data = synthetic(0.2, 1.0, 0.125, 1.0, 9);
    for (bool staged : {true, false}) {
        CollapseOptions opt;
        opt.staged = staged;
        auto fit = fss_collapse(data, opt);
        EXPECT_TRUE(fit.converged) << fit.note;
        EXPECT_NEAR(fit.p_c, 0.2, 0.02 * 0.2) << "staged " << staged;
        EXPECT_NEAR(fit.nu, 1.0, 0.02) << "staged " << staged;
        EXPECT_NEAR(fit.beta, 0.125, 0.02) << "staged " << staged;
        EXPECT_FALSE(fit.landscape.empty());
        EXPECT_LT(fit.collapse_cost, 5.0);
        EXPECT_NEAR(fit.collapse_cost, fit.binder_cost + fit.magnetization_cost, 1e-12);
    }
}

TEST(Collapse, WrongExponentCostsMore) {
    auto data = synthetic(0.23, 0.74, 0.1, 1.0, 2);
    double best = collapse_cost(data, 0.23, 0.74, 0.1, 0);
    EXPECT_GT(collapse_cost(data, 0.23, 1.48, 0.1, 0), 3 * best);
    EXPECT_GT(collapse_cost(data, 0.25, 0.74, 0.1, 0), 10 * best);
    EXPECT_GT(collapse_cost(data, 0.23, 0.74, 0.3, 1), 10 * collapse_cost(data, 0.23, 0.74, 0.1, 1));
}

std::vector<RegionEstimate> kp_input(double a, double b, double c, double err) {
    return {{"A", {a, err}}, {"B", {a, err}}, {"C", {a, err}}, {"AB", {b, err}},
            {"BC", {b, err}}, {"AC", {b, err}}, {"ABC", {c, err}}};
}

TEST(KitaevPreskill, Combination) {
    auto zero = kitaev_preskill(kp_input(0, 0, 0, 0));
    EXPECT_EQ(zero.gamma.value, 0.0);
    EXPECT_EQ(zero.gamma_simplified.value, 0.0);
    // Boundary-law values cancel, leaving the constant: E_R = 0.3 |boundary R| - log 2.
    double ln2 = std::log(2.0);
    auto r = kitaev_preskill(kp_input(0.3 * 4 - ln2, 0.3 * 6 - ln2, 0.3 * 6 - ln2, 0.01));
    EXPECT_NEAR(r.gamma.value, ln2 + 0.3 * (12 - 18 + 6), 1e-12);
    EXPECT_NEAR(r.gamma.error, 0.01 * std::sqrt(7.0), 1e-12);
    auto regions = kp_input(1, 2, 3, 0.1);
    regions[6].e.flagged = true;
    regions[6].e.note = "undersampled";
    EXPECT_TRUE(kitaev_preskill(regions).gamma.flagged);
    regions.pop_back();
    EXPECT_THROW(kitaev_preskill(regions), std::invalid_argument);
}

TEST(KitaevPreskill, JackknifeMatchesPointEstimates) {
    std::vector<std::string> names = {"A", "B", "C", "AB", "BC", "AC", "ABC"};
    MomentAccumulator acc;
    for (const auto &n : names) {
        acc.names.push_back("pin:" + n);
    }
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.9, 1.1);
    const double base[7] = {0.5, 0.4, 0.45, 0.2, 0.18, 0.21, 0.09};
    for (int b = 0; b < 20; b++) {
        std::vector<double> row;
        for (double x : base) {
            row.push_back(1000 * x * u(rng));
        }
        acc.block_sums.push_back(row);
        acc.block_counts.push_back(1000);
    }
    acc.samples = 20000;
    std::vector<RegionEstimate> est;
    for (const auto &n : names) {
        est.push_back({n, estimate_pinning(acc, 4, n)});
    }
    auto point = kitaev_preskill(est);
    auto jk = kitaev_preskill_jackknife(acc, 4, names);
    EXPECT_NEAR(jk.value, point.gamma.value, 1e-12);
    EXPECT_GT(jk.error, 0);
    EXPECT_THROW(kitaev_preskill_jackknife(acc, 4, {"A"}), std::invalid_argument);
}

TEST(LinearFit, ExactAndWeighted) {
    auto f = linear_fit({1, 2, 3, 4}, {3, 5, 7, 9});
    EXPECT_NEAR(f.slope, 2, 1e-12);
    EXPECT_NEAR(f.intercept, 1, 1e-12);
    EXPECT_NEAR(f.r_squared, 1, 1e-12);
    // A badly measured outlier barely moves the weighted fit.
    auto w = linear_fit({1, 2, 3, 4}, {3, 5, 7, 20}, {0.01, 0.01, 0.01, 100});
    EXPECT_NEAR(w.slope, 2, 1e-3);
    auto flat = linear_fit({1, 2, 3, 4}, {1, 2, 1, 2});
    EXPECT_LT(flat.r_squared, 0.5);
    EXPECT_THROW(linear_fit({1}, {1}), std::invalid_argument);
}

TEST(Bootstrap, StandardErrorOfMean) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0, 1);
    std::vector<double> v(2000);
    for (double &x : v) {
        x = g(rng);
    }
    auto mean = [](const std::vector<double> &s) {
        double t = 0;
        for (double x : s) {
            t += x;
        }
        return t / s.size();
    };
    auto e = bootstrap(v, mean, 400, 1);
    EXPECT_NEAR(e.error, 1 / std::sqrt(2000.0), 0.15 / std::sqrt(2000.0));
    EXPECT_EQ(bootstrap(v, mean, 50, 3).error, bootstrap(v, mean, 50, 3).error);
}

}  // namespace
