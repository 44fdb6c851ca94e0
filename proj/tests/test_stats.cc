#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "tcdiag/stats.h"

using namespace tcdiag;

namespace {

// For a linear statistic the jackknife error equals the standard error of the block means.
TEST(Jackknife, MeanMatchesStandardError) {
    std::vector<double> means = {1.0, 2.5, 0.5, 3.0, 1.5, 2.0, 2.2, 0.8, 1.9, 1.1, 2.8, 0.4};
    std::vector<std::vector<double>> sums;
    for (double m : means) {
        sums.push_back({m * 10});
    }
    std::vector<double> counts(means.size(), 10);
    auto e = jackknife(sums, counts, {}, [](const std::vector<double> &m) { return m[0]; });
    double avg = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
    double ss = 0;
    for (double m : means) {
        ss += (m - avg) * (m - avg);
    }
    EXPECT_NEAR(e.value, avg, 1e-14);
    EXPECT_NEAR(e.error, std::sqrt(ss / (means.size() - 1) / means.size()), 1e-14);
    EXPECT_FALSE(e.flagged);
}

TEST(Jackknife, LogDomainAgreesWithLinear) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0, 1);
    std::vector<std::vector<double>> lin, lg;
    std::vector<double> counts;
    for (int b = 0; b < 20; b++) {
        double s = 0;
        for (int k = 0; k < 50; k++) {
            s += std::exp(g(rng));
        }
        lin.push_back({s});
        lg.push_back({std::log(s) + 700});  // would overflow if exponentiated directly
        counts.push_back(50);
    }
    auto a = jackknife(lin, counts, {}, [](const std::vector<double> &m) { return std::log(m[0]); });
    auto b = jackknife(lg, counts, {true}, [](const std::vector<double> &m) { return m[0] - 700; });
    EXPECT_NEAR(a.value, b.value, 1e-12);
    EXPECT_NEAR(a.error, b.error, 1e-12);
}

// Ratio of means: the jackknife error agrees with the delta method for weakly fluctuating data.
TEST(Jackknife, RatioAgreesWithDeltaMethod) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0, 0.05);
    std::vector<std::vector<double>> sums;
    std::vector<double> x, y;
    for (int b = 0; b < 400; b++) {
        x.push_back(2 + g(rng));
        y.push_back(1 + g(rng));
        sums.push_back({x.back(), y.back()});
    }
    auto e = jackknife(sums, std::vector<double>(400, 1), {}, [](const std::vector<double> &m) { return m[0] / m[1]; });
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / 400, my = std::accumulate(y.begin(), y.end(), 0.0) / 400;
    double var = 0;
    for (int b = 0; b < 400; b++) {
        double d = x[b] / my - mx * y[b] / (my * my);
        var += d * d;
    }
    double delta = std::sqrt(var / 400 / 399);
    EXPECT_NEAR(e.value, mx / my, 1e-14);
    EXPECT_NEAR(e.error / delta, 1.0, 0.05);
}

TEST(Jackknife, FlagsFewBlocks) {
    std::vector<std::vector<double>> sums = {{1}, {2}, {3}};
    auto e = jackknife(sums, {1, 1, 1}, {}, [](const std::vector<double> &m) { return m[0]; });
    EXPECT_TRUE(e.flagged);
    auto single = jackknife({{1}}, {1}, {}, [](const std::vector<double> &m) { return m[0]; });
    EXPECT_TRUE(single.flagged);
    EXPECT_TRUE(std::isnan(single.error));
    EXPECT_THROW(jackknife({}, {}, {}, [](const std::vector<double> &m) { return m[0]; }), std::invalid_argument);
}

TEST(BlockedMean, IidSeries) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(5, 2);
    std::vector<double> s(100000);
    for (double &v : s) {
        v = g(rng);
    }
    auto e = blocked_mean(s, 1000);
    EXPECT_NEAR(e.error, 2 / std::sqrt(100000.0), 0.25 * 2 / std::sqrt(100000.0));
    EXPECT_LT(std::fabs(e.value - 5), 4 * e.error);
    EXPECT_THROW(blocked_mean(s, 0), std::invalid_argument);
}

TEST(Seeds, SplitMixReferenceValue) {
    EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
    EXPECT_NE(derive_seed(7, 0), derive_seed(7, 1));
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

}  // namespace
