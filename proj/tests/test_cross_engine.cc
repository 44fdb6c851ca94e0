#include <gtest/gtest.h>

#include <cmath>

#include "tcdiag/exact_oracle.h"
#include "tcdiag/loop_exact.h"
#include "tcdiag/regions.h"

using namespace tcdiag;

namespace {

const double kRates[] = {0, 0.05, 0.1, 0.178, 0.3, 0.45};

void expect_rel(double a, double b, double tol) {
    if (std::isinf(a) || std::isinf(b)) {
        EXPECT_EQ(a, b);
        return;
    }
    EXPECT_LE(std::fabs(a - b), tol * std::max(1.0, std::fabs(b))) << a << " vs " << b;
}

class CrossEngine : public ::testing::TestWithParam<int> {
   protected:
    ToricCode code = build_code(2);
};

TEST_P(CrossEngine, Moment) {
    int n = GetParam();
    auto rho0 = build_rho0(code, Rho0Variant::MaxMixedLogical);
    for (double p : kRates) {
        for (auto model : {ErrorModel(p, p), ErrorModel(p, 0), ErrorModel(0.5 * p, p)}) {
            auto rho = apply_channel(rho0, model);
            expect_rel(renyi_moment(rho, n), moment_via_loops(code, model, n), 1e-10);
        }
    }
}

TEST_P(CrossEngine, RelativeEntropy) {
    int n = GetParam();
    auto rho0 = build_rho0(code, Rho0Variant::MaxMixedLogical);
    for (double p : kRates) {
        ErrorModel model(p, p);
        auto rho = apply_channel(rho0, model);
        for (int target : {1, 2, 3}) {
            auto excited = apply_channel(conjugate(rho0, dual_string(code, 0, target)), model);
            expect_rel(renyi_relative_entropy(rho, excited, n), relative_entropy_via_loops(code, model, n, 0, target), 1e-10);
        }
    }
}

TEST_P(CrossEngine, CoherentInfo) {
    int n = GetParam();
    auto rq = build_rho0(code, Rho0Variant::BellWithReference);
    for (double p : kRates) {
        for (auto model : {ErrorModel(p, p), ErrorModel(p, 0.3 * p)}) {
            auto rho = apply_channel(rq, model);
            expect_rel(renyi_coherent_info(rho, n), coherent_info_via_defects(code, model, n), 1e-10);
        }
    }
}

TEST_P(CrossEngine, Negativity) {
    int n = GetParam();
    auto rho0 = build_rho0(code, Rho0Variant::MaxMixedLogical);
    std::vector<EdgeSet> regions = {
        block_region(code, 0, 0, 1, 1),
        EdgeSet::from_indices(code.N, {0, 4}),
        EdgeSet::from_indices(code.N, {0, 1, 4}),
    };
    for (double p : kRates) {
        for (auto model : {ErrorModel(0, p), ErrorModel(p, 0)}) {
            auto rho = apply_channel(rho0, model);
            for (const auto &a : regions) {
                expect_rel(renyi_negativity(rho, a, 2 * n), negativity_via_pinning(code, model, 2 * n, a), 1e-10);
            }
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Orders, CrossEngine, ::testing::Values(2, 3));

}  // namespace
