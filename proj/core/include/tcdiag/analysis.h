#ifndef TCDIAG_ANALYSIS_H
#define TCDIAG_ANALYSIS_H

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tcdiag/spin_mc.h"
#include "tcdiag/stats.h"

namespace tcdiag {

/// One observable versus error rate at fixed system size.
struct Curve {
    double L = 0;
    std::vector<double> p;
    std::vector<double> value;
    std::vector<double> error;
};

struct PairCrossing {
    double L1 = 0;
    double L2 = 0;
    bool found = false;
    double p = 0;
    double error = 0;
};

struct CrossingResult {
    std::vector<PairCrossing> pairs;
    bool found = false;
    Estimate pooled;
    std::string note;
};

struct CrossingOptions {
    int bootstrap_samples = 200;
    uint64_t seed = 12345;
    /// Pairs whose sizes differ by less than this get weight small_pair_weight.
    double small_pair_gap = 8;
    double small_pair_weight = 0.5;
    int scan_points = 400;
};

/// Crossing of a single pair of curves in their common p window (monotone cubic interpolation plus
/// bracketed root finding). Among several sign changes the steepest is taken.
std::optional<double> curve_crossing(const Curve &a, const Curve &b, int scan_points = 400);

/// Pairwise crossings, inverse-variance pooled; errors from Gaussian resampling of every curve point.
CrossingResult binder_crossing(const std::vector<Curve> &curves, const CrossingOptions &options = {});

struct ScalingPoint {
    double L = 0;
    double p = 0;
    double binder = 0;
    double binder_error = 0;
    double m2 = 0;
    double m2_error = 0;
};

struct ScalingFit {
    double p_c = 0;
    double nu = 0;
    double beta = 0;
    /// binder_cost + magnetization_cost at the reported parameters.
    double collapse_cost = 0;
    double binder_cost = 0;
    double magnetization_cost = 0;
    double p_min = 0;
    double p_max = 0;
    std::vector<double> sizes;
    bool converged = false;
    std::string note;
    /// (p_c, nu, beta, cost) for each start of the simplex search; in staged mode the cost is the Binder part.
    std::vector<std::array<double, 4>> landscape;
};

struct CollapseOptions {
    /// Points taken on each side of x from every other size; 1 gives a linear fit, more a quadratic.
    int neighbors = 1;
    int max_iterations = 2000;
    double tolerance = 1e-7;
    std::vector<double> nu_starts = {0.6, 1.0, 1.5};
    std::vector<double> beta_starts = {0.05, 0.125};
    int p_c_starts = 5;
    bool fit_magnetization = true;
    /// Staged: (p_c, nu) from the Binder collapse alone, then beta from m^2 with those held fixed.
    /// Otherwise all three are fitted against the summed cost.
    bool staged = true;
};

/// Mean squared normalized residual of each point against a local fit through the points of the other
/// sizes that bracket its scaled abscissa. Points outside every other size's range are skipped.
/// which = 0: Binder ratio; which = 1: L^(2 beta / nu) m^2.
double collapse_cost(const std::vector<ScalingPoint> &data, double p_c, double nu, double beta, int which, int neighbors = 1);

/// Nelder-Mead from a grid of starts; see CollapseOptions::staged.
ScalingFit fss_collapse(const std::vector<ScalingPoint> &data, const CollapseOptions &options = {});

struct RegionEstimate {
    std::string name;
    Estimate e;
};

struct NegativityResult {
    std::vector<RegionEstimate> regions;
    /// Seven-term combination.
    Estimate gamma;
    /// -(2 E_A - 2 E_AC + E_ABC), exact only for symmetric tripartitions.
    Estimate gamma_simplified;
    std::string geometry;
};

/// Needs regions named A, B, C, AB, BC, AC, ABC; errors add in quadrature.
NegativityResult kitaev_preskill(const std::vector<RegionEstimate> &regions, const std::string &geometry = "");
/// Seven-term combination evaluated inside one jackknife, keeping the covariance of shared samples.
Estimate kitaev_preskill_jackknife(const MomentAccumulator &acc, int order, const std::vector<std::string> &names);

struct LinearFit {
    double slope = 0;
    double intercept = 0;
    double slope_error = 0;
    double intercept_error = 0;
    double r_squared = 0;
    double chi2 = 0;
};
/// Weighted least squares when errors are given (all positive), unweighted otherwise.
LinearFit linear_fit(const std::vector<double> &x, const std::vector<double> &y, const std::vector<double> &err = {});

/// Bootstrap standard error of statistic(resampled values).
Estimate bootstrap(
    const std::vector<double> &values,
    const std::function<double(const std::vector<double> &)> &statistic,
    int resamples,
    uint64_t seed);

/// Jackknife error of a smooth function of accumulator means; flagged when blocks are too few.
Estimate resample_errors(
    const MomentAccumulator &acc,
    const std::vector<std::string> &inputs,
    const std::function<double(const std::vector<double> &)> &f);

}  // namespace tcdiag

#endif
