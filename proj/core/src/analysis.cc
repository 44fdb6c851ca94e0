#include "tcdiag/analysis.h"

#include <gsl/gsl_fit.h>
#include <gsl/gsl_multimin.h>

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tcdiag {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Interpolant through (p, value) sorted by p: monotone cubic with four or more points, linear otherwise.
class Interpolant {
   public:
    explicit Interpolant(const Curve &c) {
        std::vector<size_t> order(c.p.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return c.p[a] < c.p[b]; });
        for (size_t k : order) {
            x_.push_back(c.p[k]);
            y_.push_back(c.value[k]);
        }
        for (size_t k = 1; k < x_.size(); k++) {
            if (!(x_[k] > x_[k - 1])) {
                throw std::invalid_argument("curve has repeated p values");
            }
        }
        if (x_.size() < 2) {
            throw std::invalid_argument("curve needs at least two points");
        }
        if (x_.size() >= 4) {
            auto xs = x_, ys = y_;
            spline_.emplace(std::move(xs), std::move(ys));
        }
    }
    double lo() const {
        return x_.front();
    }
    double hi() const {
        return x_.back();
    }
    double operator()(double x) const {
        x = std::clamp(x, lo(), hi());
        if (spline_) {
            return (*spline_)(x);
        }
        size_t k = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
        k = std::clamp<size_t>(k, 1, x_.size() - 1);
        double t = (x - x_[k - 1]) / (x_[k] - x_[k - 1]);
        return y_[k - 1] + t * (y_[k] - y_[k - 1]);
    }

   private:
    std::vector<double> x_, y_;
    std::optional<boost::math::interpolators::pchip<std::vector<double>>> spline_;
};

std::vector<std::pair<size_t, size_t>> size_pairs(const std::vector<Curve> &curves) {
    std::vector<std::pair<size_t, size_t>> out;
    for (size_t a = 0; a < curves.size(); a++) {
        for (size_t b = a + 1; b < curves.size(); b++) {
            out.push_back({a, b});
        }
    }
    return out;
}

double stddev(const std::vector<double> &v) {
    if (v.size() < 2) {
        return 0;
    }
    double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double s = 0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return std::sqrt(s / (v.size() - 1));
}

double pooled_value(const std::vector<std::optional<double>> &values, const std::vector<double> &weights) {
    double num = 0, den = 0;
    for (size_t k = 0; k < values.size(); k++) {
        if (values[k]) {
            num += weights[k] * *values[k];
            den += weights[k];
        }
    }
    return den > 0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::optional<double> curve_crossing(const Curve &a, const Curve &b, int scan_points) {
    Interpolant fa(a), fb(b);
    double lo = std::max(fa.lo(), fb.lo()), hi = std::min(fa.hi(), fb.hi());
    if (!(hi > lo) || scan_points < 2) {
        return std::nullopt;
    }
    auto d = [&](double x) { return fa(x) - fb(x); };
    std::vector<double> xs(scan_points), ds(scan_points);
    for (int k = 0; k < scan_points; k++) {
        xs[k] = lo + (hi - lo) * k / (scan_points - 1);
        ds[k] = d(xs[k]);
    }
    std::optional<double> best;
    double best_slope = -1;
    for (int k = 0; k + 1 < scan_points; k++) {
        bool change = (ds[k] < 0 && ds[k + 1] > 0) || (ds[k] > 0 && ds[k + 1] < 0);
        if (!change) {
            continue;
        }
        boost::uintmax_t iters = 100;
        auto bracket = boost::math::tools::toms748_solve(
            d, xs[k], xs[k + 1], ds[k], ds[k + 1], boost::math::tools::eps_tolerance<double>(50), iters);
        double root = 0.5 * (bracket.first + bracket.second);
        double slope = std::fabs(ds[k + 1] - ds[k]) / (xs[k + 1] - xs[k]);
        if (slope > best_slope) {
            best_slope = slope;
            best = root;
        }
    }
    return best;
}

CrossingResult binder_crossing(const std::vector<Curve> &curves, const CrossingOptions &options) {
    if (curves.size() < 2) {
        throw std::invalid_argument("binder_crossing needs at least two system sizes");
    }
    CrossingResult result;
    auto pairs = size_pairs(curves);
    std::vector<std::optional<double>> central;
    for (auto [a, b] : pairs) {
        central.push_back(curve_crossing(curves[a], curves[b], options.scan_points));
    }
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> pair_samples(pairs.size());
    std::vector<std::vector<std::optional<double>>> sample_sets;
    for (int s = 0; s < options.bootstrap_samples; s++) {
        std::vector<Curve> resampled = curves;
        for (auto &c : resampled) {
            for (size_t k = 0; k < c.value.size(); k++) {
                double e = k < c.error.size() ? c.error[k] : 0;
                c.value[k] += e * gauss(rng);
            }
        }
        std::vector<std::optional<double>> set;
        for (size_t q = 0; q < pairs.size(); q++) {
            std::optional<double> x;
            if (central[q]) {
                x = curve_crossing(resampled[pairs[q].first], resampled[pairs[q].second], options.scan_points);
                if (x) {
                    pair_samples[q].push_back(*x);
                }
            }
            set.push_back(x);
        }
        sample_sets.push_back(set);
    }
    std::vector<double> weights(pairs.size(), 0);
    for (size_t q = 0; q < pairs.size(); q++) {
        PairCrossing pc;
        pc.L1 = curves[pairs[q].first].L;
        pc.L2 = curves[pairs[q].second].L;
        pc.found = central[q].has_value();
        if (pc.found) {
            pc.p = *central[q];
            pc.error = stddev(pair_samples[q]);
            double e = std::max(pc.error, 1e-12);
            weights[q] = 1 / (e * e);
            if (std::fabs(pc.L1 - pc.L2) < options.small_pair_gap) {
                weights[q] *= options.small_pair_weight;
            }
        }
        result.pairs.push_back(pc);
    }
    result.found = std::any_of(central.begin(), central.end(), [](auto &x) { return x.has_value(); });
    if (!result.found) {
        result.note = "no bracketed crossing in the common window";
        result.pooled = {std::numeric_limits<double>::quiet_NaN(), 0, true, result.note};
        return result;
    }
    result.pooled.value = pooled_value(central, weights);
    std::vector<double> pooled_samples;
    for (const auto &set : sample_sets) {
        double v = pooled_value(set, weights);
        if (std::isfinite(v)) {
            pooled_samples.push_back(v);
        }
    }
    result.pooled.error = stddev(pooled_samples);
    size_t missing = 0;
    for (size_t q = 0; q < pairs.size(); q++) {
        if (!central[q]) {
            missing++;
        }
    }
    if (missing) {
        result.note = std::to_string(missing) + " of " + std::to_string(pairs.size()) + " pairs have no crossing";
        result.pooled.note = result.note;
    }
    return result;
}

double collapse_cost(const std::vector<ScalingPoint> &data, double p_c, double nu, double beta, int which, int neighbors) {
    size_t n = data.size();
    std::vector<double> x(n), y(n), s(n);
    for (size_t i = 0; i < n; i++) {
        const auto &d = data[i];
        x[i] = (d.p - p_c) * std::pow(d.L, 1 / nu);
        if (which == 0) {
            y[i] = d.binder;
            s[i] = d.binder_error;
        } else {
            double scale = std::pow(d.L, 2 * beta / nu);
            y[i] = d.m2 * scale;
            s[i] = d.m2_error * scale;
        }
        s[i] = std::max(s[i], 1e-9 * std::fabs(y[i]) + 1e-15);
    }
    std::map<double, std::vector<size_t>> by_size;
    for (size_t i = 0; i < n; i++) {
        by_size[data[i].L].push_back(i);
    }
    for (auto &[size, idx] : by_size) {
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
    }
    int degree = neighbors > 1 ? 2 : 1;
    double total = 0;
    int used = 0;
    std::vector<size_t> near;
    for (size_t i = 0; i < n; i++) {
        near.clear();
        for (const auto &[size, idx] : by_size) {
            if (size == data[i].L || x[idx.front()] > x[i] || x[idx.back()] < x[i]) {
                continue;
            }
            size_t hi = std::lower_bound(idx.begin(), idx.end(), x[i], [&](size_t a, double v) { return x[a] < v; }) -
                        idx.begin();
            size_t lo = hi > 0 ? hi - 1 : 0;
            if (hi < idx.size() && x[idx[hi]] == x[i]) {
                lo = hi;
            }
            size_t from = lo >= (size_t)neighbors - 1 ? lo - (neighbors - 1) : 0;
            size_t to = std::min(idx.size(), hi + neighbors);
            for (size_t q = from; q < to; q++) {
                near.push_back(idx[q]);
            }
        }
        int terms = (int)near.size() > degree + 1 ? degree + 1 : 2;
        if ((int)near.size() < terms) {
            continue;
        }
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(terms, terms);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(terms);
        for (size_t j : near) {
            double u = x[j] - x[i];
            double w = 1 / (s[j] * s[j]);
            Eigen::VectorXd v(terms);
            for (int t = 0; t < terms; t++) {
                v(t) = std::pow(u, t);
            }
            A += w * v * v.transpose();
            rhs += w * v * y[j];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (!lu.isInvertible()) {
            continue;
        }
        Eigen::VectorXd coef = lu.solve(rhs);
        double var_fit = lu.inverse()(0, 0);
        double r = y[i] - coef(0);
        total += r * r / (s[i] * s[i] + var_fit);
        used++;
    }
    if (used == 0) {
        return kInf;
    }
    // Dropping points by shrinking the overlap must not lower the cost.
    return total / used * ((double)n / used);
}

namespace {

struct CollapseProblem {
    const std::vector<ScalingPoint> *data;
    const CollapseOptions *options;
    double p_min, p_max;
    /// 0: all three parameters against both observables; 1: (p_c, nu) against B; 2: beta against m^2.
    int stage;
    double p_c, nu;
};

double collapse_objective(const gsl_vector *v, void *params) {
    auto *prob = static_cast<CollapseProblem *>(params);
    double p_c = prob->p_c, nu = prob->nu, beta = 0;
    if (prob->stage == 2) {
        beta = gsl_vector_get(v, 0);
    } else {
        p_c = gsl_vector_get(v, 0);
        nu = std::exp(gsl_vector_get(v, 1));
        beta = prob->stage == 0 ? gsl_vector_get(v, 2) : 0.0;
    }
    double penalty = 0;
    if (p_c < prob->p_min) {
        penalty += 1e4 * (prob->p_min - p_c);
    }
    if (p_c > prob->p_max) {
        penalty += 1e4 * (p_c - prob->p_max);
    }
    if (!(nu > 0.05 && nu < 20)) {
        return 1e12;
    }
    double c = 0;
    if (prob->stage != 2) {
        c += collapse_cost(*prob->data, p_c, nu, beta, 0, prob->options->neighbors);
    }
    if (prob->stage != 1) {
        c += collapse_cost(*prob->data, p_c, nu, beta, 1, prob->options->neighbors);
    }
    if (!std::isfinite(c)) {
        return 1e12;
    }
    return c + penalty;
}

struct SimplexResult {
    std::vector<double> x;
    double cost;
    bool converged;
};

SimplexResult simplex(CollapseProblem &prob, const std::vector<double> &start, const std::vector<double> &steps) {
    size_t dim = start.size();
    gsl_multimin_function fn{&collapse_objective, dim, &prob};
    gsl_vector *x = gsl_vector_alloc(dim);
    gsl_vector *step = gsl_vector_alloc(dim);
    for (size_t k = 0; k < dim; k++) {
        gsl_vector_set(x, k, start[k]);
        gsl_vector_set(step, k, steps[k]);
    }
    gsl_multimin_fminimizer *minimizer = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
    gsl_multimin_fminimizer_set(minimizer, &fn, x, step);
    int status = GSL_CONTINUE;
    for (int iter = 0; status == GSL_CONTINUE && iter < prob.options->max_iterations; iter++) {
        if (gsl_multimin_fminimizer_iterate(minimizer)) {
            break;
        }
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(minimizer), prob.options->tolerance);
    }
    SimplexResult r{std::vector<double>(dim), minimizer->fval, status == GSL_SUCCESS};
    for (size_t k = 0; k < dim; k++) {
        r.x[k] = gsl_vector_get(gsl_multimin_fminimizer_x(minimizer), k);
    }
    gsl_multimin_fminimizer_free(minimizer);
    gsl_vector_free(x);
    gsl_vector_free(step);
    return r;
}

}  // namespace

ScalingFit fss_collapse(const std::vector<ScalingPoint> &data, const CollapseOptions &options) {
    std::vector<double> sizes;
    for (const auto &d : data) {
        if (std::find(sizes.begin(), sizes.end(), d.L) == sizes.end()) {
            sizes.push_back(d.L);
        }
    }
    std::sort(sizes.begin(), sizes.end());
    if (sizes.size() < 3) {
        throw std::invalid_argument("finite-size collapse needs at least three system sizes");
    }
    ScalingFit best;
    best.collapse_cost = kInf;
    best.sizes = sizes;
    best.p_min = kInf;
    best.p_max = -kInf;
    for (const auto &d : data) {
        best.p_min = std::min(best.p_min, d.p);
        best.p_max = std::max(best.p_max, d.p);
    }
    double width = best.p_max - best.p_min;
    CollapseProblem prob{&data, &options, best.p_min, best.p_max, options.staged ? 1 : 0, 0, 0};
    bool fit_beta = !options.staged || options.fit_magnetization;
    if (options.staged) {
        best.beta = std::nan("");
    }
    for (int a = 0; a < options.p_c_starts; a++) {
        double p0 = best.p_min + width * (a + 1) / (options.p_c_starts + 1);
        for (double nu0 : options.nu_starts) {
            std::vector<double> betas = options.staged ? std::vector<double>{0.0} : options.beta_starts;
            for (double beta0 : betas) {
                std::vector<double> start = {p0, std::log(nu0)}, steps = {width / 10, 0.2};
                if (!options.staged) {
                    start.push_back(beta0);
                    steps.push_back(0.02);
                }
                auto r = simplex(prob, start, steps);
                double pc = r.x[0], nu = std::exp(r.x[1]), beta = options.staged ? best.beta : r.x[2];
                best.landscape.push_back({pc, nu, beta, r.cost});
                if (r.cost < best.collapse_cost) {
                    best.collapse_cost = r.cost;
                    best.p_c = pc;
                    best.nu = nu;
                    best.beta = beta;
                    best.converged = r.converged;
                }
            }
        }
    }
    best.binder_cost = collapse_cost(data, best.p_c, best.nu, 0.0, 0, options.neighbors);
    if (options.staged && fit_beta) {
        CollapseProblem second{&data, &options, best.p_min, best.p_max, 2, best.p_c, best.nu};
        double best_m = kInf;
        for (double beta0 : options.beta_starts) {
            auto r = simplex(second, {beta0}, {0.02});
            if (r.cost < best_m) {
                best_m = r.cost;
                best.beta = r.x[0];
                best.converged = best.converged && r.converged;
            }
        }
        for (auto &l : best.landscape) {
            l[2] = best.beta;
        }
    }
    if (fit_beta) {
        best.magnetization_cost = collapse_cost(data, best.p_c, best.nu, best.beta, 1, options.neighbors);
        best.collapse_cost = best.binder_cost + best.magnetization_cost;
    }
    if (!best.converged) {
        best.note = "simplex search hit the iteration cap";
    }
    if (best.p_c < best.p_min || best.p_c > best.p_max) {
        best.converged = false;
        best.note = "p_c outside the data window";
    }
    return best;
}

NegativityResult kitaev_preskill(const std::vector<RegionEstimate> &regions, const std::string &geometry) {
    std::map<std::string, Estimate> by_name;
    for (const auto &r : regions) {
        by_name[r.name] = r.e;
    }
    for (const char *name : {"A", "B", "C", "AB", "BC", "AC", "ABC"}) {
        if (!by_name.count(name)) {
            throw std::invalid_argument(std::string("Kitaev-Preskill combination is missing region ") + name);
        }
    }
    if (by_name.size() != 7) {
        throw std::invalid_argument("Kitaev-Preskill combination expects exactly the seven regions");
    }
    auto combine = [&](const std::vector<std::pair<const char *, double>> &terms) {
        Estimate out;
        double var = 0;
        for (auto [name, coef] : terms) {
            const Estimate &e = by_name[name];
            out.value -= coef * e.value;
            var += coef * coef * e.error * e.error;
            if (e.flagged) {
                out.flagged = true;
                out.note = std::string("region ") + name + " flagged: " + e.note;
            }
        }
        out.error = std::sqrt(var);
        return out;
    };
    NegativityResult result;
    result.regions = regions;
    result.geometry = geometry;
    result.gamma = combine({{"A", 1}, {"B", 1}, {"C", 1}, {"AB", -1}, {"BC", -1}, {"AC", -1}, {"ABC", 1}});
    result.gamma_simplified = combine({{"A", 2}, {"AC", -2}, {"ABC", 1}});
    return result;
}

Estimate kitaev_preskill_jackknife(const MomentAccumulator &acc, int order, const std::vector<std::string> &names) {
    if (names.size() != 7) {
        throw std::invalid_argument("Kitaev-Preskill jackknife expects seven region names in the order A..ABC");
    }
    std::vector<std::string> inputs;
    for (const auto &n : names) {
        inputs.push_back("pin:" + n);
    }
    const double coef[7] = {1, 1, 1, -1, -1, -1, 1};
    return acc.estimate(inputs, [&](const std::vector<double> &m) {
        double g = 0;
        for (int k = 0; k < 7; k++) {
            if (!(m[k] > 0)) {
                return std::numeric_limits<double>::quiet_NaN();
            }
            g -= coef[k] * -std::log(m[k]) / (order - 2);
        }
        return g;
    });
}

LinearFit linear_fit(const std::vector<double> &x, const std::vector<double> &y, const std::vector<double> &err) {
    size_t n = x.size();
    if (n < 2 || y.size() != n) {
        throw std::invalid_argument("linear fit needs at least two (x, y) pairs");
    }
    LinearFit fit;
    double c00, c01, c11;
    bool weighted = err.size() == n && std::all_of(err.begin(), err.end(), [](double e) { return e > 0; });
    std::vector<double> w(n, 1.0);
    if (weighted) {
        for (size_t k = 0; k < n; k++) {
            w[k] = 1 / (err[k] * err[k]);
        }
        gsl_fit_wlinear(x.data(), 1, w.data(), 1, y.data(), 1, n, &fit.intercept, &fit.slope, &c00, &c01, &c11, &fit.chi2);
    } else {
        gsl_fit_linear(x.data(), 1, y.data(), 1, n, &fit.intercept, &fit.slope, &c00, &c01, &c11, &fit.chi2);
    }
    fit.intercept_error = std::sqrt(c00);
    fit.slope_error = std::sqrt(c11);
    double wsum = 0, ymean = 0;
    for (size_t k = 0; k < n; k++) {
        wsum += w[k];
        ymean += w[k] * y[k];
    }
    ymean /= wsum;
    double ss_tot = 0, ss_res = 0;
    for (size_t k = 0; k < n; k++) {
        double r = y[k] - (fit.intercept + fit.slope * x[k]);
        ss_res += w[k] * r * r;
        ss_tot += w[k] * (y[k] - ymean) * (y[k] - ymean);
    }
    fit.r_squared = ss_tot > 0 ? 1 - ss_res / ss_tot : 1;
    return fit;
}

Estimate bootstrap(
    const std::vector<double> &values,
    const std::function<double(const std::vector<double> &)> &statistic,
    int resamples,
    uint64_t seed) {
    if (values.empty() || resamples < 2) {
        throw std::invalid_argument("bootstrap needs data and at least two resamples");
    }
    Estimate e;
    e.value = statistic(values);
    std::mt19937_64 rng(seed);
    std::vector<double> stats, sample(values.size());
    for (int r = 0; r < resamples; r++) {
        for (auto &s : sample) {
            s = values[rng() % values.size()];
        }
        stats.push_back(statistic(sample));
    }
    e.error = stddev(stats);
    return e;
}

Estimate resample_errors(
    const MomentAccumulator &acc,
    const std::vector<std::string> &inputs,
    const std::function<double(const std::vector<double> &)> &f) {
    return acc.estimate(inputs, f);
}

}  // namespace tcdiag
