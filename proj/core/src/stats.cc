#include "tcdiag/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tcdiag {

Estimate jackknife(
    const std::vector<std::vector<double>> &block_sums,
    const std::vector<double> &block_counts,
    const std::vector<bool> &log_domain,
    const std::function<double(const std::vector<double> &)> &f) {
    size_t nb = block_sums.size();
    if (nb == 0 || nb != block_counts.size()) {
        throw std::invalid_argument("jackknife needs one count per block and at least one block");
    }
    size_t nk = block_sums[0].size();
    std::vector<double> shift(nk, 0);
    for (size_t k = 0; k < nk; k++) {
        if (k < log_domain.size() && log_domain[k]) {
            double m = -std::numeric_limits<double>::infinity();
            for (const auto &b : block_sums) {
                m = std::max(m, b[k]);
            }
            shift[k] = std::isinf(m) ? 0 : m;
        }
    }
    auto linear = [&](size_t b, size_t k) {
        bool lg = k < log_domain.size() && log_domain[k];
        return lg ? std::exp(block_sums[b][k] - shift[k]) : block_sums[b][k];
    };
    std::vector<double> total(nk, 0);
    double total_count = 0;
    for (size_t b = 0; b < nb; b++) {
        for (size_t k = 0; k < nk; k++) {
            total[k] += linear(b, k);
        }
        total_count += block_counts[b];
    }
    auto means_from = [&](const std::vector<double> &sums, double count) {
        std::vector<double> m(nk);
        for (size_t k = 0; k < nk; k++) {
            bool lg = k < log_domain.size() && log_domain[k];
            m[k] = lg ? std::log(sums[k] / count) + shift[k] : sums[k] / count;
        }
        return m;
    };
    Estimate est;
    est.value = f(means_from(total, total_count));
    if (nb < 2) {
        est.flagged = true;
        est.error = std::numeric_limits<double>::quiet_NaN();
        est.note = "single block";
        return est;
    }
    std::vector<double> loo(nb);
    double loo_mean = 0;
    for (size_t b = 0; b < nb; b++) {
        std::vector<double> sums = total;
        for (size_t k = 0; k < nk; k++) {
            sums[k] -= linear(b, k);
        }
        loo[b] = f(means_from(sums, total_count - block_counts[b]));
        loo_mean += loo[b];
    }
    loo_mean /= nb;
    double var = 0;
    for (double v : loo) {
        var += (v - loo_mean) * (v - loo_mean);
    }
    est.error = std::sqrt(var * (nb - 1) / nb);
    if ((int)nb < kMinJackknifeBlocks) {
        est.flagged = true;
        est.note = "fewer than " + std::to_string(kMinJackknifeBlocks) + " jackknife blocks";
    }
    return est;
}

Estimate blocked_mean(const std::vector<double> &series, size_t block_size) {
    if (block_size == 0 || series.size() < block_size) {
        throw std::invalid_argument("blocked_mean needs at least one full block");
    }
    size_t nb = series.size() / block_size;
    std::vector<std::vector<double>> sums(nb, std::vector<double>(1, 0));
    std::vector<double> counts(nb, (double)block_size);
    for (size_t b = 0; b < nb; b++) {
        for (size_t k = 0; k < block_size; k++) {
            sums[b][0] += series[b * block_size + k];
        }
    }
    return jackknife(sums, counts, {}, [](const std::vector<double> &m) { return m[0]; });
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t seed_base, uint64_t chain_index) {
    return splitmix64(splitmix64(seed_base) ^ (chain_index + 1) * 0xD1B54A32D192ED03ULL);
}

}  // namespace tcdiag
