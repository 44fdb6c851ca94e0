#ifndef TCDIAG_STATS_H
#define TCDIAG_STATS_H

#include <functional>
#include <string>
#include <vector>

namespace tcdiag {

struct Estimate {
    double value = 0;
    double error = 0;
    bool flagged = false;
    std::string note;
};

constexpr int kMinJackknifeBlocks = 10;

/// Delete-one jackknife of f(mean_1, ..., mean_K) over blocks.
/// block_sums[b][k] is the sum of observable k in block b; block_counts[b] the number of samples.
/// Observables flagged in log_domain hold log(sum exp(x)) per block and f receives log(mean exp(x)).
Estimate jackknife(
    const std::vector<std::vector<double>> &block_sums,
    const std::vector<double> &block_counts,
    const std::vector<bool> &log_domain,
    const std::function<double(const std::vector<double> &)> &f);

/// Standard error of the mean of a series, using consecutive blocks of the given size.
Estimate blocked_mean(const std::vector<double> &series, size_t block_size);

/// SplitMix64 finalizer.
uint64_t splitmix64(uint64_t x);
/// Per-chain seed derived from a base seed and chain index.
uint64_t derive_seed(uint64_t seed_base, uint64_t chain_index);

}  // namespace tcdiag

#endif
