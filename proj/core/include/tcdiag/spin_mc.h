#ifndef TCDIAG_SPIN_MC_H
#define TCDIAG_SPIN_MC_H

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tcdiag/pauli_code.h"
#include "tcdiag/stats.h"

namespace tcdiag {

constexpr int kMaxFlavors = 7;

/// Single-spin acceptance: min(1, e^-dE) or the heat-bath probability 1 / (1 + e^dE).
enum class UpdateRule { Metropolis, HeatBath };

/// (n-1)-flavor Ising model on the L x L torus with Hamiltonian
///   H = -J sum_<ij> [ sum_s b^s_ij s^s_i s^s_j + B_ij pi_i pi_j ],  pi_i = prod_s s^s_i.
/// Site (r, c) has index r*L + c; bond k joins site k to its right neighbor and bond L^2 + k to the one below.
/// Spin bit s of spins[i] is set when s^s_i = -1.
struct SpinSystem {
    int L = 0;
    int flavors = 1;
    double J = 0;
    bool product_term = true;
    std::vector<uint8_t> spins;
    /// Bit s set: the flavor-s coupling of this bond is negated.
    std::vector<uint8_t> flavor_flip;
    /// Nonzero: the product coupling of this bond is negated.
    std::vector<uint8_t> product_flip;
    /// Sum of the +-1 bond terms; the energy is -J * bond_sum.
    long long bond_sum = 0;
    /// Neighbor sites and the bonds reaching them, four per site: right, down, left, up.
    std::vector<int> nbr;
    std::vector<int> nbr_bond;
    UpdateRule rule = UpdateRule::Metropolis;
    /// Acceptance of a flip with dE = 2 J t for t = -8..8, cached for (accept_J, accept_rule).
    double accept_J = -1;
    UpdateRule accept_rule = UpdateRule::Metropolis;
    std::array<double, 17> accept_table{};

    SpinSystem() = default;
    SpinSystem(int L, int flavors, double J, bool product_term = true);

    int num_sites() const {
        return L * L;
    }
    int num_bonds() const {
        return 2 * L * L;
    }
    std::array<int, 2> bond_sites(int bond) const;
    int spin(int site, int flavor) const {
        return ((spins[site] >> flavor) & 1) ? -1 : 1;
    }
    void set_spin(int site, int flavor, int value);
    void recompute();
    long long bond_sum_from_scratch() const;
    double energy() const;
};

/// Bond of the spin lattice dual to a code edge: the edge's own bond for X loops (spins on vertices),
/// the bond joining the two adjacent plaquettes for Z loops.
int spin_bond_of_edge(const ToricCode &code, LoopKind kind, int edge);

/// Boundary alignment constraints of a region, expressed on the spin lattice.
struct PinRegion {
    std::string name;
    /// Per cut cell: the spin pairs of the region edges inside that cell.
    std::vector<std::vector<std::array<int, 2>>> cells;
};
PinRegion make_pin_region(const ToricCode &code, LoopKind kind, const EdgeSet &region, const std::string &name);

/// Defect sector: entry s holds bit l when flavor s carries a seam along cycle l.
struct DefectProbe {
    std::string name;
    std::vector<uint8_t> sector;
    /// Bonds of the seam for cycles l = 0, 1.
    std::array<std::vector<int>, 2> seams;
};
DefectProbe make_defect_probe(
    const ToricCode &code, LoopKind kind, const std::vector<uint8_t> &sector, const std::string &name);

struct MCConfig {
    int L = 16;
    /// Renyi index; the model has n - 1 flavors.
    int n = 2;
    double p = 0.1;
    int sweeps_thermalize = 1000;
    int sweeps_measure = 10000;
    int measure_interval = 1;
    int chain_count = 1;
    uint64_t seed_base = 1;
    int blocks = 20;
    bool product_term = true;
    bool ordered_start = false;
    UpdateRule rule = UpdateRule::Metropolis;
    /// Replaces -log(1-2p)/2 when set (finite and >= 0).
    double coupling_override = -1;

    int flavors() const {
        return n - 1;
    }
    double coupling() const;
    void validate() const;
};

struct Observables {
    bool magnetization = true;
    bool energy = false;
    /// Two-point function of flavor 0 at displacement (dr, dc), averaged over all translations.
    std::vector<std::array<int, 2>> displacements;
    std::vector<PinRegion> pin_regions;
    std::vector<DefectProbe> defects;
};

/// Blocked sums of named observables. Names prefixed "log:" hold log(sum exp(x)) per block.
struct MomentAccumulator {
    std::vector<std::string> names;
    std::vector<std::vector<double>> block_sums;
    std::vector<double> block_counts;
    uint64_t samples = 0;
    uint64_t sweeps = 0;
    uint64_t seed = 0;
    int chain_id = 0;
    /// Number of indicator hits per pinning region, for undersampling checks.
    std::vector<uint64_t> pin_hits;

    int index(const std::string &name) const;
    bool has(const std::string &name) const {
        return index(name) >= 0;
    }
    double mean(const std::string &name) const;
    Estimate estimate(
        const std::vector<std::string> &inputs, const std::function<double(const std::vector<double> &)> &f) const;
    /// Appends the blocks of another accumulator with the same observables.
    void merge(const MomentAccumulator &other);
    bool operator==(const MomentAccumulator &other) const = default;
};

/// Streaming measurement state shared by the chain runners.
class Measurer {
   public:
    Measurer(const SpinSystem &sys, const Observables &obs, int blocks, uint64_t total_samples);
    void measure(const SpinSystem &sys);
    MomentAccumulator finish() &&;

   private:
    void add(int k, double v);
    void add_log(int k, double v);

    const Observables &obs_;
    MomentAccumulator acc_;
    uint64_t per_block_;
    uint64_t count_ = 0;
    int block_ = 0;
    std::vector<double> field_;
    std::vector<double> tanh_field_;
    std::vector<uint8_t> parity_;
};

/// One proposal per (site, flavor) in fixed order; returns the number of accepted flips.
uint64_t metropolis_sweep(SpinSystem &sys, std::mt19937_64 &rng);

SpinSystem initial_system(const MCConfig &config, std::mt19937_64 &rng);

MomentAccumulator run_chain(const MCConfig &config, const Observables &obs, int chain_index);
/// Runs config.chain_count chains (on up to `threads` workers) and merges them in chain order.
MomentAccumulator run_chains(
    const MCConfig &config,
    const Observables &obs,
    int threads = 1,
    const std::function<void(const MomentAccumulator &)> &on_chain = {});

/// Replica-exchange chain over a ladder of error rates (ascending); one accumulator per rate.
std::vector<MomentAccumulator> run_tempered_chain(
    const MCConfig &config, const std::vector<double> &p_ladder, const Observables &obs, int chain_index);

/// Random-bond Ising model on the Nishimori line: bonds flipped with probability p, J = log((1-p)/p)/2.
MomentAccumulator rbim_chain(const MCConfig &config, int chain_index);

Estimate binder_ratio(const MomentAccumulator &acc);
/// Binder ratio of the flavor-averaged magnetization.
Estimate binder_ratio_flavor_averaged(const MomentAccumulator &acc);
Estimate magnetization_squared(const MomentAccumulator &acc);

/// D^(n) = log<s_i s_j> / (1 - n); flagged +infinity for a nonpositive correlator, and flagged when the
/// correlator is within two standard errors of zero.
Estimate estimate_correlator(const MomentAccumulator &acc, int n, std::array<int, 2> displacement);
/// E^(2n) = -log P / (2n - 2); flagged +infinity without positive samples and flagged below 100.
Estimate estimate_pinning(const MomentAccumulator &acc, int order, const std::string &region_name);
constexpr double kMinEffectiveSamples = 100;
/// The exponential average behind dF is heavy-tailed; below this many effective samples its jackknife
/// error is not trustworthy.
constexpr double kMinDefectSamples = 1000;
/// (sum w)^2 / sum w^2 over the measured weights w = exp(-dE).
double defect_effective_samples(const MomentAccumulator &acc, const std::string &probe_name);
/// dF = -log <exp(-dE)>, with dE averaged over all translations of the seam. Flagged below
/// kMinDefectSamples effective samples, and when fewer samples than that had a seam placement of
/// nonpositive dE: the domain-wall configurations of the twisted sector were then never visited and the
/// value overestimates dF by up to the wall's position entropy.
Estimate estimate_defect_free_energy(const MomentAccumulator &acc, const std::string &probe_name);

std::string correlator_name(std::array<int, 2> displacement);

}  // namespace tcdiag

#endif
