#include "tcdiag/spin_mc.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "tcdiag/error_model.h"
#include "tcdiag/regions.h"

namespace tcdiag {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double uniform01(std::mt19937_64 &rng) {
    return (double)(rng() >> 11) * 0x1p-53;
}

inline int parity8(unsigned v) {
    return std::popcount(v) & 1;
}

void refresh_table(SpinSystem &sys) {
    if (sys.accept_J == sys.J && sys.accept_rule == sys.rule) {
        return;
    }
    for (int t = -8; t <= 8; t++) {
        double x = 2.0 * sys.J * t;
        if (sys.rule == UpdateRule::Metropolis) {
            sys.accept_table[t + 8] = t <= 0 ? 1.0 : std::exp(-x);
        } else if (t == 0) {
            sys.accept_table[t + 8] = 0.5;
        } else {
            sys.accept_table[t + 8] = t < 0 ? 1 / (1 + std::exp(x)) : std::exp(-x) / (1 + std::exp(-x));
        }
    }
    sys.accept_J = sys.J;
    sys.accept_rule = sys.rule;
}

/// log cosh(x) without overflow.
double log_cosh(double x) {
    double a = std::fabs(x);
    return a + std::log1p(std::exp(-2 * a)) - std::log(2.0);
}

}  // namespace

SpinSystem::SpinSystem(int L_, int flavors_, double J_, bool product_term_)
    : L(L_), flavors(flavors_), J(J_), product_term(product_term_) {
    if (L < 2) {
        throw std::invalid_argument("spin lattice needs L >= 2");
    }
    if (flavors < 1 || flavors > kMaxFlavors) {
        throw std::invalid_argument("flavor count must be in [1, " + std::to_string(kMaxFlavors) + "]");
    }
    if (!(J >= 0)) {
        throw std::invalid_argument("coupling must be nonnegative");
    }
    int n = L * L;
    spins.assign(n, 0);
    flavor_flip.assign(2 * n, 0);
    product_flip.assign(2 * n, 0);
    nbr.resize(4 * n);
    nbr_bond.resize(4 * n);
    for (int r = 0; r < L; r++) {
        for (int c = 0; c < L; c++) {
            int k = r * L + c;
            int right = r * L + (c + 1) % L;
            int down = ((r + 1) % L) * L + c;
            int left = r * L + (c + L - 1) % L;
            int up = ((r + L - 1) % L) * L + c;
            nbr[4 * k + 0] = right;
            nbr_bond[4 * k + 0] = k;
            nbr[4 * k + 1] = down;
            nbr_bond[4 * k + 1] = n + k;
            nbr[4 * k + 2] = left;
            nbr_bond[4 * k + 2] = left;
            nbr[4 * k + 3] = up;
            nbr_bond[4 * k + 3] = n + up;
        }
    }
    recompute();
}

std::array<int, 2> SpinSystem::bond_sites(int bond) const {
    int n = L * L;
    int k = bond % n;
    int r = k / L, c = k % L;
    if (bond < n) {
        return {k, r * L + (c + 1) % L};
    }
    return {k, ((r + 1) % L) * L + c};
}

void SpinSystem::set_spin(int site, int flavor, int value) {
    uint8_t bit = uint8_t(1u << flavor);
    if (value < 0) {
        spins[site] |= bit;
    } else {
        spins[site] &= uint8_t(~bit);
    }
}

long long SpinSystem::bond_sum_from_scratch() const {
    long long total = 0;
    uint8_t all = uint8_t((1u << flavors) - 1);
    for (int b = 0; b < num_bonds(); b++) {
        auto [i, j] = bond_sites(b);
        uint8_t d = (spins[i] ^ spins[j] ^ flavor_flip[b]) & all;
        total += flavors - 2 * std::popcount((unsigned)d);
        if (product_term) {
            total += (parity8(spins[i] ^ spins[j]) ^ (product_flip[b] != 0)) ? -1 : 1;
        }
    }
    return total;
}

void SpinSystem::recompute() {
    bond_sum = bond_sum_from_scratch();
}

double SpinSystem::energy() const {
    if (std::isinf(J)) {
        return bond_sum == (long long)num_bonds() * (flavors + (product_term ? 1 : 0)) ? -kInf : kInf;
    }
    return -J * (double)bond_sum;
}

int spin_bond_of_edge(const ToricCode &code, LoopKind kind, int edge) {
    int L = code.L, n = L * L;
    if (edge < 0 || edge >= code.N) {
        throw std::out_of_range("edge index out of range");
    }
    if (kind == LoopKind::X) {
        return edge;
    }
    int k = edge % n;
    int r = k / L, c = k % L;
    if (edge < n) {
        return n + code.site(r - 1, c);
    }
    return code.site(r, c - 1);
}

PinRegion make_pin_region(const ToricCode &code, LoopKind kind, const EdgeSet &region, const std::string &name) {
    PinRegion out{name, {}};
    auto cells = code.constraint_cells(kind);
    for (int c : cut_cells(code, kind, region)) {
        std::vector<std::array<int, 2>> pairs;
        for (int e : (cells[c] & region).indices()) {
            pairs.push_back(edge_spins(code, kind, e));
        }
        out.cells.push_back(pairs);
    }
    return out;
}

DefectProbe make_defect_probe(
    const ToricCode &code, LoopKind kind, const std::vector<uint8_t> &sector, const std::string &name) {
    DefectProbe probe{name, sector, {}};
    auto logicals = code.logical_supports(kind);
    for (int l = 0; l < 2; l++) {
        for (int e : logicals[l].indices()) {
            probe.seams[l].push_back(spin_bond_of_edge(code, kind, e));
        }
    }
    return probe;
}

double MCConfig::coupling() const {
    if (coupling_override >= 0) {
        return coupling_override;
    }
    return tension_from_rate(p) / 2;
}

void MCConfig::validate() const {
    if (L < 2) {
        throw std::invalid_argument("mc.L must be >= 2");
    }
    if (n < 2 || n - 1 > kMaxFlavors) {
        throw std::invalid_argument("mc.n must be in [2, " + std::to_string(kMaxFlavors + 1) + "]");
    }
    if (!(p >= 0 && p <= 0.5)) {
        throw std::invalid_argument("mc.p must lie in [0, 1/2]");
    }
    if (sweeps_thermalize < 0 || sweeps_measure <= 0 || measure_interval <= 0 || chain_count <= 0 || blocks <= 0) {
        throw std::invalid_argument("mc sweep, interval, chain and block counts must be positive");
    }
    if (sweeps_measure / measure_interval < blocks) {
        throw std::invalid_argument("mc needs at least one measurement per block");
    }
}

int MomentAccumulator::index(const std::string &name) const {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : (int)(it - names.begin());
}

double MomentAccumulator::mean(const std::string &name) const {
    return estimate({name}, [](const std::vector<double> &m) { return m[0]; }).value;
}

Estimate MomentAccumulator::estimate(
    const std::vector<std::string> &inputs, const std::function<double(const std::vector<double> &)> &f) const {
    std::vector<int> idx;
    std::vector<bool> log_domain;
    for (const auto &name : inputs) {
        int k = index(name);
        if (k < 0) {
            throw std::invalid_argument("accumulator has no observable named " + name);
        }
        idx.push_back(k);
        log_domain.push_back(name.rfind("log:", 0) == 0);
    }
    std::vector<std::vector<double>> sums;
    for (const auto &block : block_sums) {
        std::vector<double> row;
        for (int k : idx) {
            row.push_back(block[k]);
        }
        sums.push_back(row);
    }
    return jackknife(sums, block_counts, log_domain, f);
}

void MomentAccumulator::merge(const MomentAccumulator &other) {
    if (names.empty() && block_sums.empty()) {
        *this = other;
        return;
    }
    if (names != other.names) {
        throw std::invalid_argument("cannot merge accumulators with different observables");
    }
    block_sums.insert(block_sums.end(), other.block_sums.begin(), other.block_sums.end());
    block_counts.insert(block_counts.end(), other.block_counts.begin(), other.block_counts.end());
    samples += other.samples;
    sweeps += other.sweeps;
    for (size_t k = 0; k < pin_hits.size() && k < other.pin_hits.size(); k++) {
        pin_hits[k] += other.pin_hits[k];
    }
}

std::string correlator_name(std::array<int, 2> d) {
    return "corr:" + std::to_string(d[0]) + "," + std::to_string(d[1]);
}

Measurer::Measurer(const SpinSystem &sys, const Observables &obs, int blocks, uint64_t total_samples) : obs_(obs) {
    if (total_samples == 0 || blocks <= 0) {
        throw std::invalid_argument("measurer needs samples and blocks");
    }
    per_block_ = (total_samples + blocks - 1) / blocks;
    auto &n = acc_.names;
    if (obs.magnetization) {
        for (const char *k : {"m2", "m4", "m2fa", "m4fa", "mfa", "absmfa"}) {
            n.push_back(k);
        }
    }
    if (obs.energy) {
        n.push_back("energy");
    }
    for (auto d : obs.displacements) {
        n.push_back(correlator_name(d));
        n.push_back("naive:" + correlator_name(d));
    }
    for (const auto &pin : obs.pin_regions) {
        n.push_back("pin:" + pin.name);
    }
    for (const auto &probe : obs.defects) {
        n.push_back("log:defect:" + probe.name);
        n.push_back("log:defect2:" + probe.name);
        n.push_back("defect_reach:" + probe.name);
    }
    acc_.pin_hits.assign(obs.pin_regions.size(), 0);
    field_.resize(sys.num_sites());
    tanh_field_.resize(sys.num_sites());
    parity_.resize(sys.num_sites());
}

void Measurer::add(int k, double v) {
    acc_.block_sums[block_][k] += v;
}

void Measurer::add_log(int k, double v) {
    double &slot = acc_.block_sums[block_][k];
    if (std::isinf(slot) && slot < 0) {
        slot = v;
    } else {
        double hi = std::max(slot, v), lo = std::min(slot, v);
        slot = hi + std::log1p(std::exp(lo - hi));
    }
}

void Measurer::measure(const SpinSystem &sys) {
    if (count_ == 0 || count_ % per_block_ == 0) {
        if (count_ > 0) {
            block_++;
        }
        std::vector<double> row(acc_.names.size(), 0.0);
        for (size_t k = 0; k < acc_.names.size(); k++) {
            if (acc_.names[k].rfind("log:", 0) == 0) {
                row[k] = -kInf;
            }
        }
        acc_.block_sums.push_back(row);
        acc_.block_counts.push_back(0);
    }
    count_++;
    acc_.block_counts[block_] += 1;
    acc_.samples++;

    int ns = sys.num_sites();
    int k = 0;
    if (obs_.magnetization) {
        std::array<long, kMaxFlavors> sum{};
        for (int i = 0; i < ns; i++) {
            uint8_t m = sys.spins[i];
            for (int s = 0; s < sys.flavors; s++) {
                sum[s] += ((m >> s) & 1) ? -1 : 1;
            }
        }
        double m2 = 0, m4 = 0, mfa = 0;
        for (int s = 0; s < sys.flavors; s++) {
            double ms = (double)sum[s] / ns;
            m2 += ms * ms;
            m4 += ms * ms * ms * ms;
            mfa += ms;
        }
        m2 /= sys.flavors;
        m4 /= sys.flavors;
        mfa /= sys.flavors;
        add(k++, m2);
        add(k++, m4);
        add(k++, mfa * mfa);
        add(k++, mfa * mfa * mfa * mfa);
        add(k++, mfa);
        add(k++, std::fabs(mfa));
    }
    if (obs_.energy) {
        add(k++, sys.energy() / ns);
    }
    if (!obs_.displacements.empty()) {
        for (int i = 0; i < ns; i++) {
            parity_[i] = (uint8_t)parity8(sys.spins[i]);
        }
        for (int i = 0; i < ns; i++) {
            double h = 0;
            int rho_i = (parity_[i] ^ (sys.spins[i] & 1)) ? -1 : 1;
            for (int q = 0; q < 4; q++) {
                int j = sys.nbr[4 * i + q], b = sys.nbr_bond[4 * i + q];
                int bj = (sys.flavor_flip[b] & 1) ? -1 : 1;
                h += bj * sys.spin(j, 0);
                if (sys.product_term) {
                    int bp = sys.product_flip[b] ? -1 : 1;
                    h += bp * rho_i * (parity_[j] ? -1 : 1);
                }
            }
            field_[i] = sys.J * h;
            tanh_field_[i] = std::tanh(field_[i]);
        }
        int L = sys.L;
        for (auto d : obs_.displacements) {
            double improved = 0, naive = 0;
            for (int i = 0; i < ns; i++) {
                int r = i / L, c = i % L;
                int j = ((r + d[0]) % L + L) % L * L + ((c + d[1]) % L + L) % L;
                naive += sys.spin(i, 0) * sys.spin(j, 0);
                double K = 0;
                int rho_i = (parity_[i] ^ (sys.spins[i] & 1)) ? -1 : 1;
                int rho_j = (parity_[j] ^ (sys.spins[j] & 1)) ? -1 : 1;
                bool adjacent = false;
                for (int q = 0; q < 4; q++) {
                    if (sys.nbr[4 * i + q] != j) {
                        continue;
                    }
                    adjacent = true;
                    int b = sys.nbr_bond[4 * i + q];
                    double term = (sys.flavor_flip[b] & 1) ? -1 : 1;
                    if (sys.product_term) {
                        term += (sys.product_flip[b] ? -1 : 1) * rho_i * rho_j;
                    }
                    K += sys.J * term;
                }
                if (i == j) {
                    improved += 1;
                } else if (!adjacent) {
                    improved += tanh_field_[i] * tanh_field_[j];
                } else {
                    double a = field_[i] - K * sys.spin(j, 0);
                    double b = field_[j] - K * sys.spin(i, 0);
                    double q = std::exp(-2 * K + log_cosh(a - b) - log_cosh(a + b));
                    improved += (1 - q) / (1 + q);
                }
            }
            add(k++, improved / ns);
            add(k++, naive / ns);
        }
    }
    for (size_t r = 0; r < obs_.pin_regions.size(); r++) {
        uint8_t all = uint8_t((1u << sys.flavors) - 1);
        bool ok = true;
        for (const auto &cell : obs_.pin_regions[r].cells) {
            uint8_t x = 0;
            for (auto [i, j] : cell) {
                uint8_t ti = (parity8(sys.spins[i]) ? all : 0) ^ sys.spins[i];
                uint8_t tj = (parity8(sys.spins[j]) ? all : 0) ^ sys.spins[j];
                x ^= ti ^ tj;
            }
            if (x & all) {
                ok = false;
                break;
            }
        }
        if (ok) {
            acc_.pin_hits[r]++;
        }
        add(k++, ok ? 1.0 : 0.0);
    }
    int L = sys.L;
    auto shift_bond = [&](int b, int q) {
        int n = L * L, k = b % n;
        int r = (k / L + q) % L, c = (k % L + q) % L;
        return (b >= n ? n : 0) + r * L + c;
    };
    for (const auto &probe : obs_.defects) {
        // Seam energy change averaged over all L parallel placements of each cycle's seam.
        double log_w = 0;
        bool reached = true;
        for (int l = 0; l < 2; l++) {
            uint8_t fmask = 0;
            for (size_t s = 0; s < probe.sector.size(); s++) {
                if ((probe.sector[s] >> l) & 1) {
                    fmask |= uint8_t(1u << s);
                }
            }
            if (!fmask) {
                continue;
            }
            bool prod = parity8(fmask);
            double hi = -kInf, acc = 0;
            std::vector<double> terms(L);
            for (int q = 0; q < L; q++) {
                long t = 0;
                for (int b0 : probe.seams[l]) {
                    int b = shift_bond(b0, q);
                    auto [i, j] = sys.bond_sites(b);
                    uint8_t d = (sys.spins[i] ^ sys.spins[j] ^ sys.flavor_flip[b]) & fmask;
                    t += std::popcount(fmask) - 2 * std::popcount((unsigned)d);
                    if (prod && sys.product_term) {
                        t += (parity8(sys.spins[i] ^ sys.spins[j]) ^ (sys.product_flip[b] != 0)) ? -1 : 1;
                    }
                }
                terms[q] = -2.0 * sys.J * (double)t;
                hi = std::max(hi, terms[q]);
            }
            for (double x : terms) {
                acc += std::exp(x - hi);
            }
            log_w += hi + std::log(acc / L);
            reached &= hi >= 0;
        }
        add_log(k++, log_w);
        add_log(k++, 2 * log_w);
        add(k++, reached ? 1.0 : 0.0);
    }
}

MomentAccumulator Measurer::finish() && {
    return std::move(acc_);
}

uint64_t metropolis_sweep(SpinSystem &sys, std::mt19937_64 &rng) {
    refresh_table(sys);
    static constexpr auto parity = [] {
        std::array<int8_t, 256> t{};
        for (int v = 0; v < 256; v++) {
            t[v] = (int8_t)(std::popcount((unsigned)v) & 1);
        }
        return t;
    }();
    uint64_t accepted = 0;
    int ns = sys.num_sites();
    const int *nb = sys.nbr.data();
    const int *nbb = sys.nbr_bond.data();
    uint8_t *sp = sys.spins.data();
    const uint8_t *ff = sys.flavor_flip.data();
    const uint8_t *pf = sys.product_flip.data();
    for (int i = 0; i < ns; i++) {
        for (int s = 0; s < sys.flavors; s++) {
            uint8_t bit = uint8_t(1u << s);
            uint8_t mi = sp[i];
            int t = 0;
            for (int q = 0; q < 4; q++) {
                int j = nb[4 * i + q], b = nbb[4 * i + q];
                uint8_t x = mi ^ sp[j];
                t += ((x ^ ff[b]) & bit) ? -1 : 1;
                if (sys.product_term) {
                    t += (parity[x] ^ (pf[b] != 0)) ? -1 : 1;
                }
            }
            double a = sys.accept_table[t + 8];
            if (a < 1 && uniform01(rng) >= a) {
                continue;
            }
            sp[i] = mi ^ bit;
            sys.bond_sum -= 2 * t;
            accepted++;
        }
    }
    return accepted;
}

SpinSystem initial_system(const MCConfig &config, std::mt19937_64 &rng) {
    SpinSystem sys(config.L, config.flavors(), config.coupling(), config.product_term);
    sys.rule = config.rule;
    if (!config.ordered_start) {
        uint8_t all = uint8_t((1u << sys.flavors) - 1);
        for (auto &m : sys.spins) {
            m = uint8_t(rng() & all);
        }
        sys.recompute();
    }
    return sys;
}

MomentAccumulator run_chain(const MCConfig &config, const Observables &obs, int chain_index) {
    config.validate();
    uint64_t seed = derive_seed(config.seed_base, chain_index);
    std::mt19937_64 rng(seed);
    SpinSystem sys = initial_system(config, rng);
    for (int t = 0; t < config.sweeps_thermalize; t++) {
        metropolis_sweep(sys, rng);
    }
    uint64_t total = config.sweeps_measure / config.measure_interval;
    Measurer meas(sys, obs, config.blocks, total);
    for (int t = 1; t <= config.sweeps_measure; t++) {
        metropolis_sweep(sys, rng);
        if (t % config.measure_interval == 0) {
            meas.measure(sys);
        }
    }
    MomentAccumulator acc = std::move(meas).finish();
    acc.seed = seed;
    acc.chain_id = chain_index;
    acc.sweeps = (uint64_t)config.sweeps_thermalize + config.sweeps_measure;
    return acc;
}

MomentAccumulator run_chains(
    const MCConfig &config,
    const Observables &obs,
    int threads,
    const std::function<void(const MomentAccumulator &)> &on_chain) {
    config.validate();
    int nc = config.chain_count;
    std::vector<MomentAccumulator> results(nc);
    threads = std::max(1, std::min(threads, nc));
    if (threads == 1) {
        for (int c = 0; c < nc; c++) {
            results[c] = run_chain(config, obs, c);
        }
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; w++) {
            pool.emplace_back([&, w] {
                for (int c = w; c < nc; c += threads) {
                    results[c] = run_chain(config, obs, c);
                }
            });
        }
        for (auto &t : pool) {
            t.join();
        }
    }
    MomentAccumulator merged;
    for (int c = 0; c < nc; c++) {
        if (on_chain) {
            on_chain(results[c]);
        }
        merged.merge(results[c]);
    }
    merged.chain_id = -1;
    merged.seed = config.seed_base;
    return merged;
}

std::vector<MomentAccumulator> run_tempered_chain(
    const MCConfig &config, const std::vector<double> &p_ladder, const Observables &obs, int chain_index) {
    config.validate();
    if (p_ladder.empty()) {
        throw std::invalid_argument("tempering ladder is empty");
    }
    for (size_t k = 1; k < p_ladder.size(); k++) {
        if (!(p_ladder[k] > p_ladder[k - 1])) {
            throw std::invalid_argument("tempering ladder must be strictly ascending");
        }
    }
    uint64_t seed = derive_seed(config.seed_base, chain_index);
    std::mt19937_64 rng(seed);
    std::vector<SpinSystem> systems;
    for (double p : p_ladder) {
        MCConfig c = config;
        c.p = p;
        c.coupling_override = -1;
        systems.push_back(initial_system(c, rng));
    }
    size_t R = systems.size();
    auto exchange = [&](int parity) {
        for (size_t a = parity; a + 1 < R; a += 2) {
            SpinSystem &x = systems[a], &y = systems[a + 1];
            double arg = (x.J - y.J) * (double)(y.bond_sum - x.bond_sum);
            if (arg >= 0 || uniform01(rng) < std::exp(arg)) {
                std::swap(x.spins, y.spins);
                std::swap(x.bond_sum, y.bond_sum);
            }
        }
    };
    for (int t = 0; t < config.sweeps_thermalize; t++) {
        for (auto &s : systems) {
            metropolis_sweep(s, rng);
        }
        exchange(t & 1);
    }
    uint64_t total = config.sweeps_measure / config.measure_interval;
    std::vector<Measurer> meas;
    meas.reserve(R);
    for (auto &s : systems) {
        meas.emplace_back(s, obs, config.blocks, total);
    }
    for (int t = 1; t <= config.sweeps_measure; t++) {
        for (auto &s : systems) {
            metropolis_sweep(s, rng);
        }
        exchange(t & 1);
        if (t % config.measure_interval == 0) {
            for (size_t r = 0; r < R; r++) {
                meas[r].measure(systems[r]);
            }
        }
    }
    std::vector<MomentAccumulator> out;
    for (auto &m : meas) {
        out.push_back(std::move(m).finish());
        out.back().seed = seed;
        out.back().chain_id = chain_index;
        out.back().sweeps = (uint64_t)config.sweeps_thermalize + config.sweeps_measure;
    }
    return out;
}

MomentAccumulator rbim_chain(const MCConfig &config, int chain_index) {
    MCConfig c = config;
    c.n = 2;
    c.product_term = false;
    c.coupling_override = nishimori_coupling(config.p);
    c.validate();
    uint64_t seed = derive_seed(config.seed_base, chain_index);
    std::mt19937_64 rng(seed);
    SpinSystem sys(c.L, 1, c.coupling(), false);
    sys.rule = c.rule;
    for (auto &f : sys.flavor_flip) {
        f = uniform01(rng) < config.p ? 1 : 0;
    }
    if (!c.ordered_start) {
        for (auto &m : sys.spins) {
            m = uint8_t(rng() & 1);
        }
    }
    sys.recompute();
    for (int t = 0; t < c.sweeps_thermalize; t++) {
        metropolis_sweep(sys, rng);
    }
    Observables obs;
    Measurer meas(sys, obs, c.blocks, c.sweeps_measure / c.measure_interval);
    for (int t = 1; t <= c.sweeps_measure; t++) {
        metropolis_sweep(sys, rng);
        if (t % c.measure_interval == 0) {
            meas.measure(sys);
        }
    }
    MomentAccumulator acc = std::move(meas).finish();
    acc.seed = seed;
    acc.chain_id = chain_index;
    acc.sweeps = (uint64_t)c.sweeps_thermalize + c.sweeps_measure;
    return acc;
}

Estimate binder_ratio(const MomentAccumulator &acc) {
    return acc.estimate({"m2", "m4"}, [](const std::vector<double> &m) { return m[1] / (m[0] * m[0]); });
}

Estimate binder_ratio_flavor_averaged(const MomentAccumulator &acc) {
    return acc.estimate({"m2fa", "m4fa"}, [](const std::vector<double> &m) { return m[1] / (m[0] * m[0]); });
}

Estimate magnetization_squared(const MomentAccumulator &acc) {
    return acc.estimate({"m2"}, [](const std::vector<double> &m) { return m[0]; });
}

Estimate estimate_correlator(const MomentAccumulator &acc, int n, std::array<int, 2> displacement) {
    if (n < 2) {
        throw std::invalid_argument("correlator estimate needs n >= 2");
    }
    std::string name = correlator_name(displacement);
    double c = acc.mean(name);
    if (!(c > 0)) {
        return {kInf, kInf, true, "nonpositive correlator estimate"};
    }
    Estimate e = acc.estimate({name}, [n](const std::vector<double> &m) {
        return m[0] > 0 ? std::log(m[0]) / (1 - n) : kInf;
    });
    if (std::isinf(e.error) || std::isnan(e.error)) {
        e.flagged = true;
        e.note = "correlator changes sign across jackknife samples";
    } else if (e.error * (n - 1) > 0.5) {
        e.flagged = true;
        e.note = "correlator within two standard errors of zero";
    }
    return e;
}

Estimate estimate_pinning(const MomentAccumulator &acc, int order, const std::string &region_name) {
    if (order < 4 || order % 2) {
        throw std::invalid_argument("pinning estimate needs an even order >= 4");
    }
    std::string name = "pin:" + region_name;
    double p = acc.mean(name);
    double hits = p * (double)acc.samples;
    if (!(p > 0)) {
        return {kInf, kInf, true, "undersampled: no satisfied samples"};
    }
    Estimate e = acc.estimate({name}, [order](const std::vector<double> &m) {
        return m[0] > 0 ? -std::log(m[0]) / (order - 2) : kInf;
    });
    if (hits < 100) {
        e.flagged = true;
        e.note = "undersampled: fewer than 100 satisfied samples";
    }
    return e;
}

double defect_effective_samples(const MomentAccumulator &acc, const std::string &probe_name) {
    int k1 = acc.index("log:defect:" + probe_name), k2 = acc.index("log:defect2:" + probe_name);
    if (k1 < 0 || k2 < 0) {
        throw std::invalid_argument("no defect probe named " + probe_name);
    }
    auto lse = [&](int k) {
        double hi = -kInf;
        for (const auto &row : acc.block_sums) {
            hi = std::max(hi, row[k]);
        }
        if (std::isinf(hi)) {
            return hi;
        }
        double s = 0;
        for (const auto &row : acc.block_sums) {
            s += std::exp(row[k] - hi);
        }
        return hi + std::log(s);
    };
    double s1 = lse(k1), s2 = lse(k2);
    if (std::isinf(s1)) {
        return 0;
    }
    return std::exp(2 * s1 - s2);
}

Estimate estimate_defect_free_energy(const MomentAccumulator &acc, const std::string &probe_name) {
    Estimate e = acc.estimate({"log:defect:" + probe_name}, [](const std::vector<double> &m) { return -m[0]; });
    double ess = defect_effective_samples(acc, probe_name);
    double reach = acc.has("defect_reach:" + probe_name) ? acc.mean("defect_reach:" + probe_name) * acc.samples : 0;
    if (ess < kMinDefectSamples) {
        e.flagged = true;
        e.note = "undersampled: " + std::to_string((long long)ess) + " effective samples in the exponential average";
    } else if (reach < kMinDefectSamples) {
        e.flagged = true;
        e.note = "ordered: only " + std::to_string((long long)reach) +
                 " samples where the defect costs no energy; biased high by up to log L";
    }
    return e;
}

}  // namespace tcdiag
