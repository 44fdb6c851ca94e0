#include "tcdiag/loop_exact.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tcdiag/errors.h"
#include "tcdiag/regions.h"

namespace tcdiag {

namespace {

constexpr long double kLn2 = 0.693147180559945309417232121458176568L;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// log sum_k c_k exp(-mu k).
long double log_poly(const std::vector<long double> &coeffs, double mu) {
    long double best = -std::numeric_limits<long double>::infinity();
    std::vector<long double> terms(coeffs.size(), best);
    for (size_t k = 0; k < coeffs.size(); k++) {
        if (coeffs[k] <= 0) {
            continue;
        }
        if (std::isinf(mu)) {
            if (k == 0) {
                terms[k] = std::log(coeffs[k]);
            }
        } else {
            terms[k] = std::log(coeffs[k]) - (long double)mu * k;
        }
        best = std::max(best, terms[k]);
    }
    if (std::isinf(best)) {
        return best;
    }
    long double acc = 0;
    for (long double t : terms) {
        if (!std::isinf(t)) {
            acc += std::exp(t - best);
        }
    }
    return best + std::log(acc);
}

std::vector<long double> as_coeffs(const LengthHistogram &h) {
    return std::vector<long double>(h.counts.begin(), h.counts.end());
}

/// Ratio Z_a / Z_b of two histograms evaluated at the same tension.
long double hist_ratio(const LengthHistogram &a, const LengthHistogram &b, double mu) {
    return std::exp(a.log_eval(mu) - b.log_eval(mu));
}

uint64_t mask64(const EdgeSet &e) {
    return e.to_u64();
}

/// All 2^(L^2-1) products of L^2 - 1 independent stabilizers of one type.
std::vector<uint64_t> contractible_elements(const ToricCode &code, LoopKind kind) {
    auto group = loop_group(code, kind);
    std::vector<uint64_t> out;
    uint64_t cur = 0;
    uint64_t order = uint64_t{1} << group.contractible_rank();
    out.reserve(order);
    out.push_back(0);
    for (uint64_t step = 1; step < order; step++) {
        cur ^= mask64(group.generators[std::countr_zero(step)]);
        out.push_back(cur);
    }
    return out;
}

uint64_t sector_shift(const ToricCode &code, LoopKind kind, uint8_t bits) {
    auto logicals = code.logical_supports(kind);
    uint64_t shift = 0;
    for (int l = 0; l < 2; l++) {
        if ((bits >> l) & 1) {
            shift ^= mask64(logicals[l]);
        }
    }
    return shift;
}

struct Item {
    uint64_t mask;
    int len;
    uint64_t cell_parity;
    bool odd;
};

struct TupleCounts {
    LengthHistogram all;
    LengthHistogram marked;
};

/// Enumerates flavor tuples; a tuple is marked when it violates the pinning constraint or, without
/// pinning, when flavor 0 anticommutes with the sign string.
class TupleEnumerator {
   public:
    TupleEnumerator(
        const ToricCode &code,
        LoopKind kind,
        const std::vector<uint64_t> &shifts,
        const std::vector<uint64_t> &cell_masks,
        uint64_t sign_mask)
        : flavors_((int)shifts.size()), pinning_(!cell_masks.empty()) {
        auto base = contractible_elements(code, kind);
        items_.resize(flavors_);
        for (int s = 0; s < flavors_; s++) {
            items_[s].reserve(base.size());
            for (uint64_t e : base) {
                uint64_t g = e ^ shifts[s];
                items_[s].push_back({g, std::popcount(g), cell_parity(g, cell_masks), (bool)(std::popcount(g & sign_mask) & 1)});
            }
        }
        counts_.all.counts.assign((size_t)(flavors_ + 1) * code.N + 1, 0);
        counts_.marked.counts.assign(counts_.all.counts.size(), 0);
        cell_masks_ = cell_masks;
        chosen_.resize(flavors_);
    }

    TupleCounts run() {
        recurse(0, 0, 0, 0);
        return counts_;
    }

   private:
    static uint64_t cell_parity(uint64_t g, const std::vector<uint64_t> &cells) {
        uint64_t out = 0;
        for (size_t k = 0; k < cells.size(); k++) {
            out |= (uint64_t)(std::popcount(g & cells[k]) & 1) << k;
        }
        return out;
    }

    void recurse(int s, uint64_t prod, int len, uint64_t parity_xor) {
        if (s == flavors_) {
            int total = len + std::popcount(prod);
            counts_.all.counts[total]++;
            bool mark;
            if (pinning_) {
                mark = false;
                for (int r = 0; r < flavors_; r++) {
                    if (chosen_[r]->cell_parity != parity_xor) {
                        mark = true;
                        break;
                    }
                }
            } else {
                mark = chosen_[0]->odd;
            }
            if (mark) {
                counts_.marked.counts[total]++;
            }
            return;
        }
        for (const Item &it : items_[s]) {
            chosen_[s] = &it;
            recurse(s + 1, prod ^ it.mask, len + it.len, parity_xor ^ it.cell_parity);
        }
    }

    int flavors_;
    bool pinning_;
    std::vector<std::vector<Item>> items_;
    std::vector<uint64_t> cell_masks_;
    std::vector<const Item *> chosen_;
    TupleCounts counts_;
};

void check_loop_capacity(const ToricCode &code, int flavors, int sectors_log2) {
    if (code.N > 64) {
        throw CapacityError("loop enumeration needs N <= 64, got N=" + std::to_string(code.N));
    }
    long terms_log2 = (long)flavors * (code.L * code.L - 1) + sectors_log2;
    if (terms_log2 > kMaxLoopTermsLog2) {
        throw CapacityError(
            "loop enumeration of 2^" + std::to_string(terms_log2) + " tuples exceeds the 2^" +
            std::to_string(kMaxLoopTermsLog2) + " guard (L=" + std::to_string(code.L) +
            ", flavors=" + std::to_string(flavors) + ")");
    }
}

std::vector<uint64_t> pin_cell_masks(const ToricCode &code, LoopKind kind, const EdgeSet &region) {
    auto cells = code.constraint_cells(kind);
    std::vector<uint64_t> out;
    for (int c : cut_cells(code, kind, region)) {
        out.push_back(mask64(cells[c] & region));
    }
    if (out.size() > 64) {
        throw CapacityError("pinning supports at most 64 boundary cells");
    }
    return out;
}

TupleCounts enumerate_sector(
    const ToricCode &code,
    LoopKind kind,
    const DefectVector &defects,
    const std::vector<uint64_t> &cell_masks,
    uint64_t sign_mask) {
    std::vector<uint64_t> shifts;
    for (uint8_t d : defects) {
        if (d > 3) {
            throw std::invalid_argument("defect entries are 2-bit values");
        }
        shifts.push_back(sector_shift(code, kind, d));
    }
    return TupleEnumerator(code, kind, shifts, cell_masks, sign_mask).run();
}

DefectVector sector_from_index(uint64_t index, int flavors) {
    DefectVector d(flavors);
    for (int s = 0; s < flavors; s++) {
        d[s] = (index >> (2 * s)) & 3;
    }
    return d;
}

void check_rate(double p) {
    if (!(p >= 0 && p <= 0.5)) {
        throw std::invalid_argument("error rate must lie in [0, 1/2]");
    }
}

}  // namespace

uint64_t LengthHistogram::total() const {
    uint64_t t = 0;
    for (auto c : counts) {
        t += c;
    }
    return t;
}

long double LengthHistogram::log_eval(double mu) const {
    return log_poly(as_coeffs(*this), mu);
}

LengthHistogram &LengthHistogram::operator+=(const LengthHistogram &other) {
    if (counts.size() < other.counts.size()) {
        counts.resize(other.counts.size(), 0);
    }
    for (size_t k = 0; k < other.counts.size(); k++) {
        counts[k] += other.counts[k];
    }
    return *this;
}

PartitionCounts partition_counts(const PartitionSpec &spec) {
    if (!spec.code) {
        throw std::invalid_argument("partition spec has no code");
    }
    const ToricCode &code = *spec.code;
    int flavors = spec.n - 1;
    if (flavors < 1) {
        throw std::invalid_argument("Renyi index n must be >= 2");
    }
    if (spec.defects && (int)spec.defects->size() != flavors) {
        throw std::invalid_argument("defect vector length must equal n - 1");
    }
    check_loop_capacity(code, flavors, spec.defects ? 0 : 2 * flavors);
    std::vector<uint64_t> cells;
    if (spec.pinning) {
        cells = pin_cell_masks(code, spec.kind, *spec.pinning);
    }
    std::vector<DefectVector> sectors;
    if (spec.defects) {
        sectors.push_back(*spec.defects);
    } else {
        for (uint64_t k = 0; k < (uint64_t{1} << (2 * flavors)); k++) {
            sectors.push_back(sector_from_index(k, flavors));
        }
    }
    PartitionCounts out;
    LengthHistogram violated;
    for (const auto &d : sectors) {
        auto t = enumerate_sector(code, spec.kind, d, cells, 0);
        out.free += t.all;
        violated += t.marked;
    }
    out.pinned = out.free;
    for (size_t k = 0; k < violated.counts.size(); k++) {
        out.pinned.counts[k] -= violated.counts[k];
    }
    return out;
}

double partition_function(const PartitionSpec &spec) {
    auto counts = partition_counts(spec);
    const auto &h = spec.pinning ? counts.pinned : counts.free;
    return (double)h.log_eval(spec.tension);
}

double moment_via_loops(const ToricCode &code, const ErrorModel &model, int n) {
    long double total = -(long double)(n - 1) * code.N * kLn2;
    for (LoopKind kind : {LoopKind::X, LoopKind::Z}) {
        PartitionSpec spec{&code, kind, n, model.tension(kind), DefectVector(n - 1, 0), std::nullopt};
        total += partition_counts(spec).free.log_eval(spec.tension);
    }
    return (double)std::exp(total);
}

PauliString dual_string(const ToricCode &code, int plaquette_from, int plaquette_to) {
    int L = code.L;
    int r = plaquette_from / L, c = plaquette_from % L;
    int r1 = plaquette_to / L, c1 = plaquette_to % L;
    EdgeSet support(code.N);
    while (c != c1) {
        support.flip(code.v(r, c + 1));
        c = (c + 1) % L;
    }
    while (r != r1) {
        support.flip(code.h(r + 1, c));
        r = (r + 1) % L;
    }
    return PauliString::x_type(support);
}

double relative_entropy_via_loops(const ToricCode &code, const ErrorModel &model, int n, int site_l, int site_r) {
    if (site_l == site_r) {
        throw std::invalid_argument("relative entropy endpoints must differ");
    }
    if (n < 2) {
        throw std::invalid_argument("relative entropy needs n >= 2");
    }
    if (site_l < 0 || site_r < 0 || site_l >= code.num_sites() || site_r >= code.num_sites()) {
        throw std::out_of_range("relative entropy endpoint outside the dual lattice");
    }
    check_loop_capacity(code, n - 1, 0);
    uint64_t sign_mask = mask64(dual_string(code, site_l, site_r).x);
    auto t = enumerate_sector(code, LoopKind::Z, DefectVector(n - 1, 0), {}, sign_mask);
    double mu = model.tension(LoopKind::Z);
    long double odd_fraction = hist_ratio(t.marked, t.all, mu);
    long double log_corr;
    if (odd_fraction < 0.25L) {
        log_corr = std::log1p(-2 * odd_fraction);
    } else {
        std::vector<long double> signed_coeffs(t.all.counts.size());
        for (size_t k = 0; k < signed_coeffs.size(); k++) {
            signed_coeffs[k] = (long double)t.all.counts[k] - 2.0L * (long double)t.marked.counts[k];
        }
        long double x = std::isinf(mu) ? 0.0L : std::exp(-(long double)mu);
        long double num = 0, xk = 1;
        for (long double c : signed_coeffs) {
            num += c * xk;
            xk *= x;
        }
        if (num <= 0) {
            return kInf;
        }
        log_corr = std::log(num) - t.all.log_eval(mu);
    }
    return (double)(log_corr / (1 - n));
}

std::vector<double> defect_free_energies(const ToricCode &code, LoopKind kind, int n, double tension) {
    int flavors = n - 1;
    check_loop_capacity(code, flavors, 2 * flavors);
    std::vector<long double> logs;
    for (uint64_t k = 0; k < (uint64_t{1} << (2 * flavors)); k++) {
        auto t = enumerate_sector(code, kind, sector_from_index(k, flavors), {}, 0);
        logs.push_back(t.all.log_eval(tension));
    }
    std::vector<double> out;
    for (auto v : logs) {
        out.push_back((double)(logs[0] - v));
    }
    return out;
}

double coherent_info_via_defects(const ToricCode &code, const ErrorModel &model, int n) {
    long double total = 0;
    for (LoopKind kind : {LoopKind::X, LoopKind::Z}) {
        auto df = defect_free_energies(code, kind, n, model.tension(kind));
        long double best = 0, acc = 0;
        for (double f : df) {
            if (!std::isinf(f)) {
                acc += std::exp(-(long double)f - best);
            }
        }
        total += std::log(acc) - (n - 1) * kLn2;
    }
    return (double)(total / (n - 1));
}

double negativity_via_pinning(const ToricCode &code, LoopKind kind, double tension, int order, const EdgeSet &region) {
    if (order < 4 || order % 2) {
        throw std::invalid_argument("Renyi negativity needs an even order >= 4, got " + std::to_string(order));
    }
    if (region.none() || region.popcount() == region.size()) {
        throw std::invalid_argument("negativity region must be a proper nonempty subset");
    }
    PartitionSpec spec{&code, kind, order, tension, DefectVector(order - 1, 0), region};
    auto counts = partition_counts(spec);
    LengthHistogram violated = counts.free;
    for (size_t k = 0; k < violated.counts.size(); k++) {
        violated.counts[k] -= counts.pinned.counts[k];
    }
    long double fail = violated.total() ? hist_ratio(violated, counts.free, tension) : 0.0L;
    long double log_p = fail < 0.5L ? std::log1p(-fail) : counts.pinned.log_eval(tension) - counts.free.log_eval(tension);
    return (double)(-log_p / (order - 2));
}

double negativity_via_pinning(const ToricCode &code, const ErrorModel &model, int order, const EdgeSet &region) {
    if (model.p_x > 0 && model.p_z > 0) {
        throw UnsupportedModeError(
            "pinning negativity covers a single error type; both p_x and p_z are nonzero");
    }
    LoopKind kind = model.p_x > 0 ? LoopKind::Z : LoopKind::X;
    return negativity_via_pinning(code, kind, model.tension(kind), order, region);
}

namespace {

/// For every C1: P(C1) and inner[d] = sum_v P(C1 + dv + l_d) for the four homology labels d.
struct ErrorConfigTables {
    std::vector<long double> weight;
    std::vector<std::array<long double, 4>> inner;
};

ErrorConfigTables error_config_tables(const ToricCode &code, LoopKind error_kind, double p) {
    check_rate(p);
    if (code.N > 30) {
        throw CapacityError("error-configuration enumeration needs N <= 30");
    }
    long work_log2 = code.N + code.L * code.L + 2;
    if (work_log2 > kMaxErrorConfigLog2) {
        throw CapacityError(
            "error-configuration enumeration of 2^" + std::to_string(work_log2) + " terms exceeds the 2^" +
            std::to_string(kMaxErrorConfigLog2) + " guard (L=" + std::to_string(code.L) + ")");
    }
    std::vector<long double> pk(code.N + 1);
    for (int k = 0; k <= code.N; k++) {
        pk[k] = std::pow((long double)p, k) * std::pow(1 - (long double)p, code.N - k);
    }
    auto stabs = code.stabilizer_supports(error_kind);
    std::vector<uint64_t> boundaries;
    uint64_t cur = 0;
    uint64_t count = uint64_t{1} << stabs.size();
    for (uint64_t step = 0; step < count; step++) {
        if (step) {
            cur ^= mask64(stabs[std::countr_zero(step)]);
        }
        boundaries.push_back(cur);
    }
    std::array<uint64_t, 4> shifts;
    for (int d = 0; d < 4; d++) {
        shifts[d] = sector_shift(code, error_kind, (uint8_t)d);
    }
    ErrorConfigTables t;
    size_t configs = size_t{1} << code.N;
    t.weight.resize(configs);
    t.inner.resize(configs);
    for (size_t c1 = 0; c1 < configs; c1++) {
        t.weight[c1] = pk[std::popcount(c1)];
        for (int d = 0; d < 4; d++) {
            long double acc = 0;
            uint64_t base = c1 ^ shifts[d];
            for (uint64_t b : boundaries) {
                acc += pk[std::popcount(base ^ b)];
            }
            t.inner[c1][d] = acc;
        }
    }
    return t;
}

long double error_config_value(const ErrorConfigTables &t, int n, const std::optional<DefectVector> &sector) {
    long double total = 0;
    for (size_t c1 = 0; c1 < t.weight.size(); c1++) {
        long double term = t.weight[c1];
        if (term == 0) {
            continue;
        }
        for (int s = 0; s < n - 1; s++) {
            if (sector) {
                term *= t.inner[c1][(*sector)[s]];
            } else {
                term *= t.inner[c1][0] + t.inner[c1][1] + t.inner[c1][2] + t.inner[c1][3];
            }
        }
        total += term;
    }
    return total;
}

double rel_residual(long double a, long double b, long double scale) {
    return (double)(std::fabs(a - b) / scale);
}

}  // namespace

double error_config_partition(const ErrorConfigSpec &spec) {
    if (!spec.code) {
        throw std::invalid_argument("error-config spec has no code");
    }
    if (spec.n < 2) {
        throw std::invalid_argument("Renyi index n must be >= 2");
    }
    if (spec.sector && (int)spec.sector->size() != spec.n - 1) {
        throw std::invalid_argument("sector vector length must equal n - 1");
    }
    auto t = error_config_tables(*spec.code, spec.error_kind, spec.p);
    return (double)std::log(error_config_value(t, spec.n, spec.sector));
}

double DualityReport::max_residual() const {
    double m = 0;
    for (const auto &c : checks) {
        m = std::max(m, c.residual);
    }
    return m;
}

std::string DualityReport::str() const {
    std::ostringstream out;
    out.precision(17);
    out << "duality L=" << L << " n=" << n << " p_x=" << model.p_x << " p_z=" << model.p_z << "\n";
    for (const auto &c : checks) {
        out << "  " << c.name << " lhs=" << c.lhs << " rhs=" << c.rhs << " residual=" << c.residual << "\n";
    }
    return out.str();
}

DualityReport verify_duality(const ToricCode &code, const ErrorModel &model, int n) {
    DualityReport report{code.L, n, model, {}};
    int flavors = n - 1;
    long double prefactor = std::exp((long double)flavors * code.N / 2 * kLn2);
    long double four_pow = std::exp((long double)flavors * 2 * kLn2);
    for (LoopKind loop_kind : {LoopKind::X, LoopKind::Z}) {
        LoopKind error_kind = loop_kind == LoopKind::X ? LoopKind::Z : LoopKind::X;
        double mu = model.tension(loop_kind);
        double p = model.rate(loop_kind);
        std::string tag = std::string("Z_") + loop_kind_name(loop_kind) + " vs Z'_" + loop_kind_name(error_kind);
        check_loop_capacity(code, flavors, 2 * flavors);
        auto tables = error_config_tables(code, error_kind, p);

        uint64_t num_sectors = uint64_t{1} << (2 * flavors);
        std::vector<long double> z_loop(num_sectors), z_err(num_sectors);
        for (uint64_t k = 0; k < num_sectors; k++) {
            auto d = sector_from_index(k, flavors);
            z_loop[k] = std::exp(enumerate_sector(code, loop_kind, d, {}, 0).all.log_eval(mu));
            z_err[k] = prefactor * error_config_value(tables, n, d);
        }
        long double z_full = 0, z_err_all = prefactor * error_config_value(tables, n, std::nullopt);
        for (auto v : z_loop) {
            z_full += v;
        }
        report.checks.push_back(
            {tag + " full group / trivial shift", (double)z_full, (double)z_err[0],
             rel_residual(z_full, z_err[0], z_full)});
        long double rhs = z_err_all / four_pow;
        report.checks.push_back(
            {tag + " trivial sector / all shifts", (double)z_loop[0], (double)rhs,
             rel_residual(z_loop[0], rhs, z_loop[0])});
        double worst = 0;
        for (uint64_t e = 0; e < num_sectors; e++) {
            long double transform = 0;
            for (uint64_t d = 0; d < num_sectors; d++) {
                int sign = std::popcount(d & e) & 1;
                transform += sign ? -z_loop[d] : z_loop[d];
            }
            worst = std::max(worst, rel_residual(transform, z_err[e], z_full));
        }
        report.checks.push_back({tag + " per-sector sign transform", 0, 0, worst});
    }
    return report;
}

}  // namespace tcdiag
