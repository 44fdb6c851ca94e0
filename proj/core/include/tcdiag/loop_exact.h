#ifndef TCDIAG_LOOP_EXACT_H
#define TCDIAG_LOOP_EXACT_H

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tcdiag/error_model.h"
#include "tcdiag/pauli_code.h"

namespace tcdiag {

/// Counts of loop tuples by total length k = sum_s |g_s| + |prod_s g_s|.
/// Z(mu) = sum_k counts[k] exp(-mu k); integer counts make every sum order-independent.
struct LengthHistogram {
    std::vector<uint64_t> counts;

    uint64_t total() const;
    /// log Z(mu); mu may be +infinity. Returns -infinity for an empty histogram.
    long double log_eval(double mu) const;
    LengthHistogram &operator+=(const LengthHistogram &other);
};

/// Defect sector of one loop type: entry s holds bit l set when flavor s carries the logical of cycle l.
using DefectVector = std::vector<uint8_t>;

struct PartitionSpec {
    const ToricCode *code = nullptr;
    LoopKind kind = LoopKind::X;
    /// Renyi index; there are n - 1 loop flavors.
    int n = 2;
    double tension = 0;
    /// A fixed defect sector sums contractible loops shifted by the chosen logicals.
    /// std::nullopt sums every sector, which is the sum over the full loop group.
    std::optional<DefectVector> defects;
    /// Region whose boundary cells constrain every flavor combination h^(r) = prod_{s != r} g_s.
    std::optional<EdgeSet> pinning;
};

constexpr int kMaxLoopTermsLog2 = 30;

/// Exact histogram of the specified ensemble, plus the histogram of tuples violating the pinning constraint.
struct PartitionCounts {
    LengthHistogram free;
    LengthHistogram pinned;
};
PartitionCounts partition_counts(const PartitionSpec &spec);

/// log Z of the specified ensemble (pinned ensemble when spec.pinning is set).
double partition_function(const PartitionSpec &spec);

/// tr rho^n = Z_x Z_z / 2^((n-1)N), both sums over the trivial defect sector.
double moment_via_loops(const ToricCode &code, const ErrorModel &model, int n);

/// Open X string crossing the edges between two plaquettes along a row-then-column path.
PauliString dual_string(const ToricCode &code, int plaquette_from, int plaquette_to);

/// D^(n) = log<sgn(g_z^(1), X^C)> / (1 - n), with C joining two plaquettes; +infinity at zero correlator.
double relative_entropy_via_loops(const ToricCode &code, const ErrorModel &model, int n, int site_l, int site_r);

/// All defect sectors d in order of the integer sum_s d_s 4^s, with dF = -log(Z^(d)/Z^(0)).
std::vector<double> defect_free_energies(const ToricCode &code, LoopKind kind, int n, double tension);

double coherent_info_via_defects(const ToricCode &code, const ErrorModel &model, int n);

/// Requires a single active error type; the loop kind follows from which rate is nonzero.
double negativity_via_pinning(const ToricCode &code, const ErrorModel &model, int order, const EdgeSet &region);
/// Same calculation for an explicit loop kind and tension.
double negativity_via_pinning(const ToricCode &code, LoopKind kind, double tension, int order, const EdgeSet &region);

/// Error-configuration ensemble of one error type: Z errors (kind Z) are shifted by plaquette boundaries and
/// Z logicals, X errors (kind X) by star coboundaries and X logicals.
struct ErrorConfigSpec {
    const ToricCode *code = nullptr;
    LoopKind error_kind = LoopKind::Z;
    int n = 2;
    double p = 0;
    /// Fixed homology shift per copy s = 2..n (same bit layout as DefectVector); std::nullopt sums all.
    std::optional<DefectVector> sector;
};

constexpr int kMaxErrorConfigLog2 = 30;

/// log Z' = log sum_{C1} P(C1) prod_{s=2..n} sum_{v_s} P(C1 + dv_s + l_s).
double error_config_partition(const ErrorConfigSpec &spec);

struct DualityCheck {
    std::string name;
    double lhs = 0;
    double rhs = 0;
    double residual = 0;
};

struct DualityReport {
    int L = 0;
    int n = 0;
    ErrorModel model;
    std::vector<DualityCheck> checks;
    double max_residual() const;
    std::string str() const;
};

/// Checks, for both pairings (X loops with Z errors and Z loops with X errors):
/// full-group Z = 2^((n-1)N/2) Z' in the trivial homology sector;
/// trivial-sector Z = 2^((n-1)N/2) Z' summed over sectors / 4^(n-1);
/// and every sector pair related by the sign transform over defect labels.
DualityReport verify_duality(const ToricCode &code, const ErrorModel &model, int n);

}  // namespace tcdiag

#endif
