#include "tcdiag/exact_oracle.h"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tcdiag/errors.h"

namespace tcdiag {

namespace {

struct PauliMask {
    uint64_t x = 0;
    uint64_t z = 0;
};

PauliMask with_ref(const PauliString &p, uint64_t ref_x, uint64_t ref_z) {
    return {p.x.to_u64() | ref_x, p.z.to_u64() | ref_z};
}

/// (1/2^nq) sum over the group generated by commuting Pauli masks.
DenseMatrix group_average(const std::vector<PauliMask> &gens, int num_qubits) {
    size_t dim = size_t{1} << num_qubits;
    DenseMatrix rho = DenseMatrix::Zero(dim, dim);
    long double scale = std::ldexp(1.0L, -num_qubits);
    PauliMask g;
    for (uint64_t step = 0; step < (uint64_t{1} << gens.size()); step++) {
        if (step) {
            const auto &t = gens[std::countr_zero(step)];
            g.x ^= t.x;
            g.z ^= t.z;
        }
        for (size_t b = 0; b < dim; b++) {
            rho(b ^ g.x, b) += (std::popcount(g.z & b) & 1) ? -scale : scale;
        }
    }
    return rho;
}

DenseMatrix matmul(const DenseMatrix &a, const DenseMatrix &b) {
    DenseMatrix out = a * b;
    return out;
}

/// tr(a b) for arbitrary square matrices.
long double trace_product(const DenseMatrix &a, const DenseMatrix &b) {
    return (a.array() * b.transpose().array()).sum();
}

std::vector<DenseMatrix> powers(const DenseMatrix &m, int up_to) {
    std::vector<DenseMatrix> out;
    out.push_back(DenseMatrix::Identity(m.rows(), m.cols()));
    for (int k = 1; k <= up_to; k++) {
        out.push_back(k == 1 ? m : matmul(out.back(), m));
    }
    return out;
}

long double trace_power(const DenseMatrix &m, int n) {
    if (n == 1) {
        return m.trace();
    }
    int half = n / 2;
    auto pw = powers(m, half);
    if (n % 2 == 0) {
        return trace_product(pw[half], pw[half]);
    }
    return trace_product(matmul(pw[half], m), pw[half]);
}

/// tr(b^k) - tr(a^k) with delta = b - a, summed term by term to avoid cancellation.
long double trace_power_difference(const DenseMatrix &a, const DenseMatrix &b, const DenseMatrix &delta, int k) {
    auto pa = powers(a, k - 1);
    auto pb = powers(b, k - 1);
    long double total = 0;
    for (int j = 0; j < k; j++) {
        total += trace_product(matmul(pb[j], delta), pa[k - 1 - j]);
    }
    return total;
}

void require_l2(const ToricCode &code) {
    if (code.L > kMaxDenseL) {
        throw CapacityError("dense oracle supports L <= 2 only, got L=" + std::to_string(code.L));
    }
}

void flip_channel(DenseMatrix &rho, uint64_t m, long double p) {
    size_t dim = rho.rows();
    for (size_t a = 0; a < dim; a++) {
        if (a & m) {
            continue;
        }
        for (size_t b = 0; b < dim; b++) {
            size_t a2 = a ^ m, b2 = b ^ m;
            long double x = rho(a, b), y = rho(a2, b2);
            rho(a, b) = (1 - p) * x + p * y;
            rho(a2, b2) = (1 - p) * y + p * x;
        }
    }
}

void phase_channel(DenseMatrix &rho, uint64_t m, long double p) {
    size_t dim = rho.rows();
    long double damp = 1 - 2 * p;
    for (size_t a = 0; a < dim; a++) {
        for (size_t b = 0; b < dim; b++) {
            if (((a ^ b) & m) != 0) {
                rho(a, b) *= damp;
            }
        }
    }
}

}  // namespace

void DenseState::check_valid(double tol, double tol_psd) const {
    if ((size_t)1 << num_qubits() != dim()) {
        throw std::logic_error("dense state dimension does not match its qubit count");
    }
    long double asym = (rho - rho.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol) {
        throw std::logic_error("dense state is not symmetric: " + std::to_string((double)asym));
    }
    long double tr = rho.trace();
    if (std::fabs((double)tr - 1) > tol) {
        throw std::logic_error("dense state trace is " + std::to_string((double)tr));
    }
    auto ev = spectrum(rho);
    if (ev.front() < -tol_psd) {
        throw std::logic_error("dense state has negative eigenvalue " + std::to_string(ev.front()));
    }
}

DenseState build_rho0(const ToricCode &code, Rho0Variant variant) {
    require_l2(code);
    std::vector<PauliMask> gens;
    for (int s = 0; s + 1 < code.num_sites(); s++) {
        gens.push_back(with_ref(code.star(s), 0, 0));
        gens.push_back(with_ref(code.plaquette(s), 0, 0));
    }
    DenseState state;
    state.num_code_qubits = code.N;
    if (variant == Rho0Variant::BellWithReference) {
        state.num_ref_qubits = 2;
        for (int l = 0; l < 2; l++) {
            uint64_t ref = uint64_t{1} << (code.N + l);
            gens.push_back(with_ref(code.logical_x(l), ref, 0));
            gens.push_back(with_ref(code.logical_z(l), 0, ref));
        }
    } else if (variant == Rho0Variant::PureGround) {
        gens.push_back(with_ref(code.logical_z(0), 0, 0));
        gens.push_back(with_ref(code.logical_z(1), 0, 0));
    }
    state.rho = group_average(gens, state.num_qubits());
    return state;
}

DenseState apply_channel_on(const DenseState &state, const ErrorModel &model, const std::vector<int> &qubits) {
    for (int q : qubits) {
        if (q < 0 || q >= state.num_qubits()) {
            throw std::out_of_range("channel qubit " + std::to_string(q) + " out of range");
        }
        if (q >= state.num_code_qubits) {
            throw std::invalid_argument("error channel may not act on reference qubit " + std::to_string(q));
        }
    }
    DenseState out = state;
    if (model.p_x > 0) {
        for (int q : qubits) {
            flip_channel(out.rho, uint64_t{1} << q, model.p_x);
        }
    }
    if (model.p_z > 0) {
        for (int q : qubits) {
            phase_channel(out.rho, uint64_t{1} << q, model.p_z);
        }
    }
    return out;
}

DenseState apply_channel(const DenseState &state, const ErrorModel &model) {
    std::vector<int> qubits;
    for (int q = 0; q < state.num_code_qubits; q++) {
        qubits.push_back(q);
    }
    return apply_channel_on(state, model, qubits);
}

DenseState conjugate(const DenseState &state, const PauliString &p) {
    if ((int)p.size() != state.num_code_qubits) {
        throw std::invalid_argument("conjugating Pauli string has the wrong length");
    }
    uint64_t x = p.x.to_u64(), z = p.z.to_u64();
    DenseState out = state;
    size_t dim = state.dim();
    for (size_t a = 0; a < dim; a++) {
        for (size_t b = 0; b < dim; b++) {
            bool sign = (std::popcount(z & a) + std::popcount(z & b)) & 1;
            long double v = state.rho(a ^ x, b ^ x);
            out.rho(a, b) = sign ? -v : v;
        }
    }
    return out;
}

DenseMatrix partial_transpose(const DenseMatrix &rho, uint64_t mask) {
    size_t dim = rho.rows();
    DenseMatrix out(dim, dim);
    for (size_t a = 0; a < dim; a++) {
        for (size_t b = 0; b < dim; b++) {
            size_t a2 = (a & ~mask) | (b & mask);
            size_t b2 = (b & ~mask) | (a & mask);
            out(a, b) = rho(a2, b2);
        }
    }
    return out;
}

DenseState partial_transpose(const DenseState &state, const EdgeSet &region) {
    DenseState out = state;
    out.rho = partial_transpose(state.rho, region.to_u64());
    return out;
}

DenseMatrix reduced_matrix(const DenseMatrix &rho, int num_qubits, uint64_t keep_mask) {
    std::vector<int> keep, drop;
    for (int q = 0; q < num_qubits; q++) {
        ((keep_mask >> q) & 1 ? keep : drop).push_back(q);
    }
    auto spread = [](uint64_t bits, const std::vector<int> &pos) {
        uint64_t out = 0;
        for (size_t k = 0; k < pos.size(); k++) {
            if ((bits >> k) & 1) {
                out |= uint64_t{1} << pos[k];
            }
        }
        return out;
    };
    size_t dk = size_t{1} << keep.size(), dd = size_t{1} << drop.size();
    DenseMatrix out = DenseMatrix::Zero(dk, dk);
    for (size_t i = 0; i < dk; i++) {
        for (size_t j = 0; j < dk; j++) {
            long double acc = 0;
            uint64_t bi = spread(i, keep), bj = spread(j, keep);
            for (size_t t = 0; t < dd; t++) {
                uint64_t bt = spread(t, drop);
                acc += rho(bi | bt, bj | bt);
            }
            out(i, j) = acc;
        }
    }
    return out;
}

double renyi_moment(const DenseState &state, int n) {
    if (n < 1) {
        throw std::invalid_argument("Renyi index must be >= 1");
    }
    return (double)trace_power(state.rho, n);
}

std::vector<double> spectrum(const DenseMatrix &rho) {
    Eigen::MatrixXd m = rho.cast<double>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    auto ev = solver.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

double renyi_entropy(const DenseMatrix &rho, double alpha) {
    auto ev = spectrum(rho);
    if (alpha == 1) {
        double s = 0;
        for (double x : ev) {
            if (x > 0) {
                s -= x * std::log(x);
            }
        }
        return s;
    }
    double acc = 0;
    for (double x : ev) {
        if (x > 0) {
            acc += std::pow(x, alpha);
        }
    }
    return std::log(acc) / (1 - alpha);
}

double renyi_negativity(const DenseState &state, const EdgeSet &region, int order) {
    if (order < 4 || order % 2) {
        throw std::invalid_argument("Renyi negativity needs an even order >= 4, got " + std::to_string(order));
    }
    uint64_t mask = region.to_u64();
    uint64_t full = (state.num_qubits() == 64) ? ~uint64_t{0} : ((uint64_t{1} << state.num_qubits()) - 1);
    if (mask == 0 || (mask & full) == full) {
        throw std::invalid_argument("negativity region must be a proper nonempty subset");
    }
    DenseMatrix t = partial_transpose(state.rho, mask);
    DenseMatrix delta = t - state.rho;
    long double base = trace_power(state.rho, order);
    long double diff = trace_power_difference(state.rho, t, delta, order);
    return (double)(std::log1p(diff / base) / (2 - order));
}

double log_negativity(const DenseState &state, const EdgeSet &region) {
    auto ev = spectrum(partial_transpose(state.rho, region.to_u64()));
    double norm = 0;
    for (double x : ev) {
        norm += std::fabs(x);
    }
    return std::log(norm);
}

double renyi_relative_entropy(const DenseState &state, const DenseState &excited, int n) {
    if (n < 2) {
        throw std::invalid_argument("relative entropy needs n >= 2");
    }
    if (state.dim() != excited.dim()) {
        throw std::invalid_argument("relative entropy states differ in dimension");
    }
    const DenseMatrix &rho = state.rho;
    DenseMatrix delta = excited.rho - rho;
    auto pr = powers(rho, n - 2);
    auto pm = powers(excited.rho, n - 2);
    long double diff = 0;
    for (int j = 0; j <= n - 2; j++) {
        diff += trace_product(matmul(matmul(rho, pm[j]), delta), pr[n - 2 - j]);
    }
    long double base = trace_power(rho, n);
    long double ratio_minus_one = diff / base;
    if (1 + ratio_minus_one <= 1e-15L) {
        return std::numeric_limits<double>::infinity();
    }
    return (double)(std::log1p(ratio_minus_one) / (1 - n));
}

double renyi_coherent_info(const DenseState &state_rq, int n) {
    if (state_rq.num_ref_qubits != 2) {
        throw std::invalid_argument("coherent information needs a state with two reference qubits");
    }
    if (n < 2) {
        throw std::invalid_argument("coherent information needs n >= 2");
    }
    uint64_t code_mask = (uint64_t{1} << state_rq.num_code_qubits) - 1;
    DenseMatrix rho_q = reduced_matrix(state_rq.rho, state_rq.num_qubits(), code_mask);
    long double num = trace_power(state_rq.rho, n);
    long double den = trace_power(rho_q, n);
    return (double)(std::log(num / den) / (n - 1));
}

}  // namespace tcdiag
