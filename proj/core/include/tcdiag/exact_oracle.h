#ifndef TCDIAG_EXACT_ORACLE_H
#define TCDIAG_EXACT_ORACLE_H

#include <Eigen/Dense>
#include <vector>

#include "tcdiag/error_model.h"
#include "tcdiag/pauli_code.h"

namespace tcdiag {

using DenseMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

/// Real density matrix on the code qubits, optionally followed by reference qubits.
/// Qubit q is bit q of the basis index; code edge e is qubit e, reference qubit l is qubit N + l.
struct DenseState {
    int num_code_qubits = 0;
    int num_ref_qubits = 0;
    DenseMatrix rho;

    size_t dim() const {
        return (size_t)rho.rows();
    }
    int num_qubits() const {
        return num_code_qubits + num_ref_qubits;
    }
    /// Throws if not symmetric, not unit trace, or has an eigenvalue below -tol_psd.
    void check_valid(double tol = 1e-12, double tol_psd = 1e-10) const;
};

enum class Rho0Variant {
    /// Uniform mixture over the four logical states.
    MaxMixedLogical,
    /// Code entangled with two reference qubits in Bell pairs.
    BellWithReference,
    /// The +1 eigenstate of both Z logicals.
    PureGround,
};

constexpr int kMaxDenseL = 2;

DenseState build_rho0(const ToricCode &code, Rho0Variant variant);

/// Applies every bit-flip channel, then every phase channel, to the code qubits.
DenseState apply_channel(const DenseState &state, const ErrorModel &model);
/// Same, restricted to the listed qubits; reference qubits are rejected.
DenseState apply_channel_on(const DenseState &state, const ErrorModel &model, const std::vector<int> &qubits);
/// P rho P for a Pauli string on the code qubits.
DenseState conjugate(const DenseState &state, const PauliString &p);

DenseMatrix partial_transpose(const DenseMatrix &rho, uint64_t mask);
DenseState partial_transpose(const DenseState &state, const EdgeSet &region);
/// Reduced state on the qubits selected by keep_mask (ordered by increasing qubit index).
DenseMatrix reduced_matrix(const DenseMatrix &rho, int num_qubits, uint64_t keep_mask);

/// tr(rho^n), exact matrix products in extended precision.
double renyi_moment(const DenseState &state, int n);
std::vector<double> spectrum(const DenseMatrix &rho);
/// Renyi-alpha entropy of a matrix; alpha = 1 gives von Neumann.
double renyi_entropy(const DenseMatrix &rho, double alpha);

double renyi_negativity(const DenseState &state, const EdgeSet &region, int order);
double log_negativity(const DenseState &state, const EdgeSet &region);
/// +infinity when tr(rho rho_m^(n-1)) vanishes.
double renyi_relative_entropy(const DenseState &state, const DenseState &excited, int n);
double renyi_coherent_info(const DenseState &state_rq, int n);

}  // namespace tcdiag

#endif
