#ifndef TCDIAG_ERROR_MODEL_H
#define TCDIAG_ERROR_MODEL_H

#include "tcdiag/pauli_code.h"

namespace tcdiag {

/// Independent single-qubit bit-flip (p_x) and phase-flip (p_z) channels.
/// X loops carry tension mu_x = -log(1 - 2 p_z); Z loops carry mu_z = -log(1 - 2 p_x).
struct ErrorModel {
    double p_x = 0;
    double p_z = 0;

    ErrorModel() = default;
    ErrorModel(double px, double pz);

    /// Error rate that sets the tension of loops of the given kind.
    double rate(LoopKind kind) const {
        return kind == LoopKind::X ? p_z : p_x;
    }
    /// +infinity at p = 1/2.
    double tension(LoopKind kind) const;
    double coupling(LoopKind kind) const {
        return tension(kind) / 2;
    }
};

double tension_from_rate(double p);
/// Inverse of tension_from_rate.
double rate_from_tension(double mu);
/// Nishimori-line coupling, e^(-2J) = p / (1 - p), for p in (0, 1/2).
double nishimori_coupling(double p);

}  // namespace tcdiag

#endif
