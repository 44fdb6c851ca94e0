#include "tcdiag/error_model.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tcdiag {

ErrorModel::ErrorModel(double px, double pz) : p_x(px), p_z(pz) {
    for (double p : {px, pz}) {
        if (!(p >= 0 && p <= 0.5)) {
            throw std::invalid_argument("error rate must lie in [0, 1/2], got " + std::to_string(p));
        }
    }
}

double tension_from_rate(double p) {
    if (p >= 0.5) {
        return std::numeric_limits<double>::infinity();
    }
    return -std::log1p(-2 * p);
}

double rate_from_tension(double mu) {
    return -std::expm1(-mu) / 2;
}

double nishimori_coupling(double p) {
    if (!(p > 0 && p < 0.5)) {
        throw std::invalid_argument("Nishimori coupling needs p in (0, 1/2)");
    }
    return 0.5 * std::log((1 - p) / p);
}

double ErrorModel::tension(LoopKind kind) const {
    return tension_from_rate(rate(kind));
}

}  // namespace tcdiag
