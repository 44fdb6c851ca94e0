#ifndef TCDIAG_VERIFY_H
#define TCDIAG_VERIFY_H

#include <string>
#include <vector>

namespace tcdiag {

struct VerifyCheck {
    std::string name;
    bool passed = false;
    /// Largest residual seen, when the check is numeric.
    double residual = 0;
    std::string detail;
};

struct VerifyReport {
    std::string level;
    std::vector<VerifyCheck> checks;

    bool passed() const;
    double max_residual() const;
    std::string str() const;
};

/// quick: algebraic identities, Binder limits, symmetry and determinism checks.
/// full: quick plus every cross-engine equivalence at L = 2 and the duality identities at L = 2, 3.
VerifyReport verify_suite(const std::string &level);

}  // namespace tcdiag

#endif
