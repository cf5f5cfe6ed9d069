#pragma once

#include <cmath>
#include <cstddef>

namespace qclt {

/// C n^-p with the convention 0^-p = 1, so the value at 0 is C.
struct PowerLaw {
    double constant = 1.0;
    double exponent = 2.0;

    double at(double n) const noexcept { return n <= 0.0 ? constant : constant * std::pow(n, -exponent); }
    double at(std::size_t n) const noexcept { return at(static_cast<double>(n)); }
};

/// eta(n) = C_eta n^-psi, alpha(n) = C_alpha n^-gamma, plus zeta and delta.
struct BoundModel {
    PowerLaw eta{1.0, 2.0};
    PowerLaw alpha{1.0, 1.0};
    double zeta = 2.0;
    double delta = 0.1;

    double psi() const noexcept { return eta.exponent; }
    double gamma() const noexcept { return alpha.exponent; }
};

}  // namespace qclt
