#pragma once

#include <cstdint>

namespace qclt {

// Points of [0,1) are stored as residues r of the odd prime q = 2^61 - 1 and
// represent x = r / q. Integer-slope maps act as r -> s*r mod q, which is exact
// and bijective, so iterating the doubling map never collapses onto 0 the way
// binary floating point does after ~53 steps.
inline constexpr std::uint64_t kModulus = (std::uint64_t{1} << 61) - 1;

__extension__ typedef unsigned __int128 u128;

/// Reduces v < 2^122 modulo 2^61 - 1.
constexpr std::uint64_t reduce_mod(u128 v) noexcept {
    u128 r = (v & kModulus) + (v >> 61);
    r = (r & kModulus) + (r >> 61);
    auto s = static_cast<std::uint64_t>(r);
    return s >= kModulus ? s - kModulus : s;
}

/// Fixed-point multiplier with 32 fractional bits.
struct FixedSlope {
    std::uint64_t raw = 0;
};

/// floor(r * slope) mod q; exact when the slope is an integer.
constexpr std::uint64_t mul_slope(std::uint64_t r, FixedSlope s) noexcept {
    return reduce_mod((static_cast<u128>(r) * s.raw) >> 32);
}

struct Point {
    std::uint64_t residue = 0;

    /// Nearest double to residue / q, clamped below 1.
    double value() const noexcept {
        constexpr double kInv = 1.0 / static_cast<double>(kModulus);
        constexpr double kBelowOne = 0x1.fffffffffffffp-1;
        double x = static_cast<double>(residue) * kInv;
        return x < kBelowOne ? x : kBelowOne;
    }

    friend constexpr bool operator==(Point a, Point b) noexcept { return a.residue == b.residue; }
};

/// Lattice point nearest to x. Throws DomainError unless 0 <= x < 1.
Point point_from_unit(double x);

}  // namespace qclt
