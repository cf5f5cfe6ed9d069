#pragma once

#include <cstdint>

namespace qclt {

/// Purpose tags that keep independent random streams apart.
enum class Stream : std::uint64_t {
    omega = 1,
    ensemble = 2,
    pairs = 3,
    mixing_samples = 4,
    split_route = 5,
};

/// Stateless counter-based generator. Every draw is a pure function of
/// (master seed, stream, realization index, coordinate index), so results do
/// not depend on how work is scheduled across threads.
class CounterRng {
public:
    constexpr CounterRng(std::uint64_t seed, Stream stream, std::uint64_t realization) noexcept
        : key_(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) ^ mix(static_cast<std::uint64_t>(stream)) ^
                   mix(realization + 0x632be59bd9b4e019ULL))) {}

    constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return mix(key_ ^ mix(counter + 0xd1b54a32d192ed03ULL));
    }

    /// Uniform on [0,1) with 53 random bits.
    constexpr double uniform(std::uint64_t counter) const noexcept {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

private:
    // splitmix64 finalizer
    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
};

}  // namespace qclt
