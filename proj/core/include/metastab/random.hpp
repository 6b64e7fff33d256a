#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace metastab {

/// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic random stream keyed by (seed, substream).
///
/// Every trajectory or sample index gets its own substream, so results do
/// not depend on which worker draws them or in which order. Normal variates
/// use Box-Muller on the raw 64-bit engine, which keeps streams identical
/// across standard library implementations.
class Substream {
public:
    Substream(std::uint64_t seed, std::uint64_t substream)
        : engine_(splitmix64(seed ^ splitmix64(substream + 0x632be59bd9b4e019ULL))) {}

    /// Uniform in (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t next_u64() noexcept { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace metastab
