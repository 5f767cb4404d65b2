#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cg {

/// Counter-based generator: the k-th output of stream s under master seed m is
/// a pure function mix(key(m, s) + k * gamma), so any realization can be
/// replayed without touching the others.
class CounterRng {
public:
    CounterRng(std::uint64_t master_seed, std::uint64_t stream)
        : key_(mix(master_seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

    /// Uniform on (0, 1), never exactly 0 so that log() is safe.
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal by Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

    std::uint64_t counter() const { return counter_; }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace cg
