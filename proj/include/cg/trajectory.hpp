#pragma once

#include <cstdint>

namespace cg {

/// Euler-Maruyama run parameters shared by the chain sampler and the
/// molecular/1D engines.
struct TrajectoryConfig {
    double dt = 1e-3;
    std::uint64_t steps = 1'000'000;
    std::uint64_t seed = 1;
    std::uint64_t burn_in = 0;
    std::uint64_t thinning = 1;
    /// Any coordinate exceeding this magnitude aborts the run (dt too large).
    double overflow_guard = 1e6;

    void validate() const;
};

} // namespace cg
