#pragma once

#include "cg/potentials.hpp"
#include "cg/stats.hpp"
#include "cg/trajectory.hpp"

#include <cstddef>
#include <vector>

namespace cg {

struct ChainMcConfig {
    TrajectoryConfig traj{.dt = 1e-3, .steps = 400'000, .seed = 1, .burn_in = 40'000, .thinning = 10};
    std::size_t realizations = 8;
    unsigned workers = 0;
    std::size_t batches_per_realization = 8;
    /// Use only the force on the last atom instead of the average over all
    /// cuts (same expectation, larger variance).
    bool end_observable = false;
};

struct ChainMcResult {
    MeanEstimate force;
    std::vector<MeanEstimate> per_bond; ///< filled by the free-end sampler only
    std::size_t rejected_steps = 0;
};

/// Mean force of a chain of N bonds with both ends clamped (first atom at 0,
/// last atom at macroscopic length x). Positions are integrated in unscaled
/// units, so bonds are differences of neighbouring positions. `w2` may be the
/// zero potential.
ChainMcResult chain_force_clamped(const PairPotential& w1, const PairPotential& w2, double beta, double x,
                                  std::size_t n_bonds, const ChainMcConfig& cfg);

/// Nearest-neighbour chain with a free last atom pulled by force f: per-bond
/// mean force W'(y_j) for every bond j.
ChainMcResult chain_force_free_end(const PairPotential& w, double beta, double f, std::size_t n_bonds,
                                   const ChainMcConfig& cfg);

} // namespace cg
