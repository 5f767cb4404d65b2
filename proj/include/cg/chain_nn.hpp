#pragma once

#include "cg/chain_sampler.hpp"
#include "cg/potentials.hpp"
#include "cg/quadrature.hpp"
#include "cg/stats.hpp"

#include <vector>

namespace cg {

struct ChainModelNN {
    PairPotential W;
    double beta = 1.0;

    void validate() const;
};

/// Macroscopic strain of the chain under stress f: mean of y under the weight
/// exp(-beta (W(y) - f y)).
double strain_for_stress_nn(const ChainModelNN& m, double f, const QuadratureSpec& quad = {});

/// log of (1/z) * integral exp(xi y - beta W(y)), z the integral at xi = 0,
/// together with the tilted mean and variance of y.
struct TiltedLog {
    double log_mgf = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};
TiltedLog tilted_log_mgf(const ChainModelNN& m, double xi, const QuadratureSpec& quad = {});

struct LegendreOptions {
    double xi_limit = 1e4; ///< |xi| beyond which no bracket is sought
    double tolerance = 1e-10;
    int max_iterations = 200;
};

struct FreeEnergyPoint {
    double F = 0.0;       ///< free energy per bond, thermodynamic limit
    double F_prime = 0.0; ///< its derivative (the stress)
    double xi = 0.0;      ///< maximiser of xi x - log_mgf(xi)
};

/// Thermodynamic-limit free energy F(x) = (1/beta) sup_xi (xi x - log_mgf(xi))
/// and its derivative xi* / beta, by safeguarded Newton on the concave dual.
FreeEnergyPoint free_energy_limit_nn(const ChainModelNN& m, double x, const QuadratureSpec& quad = {},
                                     const LegendreOptions& opt = {});

/// Finite-N mean force with both ends clamped.
MeanEstimate reference_force_mc_nn(const ChainModelNN& m, double x, std::size_t N, const ChainMcConfig& cfg);

/// Free last atom under force f: per-bond mean force (homogeneous-stress check).
std::vector<MeanEstimate> bond_forces_free_end_nn(const ChainModelNN& m, double f, std::size_t N,
                                                  const ChainMcConfig& cfg);

} // namespace cg
