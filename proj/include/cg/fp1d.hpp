#pragma once

#include "cg/cg_dynamics.hpp"
#include "cg/sde.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace cg {

/// Density on the vertex grid z_i = lo + i h. Reflecting grids integrate with
/// trapezoid weights (half cells at the ends); periodic grids use full cells
/// and do not repeat the end node.
struct DensityGrid {
    double lo = 0.0;
    double h = 1.0;
    std::vector<double> p;
    std::optional<double> period;

    std::size_t size() const { return p.size(); }
    double node(std::size_t i) const { return lo + h * static_cast<double>(i); }
    double weight(std::size_t i) const;
    double mass() const;
    void normalize();

    /// Samples f on the nodes of the SDE's grid and normalises.
    static DensityGrid on_sde_grid(const Sde1d& sde, const std::function<double(double)>& f);
    static DensityGrid from_function(double lo, double hi, std::size_t n, const std::function<double(double)>& f);
};

struct FpSnapshot {
    double t = 0.0;
    DensityGrid density;
};

struct FpResult {
    std::vector<FpSnapshot> snapshots;
    double max_mass_error = 0.0; ///< largest |mass - initial mass| over all steps
    double max_step_mass_change = 0.0;
    std::size_t steps = 0;
};

/// Crank-Nicolson in time, Scharfetter-Gummel fluxes in space, zero flux at
/// the ends of a reflecting grid. The first two steps are each replaced by two
/// backward-Euler half steps. A snapshot is stored every `every` steps (and at
/// the final time). Throws NumericalError if any value drops below -1e-10.
FpResult solve_fp(const Sde1d& sde, const DensityGrid& init, double dt, double t_final, std::size_t every = 0);

/// Discrete stationary density of the same scheme (zero flux through every face).
DensityGrid stationary_density(const Sde1d& sde, const DensityGrid& grid);

/// Integral of p log(p / q); +infinity when q vanishes where p does not.
double relative_entropy(const DensityGrid& p, const DensityGrid& q);
/// (1/2) integral |p - q|.
double total_variation(const DensityGrid& p, const DensityGrid& q);

struct StationarityReport {
    double tv_histogram_fp = 0.0;
    double tv_histogram_boltzmann = 0.0;
    double tv_fp_boltzmann = 0.0;
    DensityGrid histogram;
    DensityGrid fp;
    DensityGrid boltzmann;
};

struct StationarityConfig {
    TrajectoryConfig traj{.dt = 1e-3, .steps = 5'000'000, .seed = 99, .burn_in = 100'000, .thinning = 1};
    double fp_dt = 1e-2;
    double fp_t_final = 100.0;
    std::optional<std::vector<double>> q0;
};

/// Compares the xi histogram of an independent full-dynamics run, the long-time
/// Fokker-Planck solution of the effective SDE, and exp(-beta A) / Z from the
/// table, on the table's usable bins.
StationarityReport marginal_stationarity_check(const MolecularSystem& s, const ReactionCoordinate& rc,
                                               const CoefficientTable& table, const StationarityConfig& cfg);

} // namespace cg
