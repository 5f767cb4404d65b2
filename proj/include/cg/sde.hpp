#pragma once

#include "cg/grid_function.hpp"
#include "cg/potentials.hpp"
#include "cg/rng.hpp"
#include "cg/stats.hpp"
#include "cg/trajectory.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cg {

/// Extra potential -A_b(xi) added to V; `slope` holds A_b'. Conditional
/// averages at fixed xi are unaffected, only the xi marginal is flattened.
struct XiBias {
    const ReactionCoordinate* rc = nullptr;
    GridFunction value; ///< A_b
    GridFunction slope; ///< A_b'
};

/// Euler-Maruyama for dX = -grad V dt + sqrt(2 dt / beta) G.
class OverdampedStepper {
public:
    OverdampedStepper(const MolecularSystem& s, double beta, double dt, double overflow_guard = 1e6,
                      const XiBias* bias = nullptr);

    void step(std::vector<double>& q, CounterRng& rng);
    const MolecularSystem& system() const { return s_; }

private:
    const MolecularSystem& s_;
    double dt_;
    double noise_;
    double guard_;
    const XiBias* bias_;
    std::vector<double> grad_;
    std::vector<double> rc_grad_;
};

/// Runs the full dynamics from q0; `observe(step, q)` is called on every
/// thinned state after burn-in. Returns the final state. Stream 0 of cfg.seed
/// unless `stream` is given.
std::vector<double> simulate_overdamped(const MolecularSystem& s, double beta, const TrajectoryConfig& cfg,
                                        std::vector<double> q0,
                                        const std::function<void(std::uint64_t, std::span<const double>)>& observe,
                                        std::uint64_t stream = 0, const XiBias* bias = nullptr);

/// dz = b(z) dt + sqrt(2 dt / beta) sigma(z) G with linearly interpolated
/// coefficients. Outside the coefficient grid the end values are used and the
/// path is reflected at the grid ends; periodic coordinates wrap instead.
struct Sde1d {
    GridFunction drift;
    GridFunction sigma;
    double beta = 1.0;
    std::optional<double> period;

    void validate() const;
    double lo() const { return drift.lo(); }
    double hi() const { return drift.hi(); }
    /// One Euler-Maruyama step followed by reflection or wrapping.
    double step(double z, double dt, double gaussian) const;
    /// Reflection / wrap only.
    double fold(double z) const;
};

/// Region of reaction-coordinate space used as start or target well.
struct Region {
    enum class Kind { Below, Above, Near };
    Kind kind = Kind::Below;
    double threshold = 0.0;
    std::vector<double> centers; ///< Near: any of these
    double radius = 0.0;
    std::optional<double> period;

    static Region below(double t) { return {Kind::Below, t, {}, 0.0, std::nullopt}; }
    static Region above(double t) { return {Kind::Above, t, {}, 0.0, std::nullopt}; }
    static Region near(std::vector<double> c, double r, std::optional<double> period = std::nullopt)
    {
        return {Kind::Near, 0.0, std::move(c), r, period};
    }

    bool contains(double xi) const;
    std::string describe() const;
};

struct WellPair {
    Region start;
    Region target;
};

/// Start and target wells used for residence times: three-atom angle
/// theta_saddle +- 0.15, three-atom squared distance 2.4 / 1.6, butane
/// |phi| <= 0.5 to |phi -+ 2 pi / 3| <= 0.5, toy x >= 0.5 to x <= -0.5.
WellPair default_wells(const MolecularSystem& s, const ReactionCoordinate& rc);

struct HarvestResult {
    std::vector<std::vector<double>> configurations;
    std::vector<double> xi;
    double acceptance = 0.0;
    std::uint64_t steps = 0;
};

/// Equilibrium states of the full dynamics restricted to `well`: every
/// thinned state after burn-in whose xi lies in the well is kept until
/// `count` are collected. cfg.steps caps the run length.
HarvestResult harvest_well_samples(const MolecularSystem& s, const ReactionCoordinate& rc, double beta,
                                   const Region& well, std::size_t count, const TrajectoryConfig& cfg,
                                   std::optional<std::vector<double>> q0 = std::nullopt);

enum class DynamicsKind { Full, Effective, FreeEnergy };
std::string to_string(DynamicsKind k);
DynamicsKind parse_dynamics(const std::string& s);

struct ResidenceTimeReport {
    DynamicsKind kind = DynamicsKind::Full;
    std::size_t n_realizations = 0; ///< uncensored realizations entering the mean
    std::size_t censored = 0;
    double mean = 0.0;
    double half_width = 0.0;
    std::string target;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> times;
};

struct ResidenceOptions {
    double dt = 1e-3;
    std::uint64_t seed = 1;
    std::uint64_t step_cap = 1'000'000'000;
    unsigned workers = 0;
    double overflow_guard = 1e6;
};

/// First time each full-dynamics realization started from `initials` enters
/// `target`.
ResidenceTimeReport residence_times(const MolecularSystem& s, const ReactionCoordinate& rc, double beta,
                                    const std::vector<std::vector<double>>& initials, const Region& target,
                                    const ResidenceOptions& opt);

/// Same for a one-dimensional SDE started from the given points.
ResidenceTimeReport residence_times(const Sde1d& sde, DynamicsKind kind, const std::vector<double>& initials,
                                    const Region& target, const ResidenceOptions& opt);

/// Occupation histogram of a long 1D trajectory on cells centred at the
/// drift-grid nodes, normalised to a density.
std::vector<double> long_run_density(const Sde1d& sde, double z0, const TrajectoryConfig& cfg);

} // namespace cg
