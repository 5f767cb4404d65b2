#pragma once

#include "cg/grid_function.hpp"
#include "cg/potentials.hpp"
#include "cg/sde.hpp"
#include "cg/trajectory.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cg {

enum class CoefficientPath { Direct, Identity };
std::string to_string(CoefficientPath p);
CoefficientPath parse_path(const std::string& s);

/// Coarse-grained coefficients on a uniform grid of bin centres. The *_hw
/// vectors are 95% half-widths from batch-to-batch spread.
struct CoefficientTable {
    std::vector<double> z;
    std::vector<double> A;
    std::vector<double> A_prime;
    std::vector<double> b;
    std::vector<double> sigma2;
    std::vector<double> count;
    std::vector<bool> mask; ///< true = usable bin
    std::vector<double> A_prime_hw;
    std::vector<double> b_hw;
    std::vector<double> sigma2_hw;
    /// Direct-path drift and its half-width (filled whenever a laplacian exists).
    std::vector<double> b_direct;
    std::vector<double> b_direct_hw;
    double beta = 1.0;
    double lo = 0.0; ///< left edge of the first bin
    double width = 0.0;
    std::optional<double> period;
    CoefficientPath provenance = CoefficientPath::Identity;
    std::string system;
    std::string rc;

    std::size_t size() const { return z.size(); }
    void validate() const;
};

struct CoefficientConfig {
    TrajectoryConfig traj{.dt = 1e-3, .steps = 10'000'000, .seed = 1, .burn_in = 100'000, .thinning = 1};
    std::size_t bins = 256;
    std::optional<double> lo; ///< histogram range; default from pilot quantiles
    std::optional<double> hi;
    double quantile = 1e-3;   ///< pilot quantile trimmed on each side
    std::uint64_t pilot_steps = 1'000'000;
    std::size_t min_count = 100;
    std::size_t batches = 32;
    std::size_t chains = 1; ///< independent trajectories, merged
    unsigned workers = 0;
    CoefficientPath path = CoefficientPath::Identity;
    /// Optional prior table whose free energy is used as a flattening bias.
    const CoefficientTable* bias = nullptr;
    std::optional<std::vector<double>> q0;
};

/// Histogram free energy, mean force, diffusion sigma^2 = E|grad xi|^2 and
/// drift b per bin from long equilibrium trajectories.
CoefficientTable estimate_coefficients(const MolecularSystem& s, const ReactionCoordinate& rc, double beta,
                                       const CoefficientConfig& cfg);

struct PathAgreement {
    std::size_t bins = 0;      ///< bins with at least min_count samples
    std::size_t within = 0;    ///< bins where ratio <= factor
    double worst_ratio = 0.0;
    double factor = 1.0;       ///< simultaneous (Bonferroni) widening of the 95% intervals
    bool agree() const { return bins > 0 && within == bins; }
};

/// Bin-wise |b - b_direct| / (b_hw + b_direct_hw) on well-populated bins. The
/// per-bin 95% intervals are widened to hold simultaneously over all compared bins.
PathAgreement compare_paths(const CoefficientTable& t, double min_count = 1000.0);

/// Piecewise-linear free energy of a table and its cell slopes, as a bias.
XiBias bias_from_table(const CoefficientTable& t, const ReactionCoordinate& rc);

/// Effective (drift b, diffusion sigma) or free-energy (drift -A', unit
/// diffusion) SDE on the contiguous unmasked part of the table.
Sde1d make_sde(const CoefficientTable& t, DynamicsKind kind);

/// Normalised exp(-beta A) on the unmasked bins of the table (zero elsewhere).
std::vector<double> boltzmann_density(const CoefficientTable& t);

struct KramersEstimate {
    double delta_A = 0.0;
    double omega_sp = 0.0;
    double omega_well = 0.0;
    double z_sp = 0.0;
    double z_well = 0.0;
    double sigma_sp = 1.0;
    double sigma_well = 1.0;
    double tau0 = 0.0;

    double predict(double beta) const { return tau0 * std::exp(beta * delta_A); }
};

struct Profile {
    std::vector<double> z; ///< increasing, not necessarily uniform
    std::vector<double> A;
};

/// Samples f on [lo, hi] with n nodes.
Profile tabulate_profile(const std::function<double(double)>& f, double lo, double hi, std::size_t n);

/// Barrier and curvatures from 7-point quadratic fits around the nodes nearest
/// to z_well and z_sp (optionally moved to the extremal node within +-search).
KramersEstimate kramers_time(const Profile& A, double z_well, double z_sp,
                             const std::optional<std::function<double(double)>>& sigma = std::nullopt,
                             double search = 0.0);

struct ArrheniusPoint {
    double beta = 1.0;
    double tau = 1.0;
    double tau_error = 0.0; ///< half-width; 0 = equal weights
};

struct ArrheniusFit {
    double tau0 = 0.0;
    double s = 0.0;
    double s_error = 0.0;      ///< 1.96 standard error of the slope (weighted, when errors given)
    double log_tau0_error = 0.0;
    std::vector<double> residuals; ///< ln tau - fit
};

/// Weighted least squares of ln tau = ln tau0 + s beta.
ArrheniusFit fit_arrhenius(const std::vector<ArrheniusPoint>& points);

struct RescaledProfile {
    std::vector<double> z;
    std::vector<double> h;             ///< h(z) = integral_0^z 1/sigma
    std::vector<double> A;             ///< A(z) = tilde A(h(z))
    std::vector<double> A_prime_tilde; ///< sigma(z) A'(z)
};

/// Map h with h' = 1/sigma and the free energy expressed in h.
RescaledProfile rescale_by_sigma(const CoefficientTable& t);

struct BoundConstants {
    double m = 0.0;
    double M = 0.0;
    double kappa = 0.0;
    double lambda = 0.0;
    std::size_t samples = 0;
};

/// Empirical extremes over a sample set: min/max |grad xi|, max tangential
/// derivative of the local mean force, and max relative deviation of |grad xi|^2
/// from the table's sigma^2.
BoundConstants entropy_bound_constants(const MolecularSystem& s, const ReactionCoordinate& rc, double beta,
                                       const std::vector<std::vector<double>>& samples,
                                       const CoefficientTable* table = nullptr);

/// Local mean force grad V . grad xi / |grad xi|^2 - div(grad xi / |grad xi|^2) / beta
/// (divergence by central differences).
double local_mean_force(const MolecularSystem& s, const ReactionCoordinate& rc, double beta,
                        std::span<const double> q);

} // namespace cg
