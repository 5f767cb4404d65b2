#pragma once

#include "cg/chain_sampler.hpp"
#include "cg/potentials.hpp"
#include "cg/stats.hpp"
#include "cg/transfer_operator.hpp"

#include <optional>
#include <vector>

namespace cg {

struct ChainModelNNN {
    PairPotential W1;
    PairPotential W2;
    double beta = 1.0;

    void validate() const;
};

/// Mean bond length sum w y psi^2 of the leading eigenfunction at tilt beta f.
double strain_for_stress_nnn(const ChainModelNNN& m, double f, const YGrid& grid = {});

struct NnnForcePoint {
    double F_prime = 0.0;
    double xi = 0.0;
};

/// Maximiser of xi x - log Lambda(xi) on the spline of the table; F' = xi / beta.
NnnForcePoint free_energy_limit_nnn(const ChainModelNNN& m, double x, const SpectralTable& table);

/// Default tilt range used when a table is built on the fly.
SpectralTable default_spectral_table(const ChainModelNNN& m, const YGrid& grid = {}, double xi_lo = -12.0,
                                     double xi_hi = 12.0, double xi_step = 0.05, unsigned workers = 0);

/// Table on [-12, 12] widened by factors of 1.5 until its strain range covers
/// [x_lo, x_hi].
SpectralTable spectral_table_covering(const ChainModelNNN& m, double x_lo, double x_hi, const YGrid& grid = {},
                                      double xi_step = 0.05, unsigned workers = 0);

struct VarianceOptions {
    std::size_t samples = 1'000'000;
    /// 0 picks batches of 20 integrated autocorrelation times (at least 20 steps).
    std::size_t batches = 0;
    std::uint64_t seed = 1;
    double instability = 0.2; ///< relative gap between half-run estimates that raises the flag
};

struct VarianceEstimate {
    double sigma2 = 0.0;
    double half_width = 0.0;
    double mean = 0.0;      ///< sample mean of the bond length along the chain
    double first_half = 0.0;
    double second_half = 0.0;
    bool insufficient_samples = false;
    std::size_t batch_length = 0;
    double autocorrelation_time = 1.0;
};

/// Discrete Markov chain on the kernel grid with transition
/// P_ij = M_ij phi_j / (lambda phi_i) and stationary law phi^2.
class BondChain {
public:
    BondChain(const KernelMatrix& k, const Eigenpair& lead);

    std::size_t size() const { return y_.size(); }
    double node(std::size_t i) const { return y_[i]; }
    std::size_t sample_stationary(double u) const;
    std::size_t step(std::size_t from, double u) const;
    const std::vector<double>& stationary() const { return pi_; }

private:
    std::vector<double> y_;
    std::vector<double> pi_;
    std::vector<double> pi_cdf_;
    std::vector<double> cdf_; ///< row-major cumulative transition rows
};

/// Asymptotic variance of the bond length under the tilted chain at stress f.
VarianceEstimate asymptotic_variance_nnn(const ChainModelNNN& m, double f, const VarianceOptions& opt = {},
                                         const YGrid& grid = {});

MeanEstimate reference_force_mc_nnn(const ChainModelNNN& m, double x, std::size_t N, const ChainMcConfig& cfg);

struct ZeroTResult {
    double phi = 0.0;
    double phi_prime = 0.0;
    std::optional<double> J_N;
    std::vector<double> minimizer; ///< unscaled positions 0..N when J_N is computed
    double upper_bound = 0.0;      ///< W1(x) + (N-1)/N W2(2x)
    bool convex_on_window = true;  ///< W1 and phi convex on [x-1, x+1] by second differences
    std::size_t iterations = 0;
};

struct DescentOptions {
    double gradient_tolerance = 1e-10;
    std::size_t max_iterations = 5'000'000;
};

/// phi(x) = W1(x) + W2(2x) and, when N is given, the minimal energy per bond of
/// the clamped chain by steepest descent with backtracking from the affine state.
ZeroTResult zero_temperature(const ChainModelNNN& m, double x, std::optional<std::size_t> N = std::nullopt,
                             const DescentOptions& opt = {});

/// Range of exp(-beta W1 / 2) / psi over the grid at zero tilt (diagnostic).
std::pair<double, double> boundedness_ratio_range(const ChainModelNNN& m, const YGrid& grid = {});

} // namespace cg
