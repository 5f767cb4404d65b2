#pragma once

#include "cg/potentials.hpp"

#include <cstddef>
#include <vector>

namespace cg {

/// Uniform y grid for the transfer kernel. `n` nodes on [lo, hi]; when
/// `automatic` is set lo/hi are chosen per tilt from the tail test.
struct YGrid {
    double lo = -8.0;
    double hi = 8.0;
    std::size_t n = 400;
    bool automatic = true;
    /// exp(xi y - beta W1(y) - beta W2(2y)) at the ends, relative to its max.
    double tail_ratio = 1e-20;
};

/// M_ij = sqrt(w_i) sqrt(w_j) K(y_i, y_j), stored as exp(log_scale) * entries.
struct KernelMatrix {
    std::vector<double> y;
    std::vector<double> w;
    std::vector<double> entries; ///< row-major n x n
    double log_scale = 0.0;

    std::size_t size() const { return y.size(); }
    double at(std::size_t i, std::size_t j) const { return entries[i * y.size() + j]; }
};

/// Grid actually used for tilt xi (explicit grids are checked against the
/// tail test; automatic ones are located from it).
YGrid resolve_grid(const PairPotential& w1, const PairPotential& w2, double beta, double xi, const YGrid& grid);

/// Symmetric discretisation of the tilted kernel
/// K(t, y) = exp(xi (t + y) / 2 - beta W2(t + y) - beta W1(t) / 2 - beta W1(y) / 2).
KernelMatrix build_kernel(const PairPotential& w1, const PairPotential& w2, double beta, double xi,
                          const YGrid& grid);

struct PowerOptions {
    double eigen_tolerance = 1e-13;  ///< relative change of the Rayleigh quotient
    double vector_tolerance = 1e-12; ///< max-norm change of the unit eigenvector
    std::size_t max_iterations = 100'000;
};

struct Eigenpair {
    double lambda = 0.0;      ///< eigenvalue of the scaled entries
    double log_lambda = 0.0;  ///< log of the true eigenvalue (log_scale added back)
    std::vector<double> phi;  ///< unit eigenvector of M, positive
    std::vector<double> psi;  ///< phi / sqrt(w): sum w psi^2 = 1
    std::size_t iterations = 0;
};

/// Leading eigenpair by power iteration from the all-ones vector.
Eigenpair leading_eigenpair(const KernelMatrix& k, const PowerOptions& opt = {});

/// Power iteration on a plain symmetric matrix (row-major); returns
/// (lambda, unit vector).
Eigenpair leading_eigenpair(const std::vector<double>& matrix, std::size_t n, const PowerOptions& opt = {});

/// Second eigenvalue magnitude by deflated power iteration (diagnostic).
double second_eigenvalue(const KernelMatrix& k, const Eigenpair& lead, std::size_t iterations = 5000);

/// Tabulated log of the leading eigenvalue as a function of the tilt.
struct SpectralTable {
    double beta = 1.0;
    std::vector<double> xi;
    std::vector<double> log_lambda; ///< log(lambda0 Lambda(xi))
    std::vector<double> slope;      ///< d log_lambda / d xi = sum w y psi^2
    std::vector<std::vector<double>> y;   ///< grid per xi
    std::vector<std::vector<double>> psi; ///< eigenfunction per xi

    /// log Lambda(xi) = log_lambda(xi) - log_lambda(0) by interpolation.
    double log_Lambda(double xi) const;
    /// Cubic Hermite interpolant of log_lambda (value, first, second derivative).
    void spline(double xi, double& value, double& d1, double& d2) const;
    double log_lambda0() const;
};

struct SpectrumResult {
    Eigenpair pair;
    KernelMatrix kernel;
};

SpectrumResult tilted_spectrum(const PairPotential& w1, const PairPotential& w2, double beta, double xi,
                               const YGrid& grid, const PowerOptions& opt = {});

SpectralTable log_lambda_curve(const PairPotential& w1, const PairPotential& w2, double beta,
                               const std::vector<double>& xi_grid, const YGrid& grid, unsigned workers = 0,
                               bool keep_eigenfunctions = false);

/// xi values lo, lo + step, ..., hi.
std::vector<double> uniform_xi_grid(double lo, double hi, double step);

} // namespace cg
