#pragma once

// Independent brute-force reference computations used only by the tests.

#include "cg/potentials.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

struct SymmetricEigen {
    std::vector<double> values;  ///< descending
    std::vector<double> vectors; ///< column k (row-major n x n) belongs to values[k]
};

/// Cyclic Jacobi rotations on a dense symmetric matrix.
SymmetricEigen jacobi(std::vector<double> a, std::size_t n, double tol = 1e-15);

/// Composite trapezoid rule with n nodes.
double trapezoid(const std::function<double(double)>& f, double lo, double hi, std::size_t n);

struct GridMax {
    double value = 0.0;
    double argmax = 0.0;
};
/// max over xi in {lo, lo + step, ...} of xi x - g(xi), refined by a parabola
/// through the best three grid points.
GridMax legendre_grid(const std::function<double(double)>& g, double x, double lo, double hi, double step);

/// Mean end force of the clamped three-bond chain by nested trapezoid
/// quadrature over the two interior positions.
double three_bond_force(const cg::PairPotential& w1, const cg::PairPotential& w2, double beta, double x,
                        std::size_t n = 801, double half_width = 3.0);

/// Dense symmetric kernel, its leading eigenpair by Jacobi, and the mean bond
/// length sum w y psi^2.
struct DenseSpectrum {
    double log_lambda = 0.0;
    double mean_bond = 0.0;
    std::vector<double> y;
    std::vector<double> psi;
};
DenseSpectrum dense_spectrum(const cg::PairPotential& w1, const cg::PairPotential& w2, double beta, double xi,
                             double lo, double hi, std::size_t n);

/// N * Var(mean) from independent runs of the tilted bond chain, each started
/// in its stationary law; returns (estimate, 95% half-width).
std::pair<double, double> ensemble_variance(const cg::PairPotential& w1, const cg::PairPotential& w2, double beta,
                                            double xi, double lo, double hi, std::size_t n, std::size_t chains,
                                            std::size_t length, std::uint64_t seed);

/// Total-variation distance between a histogram (counts per cell) and exp(-V)
/// integrated over the same cells of a 2D grid.
double tv_histogram_2d(const std::vector<double>& counts, std::size_t nx, std::size_t ny, double x0, double x1,
                       double y0, double y1, const std::function<double(double, double)>& log_density);

} // namespace oracle

namespace oracle {

/// Integral of exp(log_density) over each cell [lo + i w, lo + (i + 1) w].
std::vector<double> cell_masses(const std::function<double(double)>& log_density, double lo, double width,
                                std::size_t n, std::size_t sub = 400);

/// Average of f under exp(log_density) within each cell.
std::vector<double> cell_averages(const std::function<double(double)>& f,
                                  const std::function<double(double)>& log_density, double lo, double width,
                                  std::size_t n, std::size_t sub = 400);

} // namespace oracle
