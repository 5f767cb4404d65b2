#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace cg {

/// One-dimensional integration domain. When lo/hi are left as NaN the window is
/// located automatically around the mode of the integrand and widened until the
/// endpoint ratio test passes.
struct QuadratureSpec {
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = 4001; ///< number of nodes (forced odd for Simpson)
    /// Endpoint ratio: integrand(end) / max must be below this value.
    double tail_ratio = 1e-13;

    bool automatic() const { return std::isnan(lo) || std::isnan(hi); }
};

struct Window {
    double lo = 0.0;
    double hi = 0.0;
};

/// Log of a non-negative integrand; -infinity marks excluded regions.
using LogDensity = std::function<double(double)>;

/// Finds [lo, hi] holding the integrand's mass, or validates an explicit one.
/// `scale` is the initial half-width around the mode. Throws NumericalError if
/// the tails never drop below the endpoint ratio (non-integrable weight).
Window integration_window(const LogDensity& log_f, const QuadratureSpec& spec, double scale);

std::vector<double> uniform_nodes(double lo, double hi, std::size_t n);
std::vector<double> simpson_weights(double lo, double hi, std::size_t n);
std::vector<double> trapezoid_weights(double lo, double hi, std::size_t n);

/// Normalising constant, mean and variance of the weight exp(log_f).
struct Moments {
    double log_norm = 0.0; ///< log of the integral of exp(log_f)
    double mean = 0.0;
    double variance = 0.0;
    Window window;
};

/// Moments by composite Simpson on the (automatic or explicit) window.
Moments weight_moments(const LogDensity& log_f, const QuadratureSpec& spec, double scale);

} // namespace cg
