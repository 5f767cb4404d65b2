#include "cg/quadrature.hpp"

#include "cg/error.hpp"

#include <algorithm>
#include <sstream>

namespace cg {

namespace {

constexpr int kMaxDoublings = 40;

/// Location of the largest value of log_f, scanning outward until the maximum
/// is interior to the scanned range.
double locate_mode(const LogDensity& log_f, double scale)
{
    double half = std::max(64.0, 8.0 * scale);
    for (int attempt = 0; attempt < kMaxDoublings; ++attempt) {
        const std::size_t n = 20001;
        double best = -std::numeric_limits<double>::infinity();
        double arg = 0.0;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double y = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(n - 1);
            const double v = log_f(y);
            if (v > best) {
                best = v;
                arg = y;
                best_i = i;
            }
        }
        if (!std::isfinite(best)) throw NumericalError("weight vanishes everywhere on the probed range");
        if (best_i != 0 && best_i != n - 1) {
            // refine on a local grid
            const double h = 2.0 * half / static_cast<double>(n - 1);
            double lo = arg - h, hi = arg + h;
            for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(arg)); ++it) {
                const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
                if (log_f(m1) < log_f(m2))
                    lo = m1;
                else
                    hi = m2;
            }
            return 0.5 * (lo + hi);
        }
        half *= 2.0;
    }
    throw NumericalError("weight is not integrable: its maximum escapes every probed window");
}

double grid_max(const LogDensity& log_f, double lo, double hi, std::size_t n)
{
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        best = std::max(best, log_f(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1)));
    return best;
}

} // namespace

Window integration_window(const LogDensity& log_f, const QuadratureSpec& spec, double scale)
{
    const double log_ratio = std::log(spec.tail_ratio);
    if (!spec.automatic()) {
        if (!(spec.lo < spec.hi)) throw ConfigError("quadrature window needs lo < hi");
        const double top = grid_max(log_f, spec.lo, spec.hi, std::max<std::size_t>(spec.n, 3));
        const double left = log_f(spec.lo), right = log_f(spec.hi);
        if (left - top > log_ratio || right - top > log_ratio) {
            std::ostringstream os;
            os << "quadrature window [" << spec.lo << ", " << spec.hi
               << "] truncates the weight (endpoint ratio test failed)";
            throw NumericalError(os.str());
        }
        return {spec.lo, spec.hi};
    }
    const double mode = locate_mode(log_f, scale);
    const double top = log_f(mode);
    double left = scale, right = scale;
    for (int i = 0; i < kMaxDoublings && log_f(mode - left) - top > log_ratio; ++i) left *= 2.0;
    for (int i = 0; i < kMaxDoublings && log_f(mode + right) - top > log_ratio; ++i) right *= 2.0;
    if (log_f(mode - left) - top > log_ratio || log_f(mode + right) - top > log_ratio)
        throw NumericalError("weight is not integrable: tails do not decay (endpoint ratio test)");
    return {mode - left, mode + right};
}

std::vector<double> uniform_nodes(double lo, double hi, std::size_t n)
{
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return y;
}

std::vector<double> simpson_weights(double lo, double hi, std::size_t n)
{
    if (n < 3 || n % 2 == 0) throw ConfigError("Simpson rule needs an odd node count >= 3");
    const double h = (hi - lo) / static_cast<double>(n - 1);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    for (double& v : w) v *= h / 3.0;
    return w;
}

std::vector<double> trapezoid_weights(double lo, double hi, std::size_t n)
{
    if (n < 2) throw ConfigError("trapezoid rule needs at least two nodes");
    const double h = (hi - lo) / static_cast<double>(n - 1);
    std::vector<double> w(n, h);
    w.front() = w.back() = 0.5 * h;
    return w;
}

Moments weight_moments(const LogDensity& log_f, const QuadratureSpec& spec, double scale)
{
    Moments out;
    out.window = integration_window(log_f, spec, scale);
    std::size_t n = std::max<std::size_t>(spec.n, 3);
    if (n % 2 == 0) ++n;
    const auto y = uniform_nodes(out.window.lo, out.window.hi, n);
    const auto w = simpson_weights(out.window.lo, out.window.hi, n);
    std::vector<double> g(n);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = log_f(y[i]);
        top = std::max(top, g[i]);
    }
    double z = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = std::isfinite(g[i]) ? w[i] * std::exp(g[i] - top) : 0.0;
        z += g[i];
        m1 += g[i] * y[i];
    }
    out.mean = m1 / z;
    double m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) m2 += g[i] * (y[i] - out.mean) * (y[i] - out.mean);
    out.variance = m2 / z;
    out.log_norm = std::log(z) + top;
    return out;
}

} // namespace cg
