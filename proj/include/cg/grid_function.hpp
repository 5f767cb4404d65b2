#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace cg {

/// Values on a uniform grid z_i = lo + i h with linear interpolation. Outside
/// [lo, hi] the end values are used, unless the function is periodic, in which
/// case the grid covers one period [lo, lo + P) and lookups wrap.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(double lo, double hi, std::vector<double> values, std::optional<double> period = std::nullopt);

    double operator()(double z) const
    {
        std::size_t i;
        double t;
        locate(z, i, t);
        return (1.0 - t) * values_[i] + t * values_[next(i)];
    }
    /// Slope of the linear interpolant at z (one-sided at nodes).
    double slope(double z) const;

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double step() const { return h_; }
    std::size_t size() const { return values_.size(); }
    double node(std::size_t i) const { return lo_ + h_ * static_cast<double>(i); }
    const std::vector<double>& values() const { return values_; }
    std::optional<double> period() const { return period_; }

private:
    std::size_t next(std::size_t i) const { return (period_ && i + 1 == values_.size()) ? 0 : i + 1; }

    void locate(double z, std::size_t& i, double& t) const
    {
        const std::size_t n = values_.size();
        if (period_) {
            double s = std::fmod(z - lo_, *period_);
            if (s < 0.0) s += *period_;
            const double u = s / h_;
            i = static_cast<std::size_t>(u);
            if (i >= n) i = n - 1;
            t = u - static_cast<double>(i);
            return;
        }
        if (z <= lo_) {
            i = 0;
            t = 0.0;
            return;
        }
        if (z >= hi_) {
            i = n - 2;
            t = 1.0;
            return;
        }
        const double u = (z - lo_) / h_;
        i = static_cast<std::size_t>(u);
        if (i > n - 2) i = n - 2;
        t = u - static_cast<double>(i);
    }

    double lo_ = 0.0;
    double hi_ = 1.0;
    double h_ = 1.0;
    std::vector<double> values_;
    std::optional<double> period_;
};

} // namespace cg
