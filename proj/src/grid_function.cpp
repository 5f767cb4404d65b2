#include "cg/grid_function.hpp"

#include "cg/error.hpp"

#include <cmath>

namespace cg {

GridFunction::GridFunction(double lo, double hi, std::vector<double> values, std::optional<double> period)
    : lo_(lo), hi_(hi), values_(std::move(values)), period_(period)
{
    if (values_.size() < 2) throw ConfigError("grid function needs at least two nodes");
    if (!(hi > lo)) throw ConfigError("grid function needs hi > lo");
    h_ = (hi - lo) / static_cast<double>(values_.size() - 1);
    if (period_ && std::abs(*period_ - (hi - lo) - h_) > 1e-9 * *period_)
        throw ConfigError("periodic grid must cover one period without repeating the end node");
}

double GridFunction::slope(double z) const
{
    std::size_t i;
    double t;
    locate(z, i, t);
    return (values_[next(i)] - values_[i]) / h_;
}

} // namespace cg
