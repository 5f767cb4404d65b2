#include "cg/chain_nn.hpp"

#include "cg/error.hpp"

#include <cmath>
#include <sstream>

namespace cg {

void ChainModelNN::validate() const
{
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive and finite");
}

namespace {

LogDensity tilted_weight(const ChainModelNN& m, double xi)
{
    return [&m, xi](double y) {
        const PairValue p = m.W.eval(y);
        if (p.infinite) return -std::numeric_limits<double>::infinity();
        return xi * y - m.beta * p.value;
    };
}

double start_scale(double beta) { return 6.0 / std::sqrt(beta); }

} // namespace

double strain_for_stress_nn(const ChainModelNN& m, double f, const QuadratureSpec& quad)
{
    m.validate();
    return weight_moments(tilted_weight(m, m.beta * f), quad, start_scale(m.beta)).mean;
}

TiltedLog tilted_log_mgf(const ChainModelNN& m, double xi, const QuadratureSpec& quad)
{
    m.validate();
    const Moments base = weight_moments(tilted_weight(m, 0.0), quad, start_scale(m.beta));
    const Moments tilt = weight_moments(tilted_weight(m, xi), quad, start_scale(m.beta));
    return {tilt.log_norm - base.log_norm, tilt.mean, tilt.variance};
}

FreeEnergyPoint free_energy_limit_nn(const ChainModelNN& m, double x, const QuadratureSpec& quad,
                                     const LegendreOptions& opt)
{
    m.validate();
    const double base = weight_moments(tilted_weight(m, 0.0), quad, start_scale(m.beta)).log_norm;
    auto eval = [&](double xi) {
        const Moments t = weight_moments(tilted_weight(m, xi), quad, start_scale(m.beta));
        return TiltedLog{t.log_norm - base, t.mean, t.variance};
    };

    // Gaussian guess: xi0 = beta W''(x) (x - y0), y0 the untilted mean
    const double h = 1e-4;
    const PairValue wp = m.W.eval(x + h), wm = m.W.eval(x - h);
    double xi = 0.0;
    if (!wp.infinite && !wm.infinite) {
        const double curv = (wp.derivative - wm.derivative) / (2.0 * h);
        xi = m.beta * curv * (x - eval(0.0).mean);
        if (!std::isfinite(xi) || std::abs(xi) > opt.xi_limit) xi = 0.0;
    }

    // bracket: slope x - mean(xi) is decreasing in xi
    TiltedLog cur = eval(xi);
    double lo = xi, hi = xi;
    double slope = x - cur.mean;
    if (slope == 0.0) return {(xi * x - cur.log_mgf) / m.beta, xi / m.beta, xi};
    double step = std::max(1.0, std::abs(xi));
    auto fail = [&]() {
        std::ostringstream os;
        os << "no maximiser of the Legendre dual found for x=" << x << " within |xi| <= " << opt.xi_limit;
        return NumericalError(os.str());
    };
    if (slope > 0.0) {
        for (;;) {
            hi = lo + step;
            if (hi > opt.xi_limit) throw fail();
            if (x - eval(hi).mean < 0.0) break;
            lo = hi;
            step *= 2.0;
        }
    } else {
        for (;;) {
            lo = hi - step;
            if (lo < -opt.xi_limit) throw fail();
            if (x - eval(lo).mean > 0.0) break;
            hi = lo;
            step *= 2.0;
        }
    }

    xi = 0.5 * (lo + hi);
    for (int it = 0; it < opt.max_iterations; ++it) {
        cur = eval(xi);
        slope = x - cur.mean;
        if (slope > 0.0)
            lo = xi;
        else
            hi = xi;
        double next = cur.variance > 0.0 ? xi + slope / cur.variance : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double delta = next - xi;
        xi = next;
        if (std::abs(delta) < opt.tolerance || hi - lo < opt.tolerance) {
            cur = eval(xi);
            return {(xi * x - cur.log_mgf) / m.beta, xi / m.beta, xi};
        }
    }
    throw NumericalError("Legendre Newton iteration did not converge");
}

MeanEstimate reference_force_mc_nn(const ChainModelNN& m, double x, std::size_t N, const ChainMcConfig& cfg)
{
    m.validate();
    return chain_force_clamped(m.W, PairPotential::zero(), m.beta, x, N, cfg).force;
}

std::vector<MeanEstimate> bond_forces_free_end_nn(const ChainModelNN& m, double f, std::size_t N,
                                                  const ChainMcConfig& cfg)
{
    m.validate();
    return chain_force_free_end(m.W, m.beta, f, N, cfg).per_bond;
}

} // namespace cg
