#include "cg/transfer_operator.hpp"

#include "cg/error.hpp"
#include "cg/quadrature.hpp"
#include "cg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_pair(const PairPotential& p, double y)
{
    const PairValue v = p.eval(y);
    return v.infinite ? std::numeric_limits<double>::infinity() : v.value;
}

void matvec(const std::vector<double>& a, std::size_t n, const std::vector<double>& x, std::vector<double>& out)
{
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = &a[i * n];
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += row[j] * x[j];
        out[i] = s;
    }
}

double norm2(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

YGrid resolve_grid(const PairPotential& w1, const PairPotential& w2, double beta, double xi, const YGrid& grid)
{
    if (!(beta > 0.0)) throw ConfigError("beta must be positive");
    if (grid.n < 3) throw ConfigError("kernel grid needs at least three nodes");
    const bool has_w2 = !w2.is_zero();
    LogDensity log_f = [&](double y) {
        double e = beta * log_pair(w1, y);
        if (has_w2) e += beta * log_pair(w2, 2.0 * y);
        return std::isinf(e) ? kNegInf : xi * y - e;
    };
    QuadratureSpec spec;
    spec.n = grid.n;
    spec.tail_ratio = grid.tail_ratio;
    if (!grid.automatic) {
        spec.lo = grid.lo;
        spec.hi = grid.hi;
    }
    const Window win = integration_window(log_f, spec, 6.0 / std::sqrt(beta));
    YGrid out = grid;
    out.lo = win.lo;
    out.hi = win.hi;
    out.automatic = false;
    return out;
}

KernelMatrix build_kernel(const PairPotential& w1, const PairPotential& w2, double beta, double xi, const YGrid& grid)
{
    const YGrid g = resolve_grid(w1, w2, beta, xi, grid);
    const std::size_t n = g.n;
    KernelMatrix k;
    k.y = uniform_nodes(g.lo, g.hi, n);
    k.w = trapezoid_weights(g.lo, g.hi, n);
    std::vector<double> half(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = log_pair(w1, k.y[i]);
        half[i] = std::isinf(e) ? kNegInf : 0.5 * xi * k.y[i] - 0.5 * beta * e + 0.5 * std::log(k.w[i]);
    }
    const bool has_w2 = !w2.is_zero();
    std::vector<double> logs(n * n);
    double top = kNegInf;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double v = half[i] + half[j];
            if (has_w2 && std::isfinite(v)) {
                const double e = log_pair(w2, k.y[i] + k.y[j]);
                v = std::isinf(e) ? kNegInf : v - beta * e;
            }
            logs[i * n + j] = logs[j * n + i] = v;
            top = std::max(top, v);
        }
    }
    if (!std::isfinite(top)) throw NumericalError("transfer kernel vanishes on the grid");
    k.log_scale = top;
    k.entries.resize(n * n);
    for (std::size_t idx = 0; idx < n * n; ++idx) k.entries[idx] = std::exp(logs[idx] - top);
    return k;
}

Eigenpair leading_eigenpair(const std::vector<double>& a, std::size_t n, const PowerOptions& opt)
{
    if (a.size() != n * n || n == 0) throw ConfigError("matrix size mismatch");
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), u(n);
    double lambda = 0.0;
    Eigenpair out;
    for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
        matvec(a, n, v, u);
        double rq = 0.0;
        for (std::size_t i = 0; i < n; ++i) rq += v[i] * u[i];
        const double nu = norm2(u);
        if (!(nu > 0.0)) throw NumericalError("power iteration collapsed to the zero vector");
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            u[i] /= nu;
            change = std::max(change, std::abs(u[i] - v[i]));
        }
        v.swap(u);
        const bool eig_ok = it > 1 && std::abs(rq - lambda) <= opt.eigen_tolerance * std::abs(rq);
        lambda = rq;
        if (eig_ok && change <= opt.vector_tolerance) {
            out.iterations = it;
            out.lambda = lambda;
            double s = 0.0;
            for (double x : v) s += x;
            if (s < 0.0)
                for (double& x : v) x = -x;
            out.phi = v;
            return out;
        }
    }
    matvec(a, n, v, u);
    for (std::size_t i = 0; i < n; ++i) u[i] -= lambda * v[i];
    std::ostringstream os;
    os << "power iteration did not converge in " << opt.max_iterations << " iterations (residual " << norm2(u)
       << ")";
    throw NumericalError(os.str());
}

Eigenpair leading_eigenpair(const KernelMatrix& k, const PowerOptions& opt)
{
    Eigenpair out = leading_eigenpair(k.entries, k.size(), opt);
    out.log_lambda = std::log(out.lambda) + k.log_scale;
    out.psi.resize(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
        out.phi[i] = std::max(out.phi[i], 0.0);
        out.psi[i] = out.phi[i] / std::sqrt(k.w[i]);
    }
    return out;
}

double second_eigenvalue(const KernelMatrix& k, const Eigenpair& lead, std::size_t iterations)
{
    const std::size_t n = k.size();
    std::vector<double> v(n), u(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = (i % 2 ? 1.0 : -1.0) + 0.01 * static_cast<double>(i) / n;
    auto deflate = [&](std::vector<double>& x) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) d += x[i] * lead.phi[i];
        for (std::size_t i = 0; i < n; ++i) x[i] -= d * lead.phi[i];
    };
    deflate(v);
    double nv = norm2(v);
    for (double& x : v) x /= nv;
    double mu = 0.0;
    for (std::size_t it = 0; it < iterations; ++it) {
        matvec(k.entries, n, v, u);
        deflate(u);
        double rq = 0.0;
        for (std::size_t i = 0; i < n; ++i) rq += v[i] * u[i];
        const double nu = norm2(u);
        if (!(nu > 0.0)) return 0.0;
        for (std::size_t i = 0; i < n; ++i) v[i] = u[i] / nu;
        if (it > 10 && std::abs(rq - mu) <= 1e-12 * std::abs(rq)) {
            mu = rq;
            break;
        }
        mu = rq;
    }
    return std::abs(mu);
}

SpectrumResult tilted_spectrum(const PairPotential& w1, const PairPotential& w2, double beta, double xi,
                               const YGrid& grid, const PowerOptions& opt)
{
    SpectrumResult r;
    r.kernel = build_kernel(w1, w2, beta, xi, grid);
    r.pair = leading_eigenpair(r.kernel, opt);
    return r;
}

std::vector<double> uniform_xi_grid(double lo, double hi, double step)
{
    if (!(hi > lo) || !(step > 0.0)) throw ConfigError("xi grid needs hi > lo and a positive step");
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = lo + step * static_cast<double>(i);
    return xs;
}

SpectralTable log_lambda_curve(const PairPotential& w1, const PairPotential& w2, double beta,
                               const std::vector<double>& xi_grid, const YGrid& grid, unsigned workers,
                               bool keep_eigenfunctions)
{
    if (xi_grid.size() < 2) throw ConfigError("xi grid needs at least two points");
    for (std::size_t i = 1; i < xi_grid.size(); ++i)
        if (!(xi_grid[i] > xi_grid[i - 1])) throw ConfigError("xi grid must be increasing");
    SpectralTable t;
    t.beta = beta;
    t.xi = xi_grid;
    const std::size_t m = xi_grid.size();
    t.log_lambda.resize(m);
    t.slope.resize(m);
    if (keep_eigenfunctions) {
        t.y.resize(m);
        t.psi.resize(m);
    }
    parallel_for(m, workers, [&](std::size_t i) {
        SpectrumResult r = tilted_spectrum(w1, w2, beta, xi_grid[i], grid);
        t.log_lambda[i] = r.pair.log_lambda;
        double s = 0.0;
        for (std::size_t j = 0; j < r.kernel.size(); ++j) s += r.pair.phi[j] * r.pair.phi[j] * r.kernel.y[j];
        t.slope[i] = s;
        if (keep_eigenfunctions) {
            t.y[i] = r.kernel.y;
            t.psi[i] = r.pair.psi;
        }
    });
    return t;
}

void SpectralTable::spline(double z, double& value, double& d1, double& d2) const
{
    if (z < xi.front() || z > xi.back()) {
        std::ostringstream os;
        os << "tilt " << z << " outside the tabulated range [" << xi.front() << ", " << xi.back() << "]";
        throw NumericalError(os.str());
    }
    std::size_t k = static_cast<std::size_t>(std::upper_bound(xi.begin(), xi.end(), z) - xi.begin());
    k = std::clamp<std::size_t>(k, 1, xi.size() - 1) - 1;
    const double h = xi[k + 1] - xi[k];
    const double t = (z - xi[k]) / h;
    const double p0 = log_lambda[k], p1 = log_lambda[k + 1];
    const double m0 = slope[k] * h, m1 = slope[k + 1] * h;
    const double t2 = t * t, t3 = t2 * t;
    value = (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1;
    d1 = ((6 * t2 - 6 * t) * p0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * p1 + (3 * t2 - 2 * t) * m1) / h;
    d2 = ((12 * t - 6) * p0 + (6 * t - 4) * m0 + (-12 * t + 6) * p1 + (6 * t - 2) * m1) / (h * h);
}

double SpectralTable::log_lambda0() const
{
    double v, a, b;
    spline(0.0, v, a, b);
    return v;
}

double SpectralTable::log_Lambda(double z) const
{
    double v, a, b;
    spline(z, v, a, b);
    return v - log_lambda0();
}

} // namespace cg
