#include "cg/chain_nnn.hpp"

#include "cg/error.hpp"
#include "cg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cg {

void ChainModelNNN::validate() const
{
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive and finite");
}

double strain_for_stress_nnn(const ChainModelNNN& m, double f, const YGrid& grid)
{
    m.validate();
    const SpectrumResult r = tilted_spectrum(m.W1, m.W2, m.beta, m.beta * f, grid);
    double s = 0.0;
    for (std::size_t i = 0; i < r.kernel.size(); ++i) s += r.pair.phi[i] * r.pair.phi[i] * r.kernel.y[i];
    return s;
}

SpectralTable default_spectral_table(const ChainModelNNN& m, const YGrid& grid, double xi_lo, double xi_hi,
                                     double xi_step, unsigned workers)
{
    m.validate();
    return log_lambda_curve(m.W1, m.W2, m.beta, uniform_xi_grid(xi_lo, xi_hi, xi_step), grid, workers);
}

SpectralTable spectral_table_covering(const ChainModelNNN& m, double x_lo, double x_hi, const YGrid& grid,
                                      double xi_step, unsigned workers)
{
    m.validate();
    if (!(x_lo <= x_hi)) throw ConfigError("strain window needs x_lo <= x_hi");
    double lo = -12.0, hi = 12.0;
    // a small margin keeps the Newton step away from the last spline cell
    const double pad = 0.02 * std::max(1.0, x_hi - x_lo);
    for (int k = 0; k < 12 && strain_for_stress_nnn(m, hi / m.beta, grid) < x_hi + pad; ++k) hi *= 1.5;
    for (int k = 0; k < 12 && strain_for_stress_nnn(m, lo / m.beta, grid) > x_lo - pad; ++k) lo *= 1.5;
    return default_spectral_table(m, grid, lo, hi, xi_step, workers);
}

NnnForcePoint free_energy_limit_nnn(const ChainModelNNN& m, double x, const SpectralTable& table)
{
    m.validate();
    const auto& s = table.slope;
    if (!(x >= s.front() && x <= s.back())) {
        std::ostringstream os;
        os << "strain " << x << " outside the representable range [" << s.front() << ", " << s.back()
           << "] of the spectral table";
        throw NumericalError(os.str());
    }
    std::size_t k = static_cast<std::size_t>(std::lower_bound(s.begin(), s.end(), x) - s.begin());
    if (k == 0) return {table.xi.front() / m.beta, table.xi.front()};
    --k;
    double lo = table.xi[k], hi = table.xi[k + 1];
    double xi = lo + (hi - lo) * (x - s[k]) / std::max(s[k + 1] - s[k], 1e-300);
    for (int it = 0; it < 200; ++it) {
        double v, d1, d2;
        table.spline(xi, v, d1, d2);
        const double g = x - d1; // derivative of xi x - log Lambda
        if (g > 0.0)
            lo = xi;
        else
            hi = xi;
        double next = d2 > 0.0 ? xi + g / d2 : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double delta = std::abs(next - xi);
        xi = next;
        if (delta < 1e-14 * std::max(1.0, std::abs(xi)) || hi - lo < 1e-14) break;
    }
    return {xi / m.beta, xi};
}

BondChain::BondChain(const KernelMatrix& k, const Eigenpair& lead) : y_(k.y)
{
    const std::size_t n = k.size();
    pi_.resize(n);
    pi_cdf_.resize(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        pi_[i] = lead.phi[i] * lead.phi[i];
        acc += pi_[i];
        pi_cdf_[i] = acc;
    }
    for (double& c : pi_cdf_) c /= acc;
    cdf_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row += k.at(i, j) * lead.phi[j];
            cdf_[i * n + j] = row;
        }
        if (!(row > 0.0)) {
            // node with vanishing weight: never visited from the stationary law
            for (std::size_t j = 0; j < n; ++j) cdf_[i * n + j] = static_cast<double>(j + 1) / n;
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) cdf_[i * n + j] /= row;
    }
}

std::size_t BondChain::sample_stationary(double u) const
{
    const auto it = std::upper_bound(pi_cdf_.begin(), pi_cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - pi_cdf_.begin()), y_.size() - 1);
}

std::size_t BondChain::step(std::size_t from, double u) const
{
    const std::size_t n = y_.size();
    const double* row = &cdf_[from * n];
    const auto it = std::upper_bound(row, row + n, u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - row), n - 1);
}

namespace {

double batch_variance(std::span<const double> means, double batch_size)
{
    const double mu = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double s = 0.0;
    for (double v : means) s += (v - mu) * (v - mu);
    return batch_size * s / static_cast<double>(means.size() - 1);
}

/// Integrated autocorrelation time with Sokal's self-consistent window (c = 6).
double integrated_autocorrelation(std::span<const double> x)
{
    const std::size_t n = x.size();
    const double mu = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    auto cov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mu) * (x[i + lag] - mu);
        return s / static_cast<double>(n - lag);
    };
    const double c0 = cov(0);
    if (!(c0 > 0.0)) return 1.0;
    double tau = 1.0;
    for (std::size_t k = 1; k < n / 10; ++k) {
        tau += 2.0 * cov(k) / c0;
        if (static_cast<double>(k) >= 6.0 * tau) break;
    }
    return std::max(tau, 1.0);
}

} // namespace

VarianceEstimate asymptotic_variance_nnn(const ChainModelNNN& m, double f, const VarianceOptions& opt,
                                         const YGrid& grid)
{
    m.validate();
    if (opt.samples < 1000) throw ConfigError("variance run needs at least 1000 samples");
    if (opt.batches != 0 && (opt.batches < 4 || opt.samples < 2 * opt.batches))
        throw ConfigError("variance run needs >= 4 batches of >= 2 samples");
    const SpectrumResult r = tilted_spectrum(m.W1, m.W2, m.beta, m.beta * f, grid);
    const BondChain chain(r.kernel, r.pair);
    CounterRng rng(opt.seed, 0);

    std::vector<double> series(opt.samples);
    std::size_t state = chain.sample_stationary(rng.uniform());
    for (double& y : series) {
        y = chain.node(state);
        state = chain.step(state, rng.uniform());
    }

    VarianceEstimate out;
    out.autocorrelation_time = integrated_autocorrelation(series);
    std::size_t batches = opt.batches;
    if (batches == 0) {
        const auto len = std::max<std::size_t>(20, static_cast<std::size_t>(std::ceil(20.0 * out.autocorrelation_time)));
        batches = std::max<std::size_t>(4, opt.samples / len);
    }
    const std::size_t batch = opt.samples / batches;
    out.batch_length = batch;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        const std::span<const double> block(series.data() + b * batch, batch);
        means[b] = std::accumulate(block.begin(), block.end(), 0.0) / static_cast<double>(batch);
    }
    const std::span<const double> all(means);
    const double bs = static_cast<double>(batch);
    out.sigma2 = batch_variance(all, bs);
    out.half_width = kZ95 * out.sigma2 * std::sqrt(2.0 / static_cast<double>(batches - 1));
    out.mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
    out.first_half = batch_variance(all.first(batches / 2), bs);
    out.second_half = batch_variance(all.last(batches - batches / 2), bs);
    out.insufficient_samples =
        std::abs(out.first_half - out.second_half) > opt.instability * 0.5 * (out.first_half + out.second_half);
    return out;
}

MeanEstimate reference_force_mc_nnn(const ChainModelNNN& m, double x, std::size_t N, const ChainMcConfig& cfg)
{
    m.validate();
    return chain_force_clamped(m.W1, m.W2, m.beta, x, N, cfg).force;
}

namespace {

struct ChainEnergy {
    const ChainModelNNN& m;
    std::size_t n;

    /// Energy of the clamped chain; writes the gradient for atoms 1..n-1.
    double operator()(const std::vector<double>& v, std::vector<double>* grad) const
    {
        double e = 0.0;
        if (grad) std::fill(grad->begin(), grad->end(), 0.0);
        for (std::size_t i = 1; i <= n; ++i) {
            const PairValue p = m.W1.eval(v[i] - v[i - 1]);
            if (p.infinite) return std::numeric_limits<double>::infinity();
            e += p.value;
            if (grad) {
                (*grad)[i] += p.derivative;
                (*grad)[i - 1] -= p.derivative;
            }
        }
        if (!m.W2.is_zero()) {
            for (std::size_t i = 1; i + 1 <= n; ++i) {
                const PairValue p = m.W2.eval(v[i + 1] - v[i - 1]);
                if (p.infinite) return std::numeric_limits<double>::infinity();
                e += p.value;
                if (grad) {
                    (*grad)[i + 1] += p.derivative;
                    (*grad)[i - 1] -= p.derivative;
                }
            }
        }
        if (grad) (*grad)[0] = (*grad)[n] = 0.0;
        return e;
    }
};

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

ZeroTResult zero_temperature(const ChainModelNNN& m, double x, std::optional<std::size_t> N, const DescentOptions& opt)
{
    ZeroTResult out;
    const PairValue w1 = m.W1.eval(x), w2 = m.W2.eval(2.0 * x);
    if (w1.infinite || w2.infinite) throw ConfigError("strain lies in an excluded region of the potentials");
    out.phi = w1.value + w2.value;
    out.phi_prime = w1.derivative + 2.0 * w2.derivative;

    const double h = 1e-2;
    auto phi = [&](double z) { return m.W1.value(z) + m.W2.value(2.0 * z); };
    for (double z = x - 1.0 + h; z < x + 1.0 - h / 2; z += h) {
        const double c1 = m.W1.value(z - h) - 2 * m.W1.value(z) + m.W1.value(z + h);
        const double c2 = phi(z - h) - 2 * phi(z) + phi(z + h);
        if (!(c1 > 0.0) || !(c2 > 0.0)) out.convex_on_window = false;
    }
    if (!N) return out;

    const std::size_t n = *N;
    if (n < 2) throw ConfigError("chain needs at least two bonds");
    const double nd = static_cast<double>(n);
    out.upper_bound = w1.value + (nd - 1.0) / nd * w2.value;

    const ChainEnergy energy{m, n};
    std::vector<double> v(n + 1), g(n + 1), trial(n + 1), g_trial(n + 1);
    for (std::size_t i = 0; i <= n; ++i) v[i] = x * static_cast<double>(i);
    double e = energy(v, &g);
    double step = 0.1;
    std::size_t it = 0;
    for (; it < opt.max_iterations; ++it) {
        const double gg = dot(g, g);
        if (std::sqrt(gg) < opt.gradient_tolerance) break;
        double t = step;
        double e_trial = 0.0;
        bool accepted = false;
        for (int bt = 0; bt <= 80 && !accepted; ++bt, t *= 0.5) {
            for (std::size_t i = 0; i <= n; ++i) trial[i] = v[i] - t * g[i];
            e_trial = energy(trial, &g_trial);
            // near the minimum energy differences drown in rounding; fall back to the gradient norm
            accepted = e_trial <= e - 1e-4 * t * gg ||
                       (e_trial <= e + 1e-13 * std::abs(e) && dot(g_trial, g_trial) < gg);
        }
        if (!accepted) break;
        t *= 2.0;
        // next trial step from the secant (Barzilai-Borwein) estimate of the curvature
        double sy = 0.0, ss = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            const double si = trial[i] - v[i], yi = g_trial[i] - g[i];
            sy += si * yi;
            ss += si * si;
        }
        step = sy > 0.0 ? ss / sy : 2.0 * t;
        v.swap(trial);
        g.swap(g_trial);
        e = e_trial;
    }
    const double gnorm = std::sqrt(dot(g, g));
    if (!(gnorm < opt.gradient_tolerance)) {
        std::ostringstream os;
        os << "zero-temperature descent stalled with gradient norm " << gnorm;
        throw NumericalError(os.str());
    }
    out.iterations = it;
    out.J_N = e / nd;
    out.minimizer = v;
    return out;
}

std::pair<double, double> boundedness_ratio_range(const ChainModelNNN& m, const YGrid& grid)
{
    const SpectrumResult r = tilted_spectrum(m.W1, m.W2, m.beta, 0.0, grid);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < r.kernel.size(); ++i) {
        if (!(r.pair.psi[i] > 0.0)) continue;
        const double q = std::exp(-0.5 * m.beta * m.W1.value(r.kernel.y[i])) / r.pair.psi[i];
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    return {lo, hi};
}

} // namespace cg
