#include "cg/fp1d.hpp"

#include "cg/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cg {

double DensityGrid::weight(std::size_t i) const
{
    if (period) return h;
    return (i == 0 || i + 1 == p.size()) ? 0.5 * h : h;
}

double DensityGrid::mass() const
{
    double m = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) m += weight(i) * p[i];
    return m;
}

void DensityGrid::normalize()
{
    const double m = mass();
    if (!(m > 0.0)) throw NumericalError("density has no mass");
    for (double& v : p) v /= m;
}

DensityGrid DensityGrid::on_sde_grid(const Sde1d& sde, const std::function<double(double)>& f)
{
    DensityGrid g;
    g.lo = sde.drift.lo();
    g.h = sde.drift.step();
    g.period = sde.period;
    g.p.resize(sde.drift.size());
    for (std::size_t i = 0; i < g.p.size(); ++i) g.p[i] = f(g.node(i));
    g.normalize();
    return g;
}

DensityGrid DensityGrid::from_function(double lo, double hi, std::size_t n, const std::function<double(double)>& f)
{
    if (n < 3 || !(hi > lo)) throw ConfigError("density grid needs n >= 3 and hi > lo");
    DensityGrid g;
    g.lo = lo;
    g.h = (hi - lo) / static_cast<double>(n - 1);
    g.p.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.p[i] = f(g.node(i));
    g.normalize();
    return g;
}

namespace {

/// B(w) = w / (e^w - 1)
double bernoulli(double w)
{
    if (std::abs(w) < 1e-8) return 1.0 - 0.5 * w;
    return w / std::expm1(w);
}

struct Faces {
    std::vector<double> a; ///< J_f = a_f phi_left - c_f phi_right
    std::vector<double> c;
    std::vector<double> w; ///< Peclet number of the face
};

void check_grid(const Sde1d& sde, const DensityGrid& g)
{
    sde.validate();
    if (g.size() != sde.drift.size() || std::abs(g.lo - sde.drift.lo()) > 1e-12 * std::max(1.0, std::abs(g.lo)) ||
        std::abs(g.h - sde.drift.step()) > 1e-12 * g.h || g.period.has_value() != sde.period.has_value())
        throw ConfigError("density grid does not match the SDE coefficient grid");
}

Faces faces(const Sde1d& sde, std::size_t n, bool periodic)
{
    const double h = sde.drift.step();
    const auto& b = sde.drift.values();
    const auto& s = sde.sigma.values();
    const std::size_t nf = periodic ? n : n - 1;
    Faces f;
    f.a.resize(nf);
    f.c.resize(nf);
    f.w.resize(nf);
    for (std::size_t i = 0; i < nf; ++i) {
        const std::size_t j = (i + 1) % n;
        const double s2l = s[i] * s[i], s2r = s[j] * s[j];
        const double D = 0.5 * (s2l + s2r) / sde.beta;
        const double v = 0.5 * (b[i] + b[j]) - (s2r - s2l) / (sde.beta * h);
        const double w = v * h / D;
        f.w[i] = w;
        f.a[i] = D / h * bernoulli(-w);
        f.c[i] = D / h * bernoulli(w);
    }
    return f;
}

/// Solves a tridiagonal system (sub, diag, sup), optionally with cyclic
/// corner terms sub[0] (row 0, col n-1) and sup[n-1] (row n-1, col 0).
std::vector<double> solve_tridiagonal(std::vector<double> sub, std::vector<double> diag, std::vector<double> sup,
                                      std::vector<double> rhs, bool cyclic)
{
    const std::size_t n = diag.size();
    auto thomas = [n](const std::vector<double>& a, std::vector<double> b, const std::vector<double>& c,
                      std::vector<double> d) {
        for (std::size_t i = 1; i < n; ++i) {
            const double m = a[i] / b[i - 1];
            b[i] -= m * c[i - 1];
            d[i] -= m * d[i - 1];
        }
        std::vector<double> x(n);
        x[n - 1] = d[n - 1] / b[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
        return x;
    };
    if (!cyclic) return thomas(sub, diag, sup, rhs);
    // Sherman-Morrison: A = T + u v^T with u = (gamma, 0, .., 0, sup[n-1]), v = (1, 0, .., 0, sub[0] / gamma)
    const double alpha = sup[n - 1], beta_ = sub[0];
    const double gamma = -diag[0];
    diag[0] -= gamma;
    diag[n - 1] -= alpha * beta_ / gamma;
    const std::vector<double> x = thomas(sub, diag, sup, rhs);
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = alpha;
    const std::vector<double> zv = thomas(sub, diag, sup, u);
    const double fact = (x[0] + beta_ * x[n - 1] / gamma) / (1.0 + zv[0] + beta_ * zv[n - 1] / gamma);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - fact * zv[i];
    return out;
}

constexpr std::size_t kStartupSteps = 2;

} // namespace

FpResult solve_fp(const Sde1d& sde, const DensityGrid& init, double dt, double t_final, std::size_t every)
{
    check_grid(sde, init);
    if (!(dt > 0.0) || !(t_final >= 0.0)) throw ConfigError("Fokker-Planck run needs dt > 0 and t_final >= 0");
    const std::size_t n = init.size();
    const bool periodic = init.period.has_value();
    const Faces f = faces(sde, n, periodic);

    // operator rows: (L phi)_i = (lower phi_{i-1} + diag phi_i + upper phi_{i+1}) / V_i
    std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0);
    const std::size_t nf = f.a.size();
    for (std::size_t k = 0; k < nf; ++k) {
        const std::size_t i = k, j = (k + 1) % n;
        // flux through face k leaves i and enters j
        diag[i] -= f.a[k];
        upper[i] += f.c[k];
        lower[j] += f.a[k];
        diag[j] -= f.c[k];
    }
    std::vector<double> sub(n), dg(n), sup(n), esub(n), edg(n), esup(n);
    std::vector<double> isub(n), idg(n), isup(n); // backward Euler with dt / 2
    for (std::size_t i = 0; i < n; ++i) {
        const double vi = init.weight(i);
        const double r = 0.5 * dt / vi;
        sub[i] = -r * lower[i];
        dg[i] = 1.0 - r * diag[i];
        sup[i] = -r * upper[i];
        esub[i] = r * lower[i];
        edg[i] = 1.0 + r * diag[i];
        esup[i] = r * upper[i];
        isub[i] = sub[i];
        idg[i] = dg[i];
        isup[i] = sup[i];
    }

    FpResult res;
    DensityGrid cur = init;
    const double m0 = init.mass();
    double previous_mass = m0;
    res.snapshots.push_back({0.0, cur});
    const auto steps = static_cast<std::size_t>(std::llround(t_final / dt));
    std::vector<double> rhs(n);
    for (std::size_t s = 1; s <= steps; ++s) {
        if (s <= kStartupSteps) {
            // two implicit half steps damp the grid-scale modes Crank-Nicolson leaves ringing
            for (int half = 0; half < 2; ++half) cur.p = solve_tridiagonal(isub, idg, isup, cur.p, periodic);
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                double v = edg[i] * cur.p[i];
                if (i > 0)
                    v += esub[i] * cur.p[i - 1];
                else if (periodic)
                    v += esub[i] * cur.p[n - 1];
                if (i + 1 < n)
                    v += esup[i] * cur.p[i + 1];
                else if (periodic)
                    v += esup[i] * cur.p[0];
                rhs[i] = v;
            }
            cur.p = solve_tridiagonal(sub, dg, sup, rhs, periodic);
        }
        const double lowest = *std::min_element(cur.p.begin(), cur.p.end());
        if (lowest < -1e-10) {
            std::ostringstream os;
            os << "Fokker-Planck density went negative (" << lowest << ") at t=" << static_cast<double>(s) * dt
               << "; retry with dt <= " << dt / 4;
            throw NumericalError(os.str());
        }
        const double m = cur.mass();
        res.max_mass_error = std::max(res.max_mass_error, std::abs(m - m0));
        res.max_step_mass_change = std::max(res.max_step_mass_change, std::abs(m - previous_mass));
        previous_mass = m;
        if ((every && s % every == 0) || s == steps) res.snapshots.push_back({static_cast<double>(s) * dt, cur});
    }
    res.steps = steps;
    return res;
}

DensityGrid stationary_density(const Sde1d& sde, const DensityGrid& grid)
{
    check_grid(sde, grid);
    const std::size_t n = grid.size();
    const Faces f = faces(sde, n, false);
    DensityGrid out = grid;
    std::vector<double> logp(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) logp[i + 1] = logp[i] + f.w[i];
    const double top = *std::max_element(logp.begin(), logp.end());
    for (std::size_t i = 0; i < n; ++i) out.p[i] = std::exp(logp[i] - top);
    out.normalize();
    return out;
}

namespace {

void same_grid(const DensityGrid& p, const DensityGrid& q)
{
    if (p.size() != q.size() || std::abs(p.lo - q.lo) > 1e-12 * std::max(1.0, std::abs(p.lo)) ||
        std::abs(p.h - q.h) > 1e-12 * p.h || p.period.has_value() != q.period.has_value())
        throw ConfigError("densities live on different grids");
}

} // namespace

double relative_entropy(const DensityGrid& p, const DensityGrid& q)
{
    same_grid(p, q);
    double h = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.p[i] <= 0.0) continue;
        if (q.p[i] <= 0.0) return std::numeric_limits<double>::infinity();
        h += p.weight(i) * p.p[i] * std::log(p.p[i] / q.p[i]);
    }
    return h;
}

double total_variation(const DensityGrid& p, const DensityGrid& q)
{
    same_grid(p, q);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p.weight(i) * std::abs(p.p[i] - q.p[i]);
    return 0.5 * s;
}

StationarityReport marginal_stationarity_check(const MolecularSystem& s, const ReactionCoordinate& rc,
                                               const CoefficientTable& table, const StationarityConfig& cfg)
{
    table.validate();
    const Sde1d sde = make_sde(table, DynamicsKind::Effective);
    const std::size_t n = sde.drift.size();
    // usable block starts at the node matching the SDE grid
    std::size_t first = 0;
    while (std::abs(table.z[first] - sde.drift.lo()) > 1e-9 * table.width) ++first;

    StationarityReport r;
    const std::vector<double> boltz = boltzmann_density(table);
    r.boltzmann = DensityGrid::on_sde_grid(sde, [&](double z) {
        const auto i = static_cast<std::size_t>(std::llround((z - table.z[0]) / table.width));
        return boltz[i];
    });

    std::vector<double> counts(n, 0.0);
    simulate_overdamped(s, table.beta, cfg.traj, cfg.q0 ? *cfg.q0 : s.reference_configuration(),
                        [&](std::uint64_t, std::span<const double> q) {
                            double u = (rc.value(q) - table.lo) / table.width;
                            if (table.period) {
                                const double nb = static_cast<double>(table.size());
                                u = std::fmod(u, nb);
                                if (u < 0.0) u += nb;
                            }
                            if (!(u >= 0.0)) return;
                            const auto bin = static_cast<std::size_t>(u);
                            if (bin >= first && bin < first + n) counts[bin - first] += 1.0;
                        });
    r.histogram = r.boltzmann;
    for (std::size_t i = 0; i < n; ++i) r.histogram.p[i] = counts[i];
    r.histogram.normalize();

    DensityGrid init = r.boltzmann;
    std::fill(init.p.begin(), init.p.end(), 1.0);
    init.normalize();
    const FpResult fp = solve_fp(sde, init, cfg.fp_dt, cfg.fp_t_final);
    r.fp = fp.snapshots.back().density;

    r.tv_histogram_fp = total_variation(r.histogram, r.fp);
    r.tv_histogram_boltzmann = total_variation(r.histogram, r.boltzmann);
    r.tv_fp_boltzmann = total_variation(r.fp, r.boltzmann);
    return r;
}

} // namespace cg
