#include "cg/cg_dynamics.hpp"

#include "cg/error.hpp"
#include "cg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace cg {

std::string to_string(CoefficientPath p) { return p == CoefficientPath::Direct ? "direct" : "identity"; }

CoefficientPath parse_path(const std::string& s)
{
    if (s == "direct") return CoefficientPath::Direct;
    if (s == "identity") return CoefficientPath::Identity;
    throw ConfigError("unknown coefficient path '" + s + "' (direct, identity)");
}

void CoefficientTable::validate() const
{
    const std::size_t n = z.size();
    if (n < 3) throw ConfigError("coefficient table needs at least three bins");
    for (const auto* v : {&A, &A_prime, &b, &sigma2, &count})
        if (v->size() != n) throw ConfigError("coefficient table columns have different lengths");
    if (mask.size() != n) throw ConfigError("coefficient table mask has the wrong length");
    for (std::size_t i = 0; i < n; ++i)
        if (mask[i] && !(sigma2[i] > 0.0)) throw NumericalError("non-positive sigma^2 in an unmasked bin");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BinSums {
    std::vector<double> count, grad2, drift;
    explicit BinSums(std::size_t n = 0) : count(n, 0.0), grad2(n, 0.0), drift(n, 0.0) {}
};

struct Derived {
    std::vector<double> A, A_prime, sigma2, sigma2_prime, b_identity, b_direct;
    std::vector<bool> ok;
};

std::size_t wrap_index(long i, std::size_t n) { return static_cast<std::size_t>((i % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n)); }

/// Centred differences over usable neighbours; second-order one-sided at gaps
/// and ends when two neighbours are available on that side.
void differentiate(const std::vector<double>& f, const std::vector<bool>& ok, double w, bool periodic,
                   std::vector<double>& df, std::vector<bool>& dok)
{
    const std::size_t n = f.size();
    df.assign(n, 0.0);
    dok.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (!ok[i]) continue;
        const long li = static_cast<long>(i);
        const bool has_l = periodic ? ok[wrap_index(li - 1, n)] : (i > 0 && ok[i - 1]);
        const bool has_r = periodic ? ok[wrap_index(li + 1, n)] : (i + 1 < n && ok[i + 1]);
        const double fl = has_l ? f[wrap_index(li - 1, n)] : 0.0;
        const double fr = has_r ? f[wrap_index(li + 1, n)] : 0.0;
        const bool has_rr = has_r && !periodic && i + 2 < n && ok[i + 2];
        const bool has_ll = has_l && !periodic && i >= 2 && ok[i - 2];
        if (has_l && has_r) {
            df[i] = (fr - fl) / (2.0 * w);
        } else if (has_rr) {
            df[i] = (-3.0 * f[i] + 4.0 * fr - f[i + 2]) / (2.0 * w);
        } else if (has_ll) {
            df[i] = (3.0 * f[i] - 4.0 * fl + f[i - 2]) / (2.0 * w);
        } else if (has_r) {
            df[i] = (fr - f[i]) / w;
        } else if (has_l) {
            df[i] = (f[i] - fl) / w;
        } else {
            continue;
        }
        dok[i] = true;
    }
}

Derived derive(const BinSums& s, double total, double width, double beta, bool periodic, double min_count,
               const std::vector<double>& bias_value)
{
    const std::size_t n = s.count.size();
    Derived d;
    d.A.assign(n, 0.0);
    d.sigma2.assign(n, 0.0);
    d.b_direct.assign(n, 0.0);
    d.ok.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (s.count[i] < min_count || s.count[i] <= 0.0) continue;
        d.ok[i] = true;
        d.A[i] = -std::log(s.count[i] / (total * width)) / beta + (bias_value.empty() ? 0.0 : bias_value[i]);
        d.sigma2[i] = s.grad2[i] / s.count[i];
        d.b_direct[i] = s.drift[i] / s.count[i];
    }
    std::vector<bool> aok, sok;
    differentiate(d.A, d.ok, width, periodic, d.A_prime, aok);
    differentiate(d.sigma2, d.ok, width, periodic, d.sigma2_prime, sok);
    d.b_identity.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        d.ok[i] = d.ok[i] && aok[i] && sok[i];
        if (d.ok[i]) d.b_identity[i] = d.sigma2_prime[i] / beta - d.sigma2[i] * d.A_prime[i];
    }
    return d;
}

double half_width(const std::vector<double>& values)
{
    if (values.size() < 2) return kInf;
    return independent_mean(values).half_width;
}

/// Delta-method half-width of a ratio of sums estimated from batches.
double ratio_half_width(const std::vector<double>& num, const std::vector<double>& den)
{
    const std::size_t k = num.size();
    if (k < 2) return kInf;
    const double sn = std::accumulate(num.begin(), num.end(), 0.0);
    const double sd = std::accumulate(den.begin(), den.end(), 0.0);
    if (!(sd > 0.0)) return kInf;
    const double r = sn / sd;
    double v = 0.0;
    for (std::size_t j = 0; j < k; ++j) v += (num[j] - r * den[j]) * (num[j] - r * den[j]);
    const double mean_den = sd / static_cast<double>(k);
    return kZ95 * std::sqrt(v / (static_cast<double>(k) * static_cast<double>(k - 1))) / mean_den;
}

double quantile(std::vector<double> v, double q)
{
    if (v.empty()) throw NumericalError("empty sample for quantile");
    const auto k = static_cast<std::size_t>(std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<long>(k), v.end());
    return v[k];
}

} // namespace

PathAgreement compare_paths(const CoefficientTable& t, double min_count)
{
    if (t.b_direct.size() != t.size()) throw ConfigError("table has no direct-path drift to compare");
    PathAgreement r;
    std::vector<double> ratio;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!t.mask[i] || t.count[i] < min_count) continue;
        ratio.push_back(std::abs(t.b[i] - t.b_direct[i]) / (t.b_hw[i] + t.b_direct_hw[i]));
    }
    r.bins = ratio.size();
    if (r.bins == 0) return r;
    r.factor = normal_quantile(1.0 - 0.025 / static_cast<double>(r.bins)) / kZ95;
    for (double v : ratio) {
        r.worst_ratio = std::max(r.worst_ratio, v);
        if (v <= r.factor) ++r.within;
    }
    return r;
}

XiBias bias_from_table(const CoefficientTable& t, const ReactionCoordinate& rc)
{
    t.validate();
    const std::size_t n = t.size();
    std::vector<double> slope(n, 0.0), value(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) slope[i] = t.mask[i] ? t.A_prime[i] : 0.0;
    for (std::size_t i = 1; i < n; ++i) value[i] = value[i - 1] + 0.5 * (slope[i - 1] + slope[i]) * (t.z[1] - t.z[0]);
    XiBias bias;
    bias.rc = &rc;
    bias.value = GridFunction(t.z.front(), t.z.back(), value);
    bias.slope = GridFunction(t.z.front(), t.z.back(), slope);
    return bias;
}

CoefficientTable estimate_coefficients(const MolecularSystem& s, const ReactionCoordinate& rc, double beta,
                                       const CoefficientConfig& cfg)
{
    cfg.traj.validate();
    if (rc.dof() != s.dof()) throw ConfigError("reaction coordinate does not match the system");
    if (cfg.path == CoefficientPath::Direct && !rc.has_laplacian())
        throw ConfigError("direct coefficient path needs the laplacian of '" + rc.name() +
                          "'; use the identity path");
    if (cfg.bins < 3) throw ConfigError("need at least three bins");
    if (cfg.batches < 2 || cfg.chains < 1) throw ConfigError("need at least two batches and one chain");
    const std::uint64_t production = cfg.traj.steps - cfg.traj.burn_in;
    if (production / cfg.traj.thinning < cfg.batches) throw ConfigError("too few samples for the requested batches");

    std::vector<double> q0 = cfg.q0 ? *cfg.q0 : s.reference_configuration();
    const auto period = rc.period();
    std::optional<XiBias> bias;
    if (cfg.bias) bias = bias_from_table(*cfg.bias, rc);

    // histogram range
    double lo = 0.0, hi = 0.0;
    if (period) {
        lo = -0.5 * *period;
        hi = 0.5 * *period;
    } else if (cfg.lo && cfg.hi) {
        lo = *cfg.lo;
        hi = *cfg.hi;
    } else if (cfg.bias) {
        lo = cfg.bias->lo;
        hi = cfg.bias->lo + cfg.bias->width * static_cast<double>(cfg.bias->size());
    } else {
        TrajectoryConfig pilot = cfg.traj;
        pilot.steps = cfg.traj.burn_in + cfg.pilot_steps;
        pilot.thinning = 1;
        pilot.seed = cfg.traj.seed ^ 0x5bd1e995ULL;
        std::vector<double> xs;
        xs.reserve(cfg.pilot_steps);
        simulate_overdamped(s, beta, pilot, q0, [&](std::uint64_t, std::span<const double> q) { xs.push_back(rc.value(q)); });
        lo = quantile(xs, cfg.quantile);
        hi = quantile(xs, 1.0 - cfg.quantile);
    }
    if (cfg.lo && !period) lo = *cfg.lo;
    if (cfg.hi && !period) hi = *cfg.hi;
    if (!(hi > lo)) throw NumericalError("degenerate reaction-coordinate range");

    const std::size_t nb = cfg.bins;
    const double width = (hi - lo) / static_cast<double>(nb);
    const bool want_direct = rc.has_laplacian();
    const std::size_t per_chain = cfg.batches;
    const std::uint64_t batch_len = production / per_chain;

    std::vector<std::vector<BinSums>> chains(cfg.chains, std::vector<BinSums>(per_chain, BinSums(nb)));
    parallel_for(cfg.chains, cfg.workers, [&](std::size_t c) {
        std::vector<double> grad_v(s.dof()), grad_x(s.dof());
        auto& batches = chains[c];
        simulate_overdamped(
            s, beta, cfg.traj, q0,
            [&](std::uint64_t step, std::span<const double> q) {
                const std::uint64_t k = std::min<std::uint64_t>((step - cfg.traj.burn_in - 1) / batch_len, per_chain - 1);
                const double xi = rc.value(q, grad_x);
                double u = (xi - lo) / width;
                if (period) {
                    u = std::fmod(u, static_cast<double>(nb));
                    if (u < 0.0) u += static_cast<double>(nb);
                }
                if (!(u >= 0.0 && u < static_cast<double>(nb))) return;
                const auto bin = std::min(static_cast<std::size_t>(u), nb - 1);
                double g2 = 0.0;
                for (double g : grad_x) g2 += g * g;
                BinSums& bs = batches[k];
                bs.count[bin] += 1.0;
                bs.grad2[bin] += g2;
                if (want_direct) {
                    s.energy(q, grad_v);
                    double dot = 0.0;
                    for (std::size_t i = 0; i < grad_v.size(); ++i) dot += grad_v[i] * grad_x[i];
                    bs.drift[bin] += -dot + *rc.laplacian(q) / beta;
                }
            },
            c + 1, bias ? &*bias : nullptr);
    });

    std::vector<BinSums> all_batches;
    for (auto& ch : chains)
        for (auto& b : ch) all_batches.push_back(std::move(b));
    BinSums pooled(nb);
    for (const auto& b : all_batches)
        for (std::size_t i = 0; i < nb; ++i) {
            pooled.count[i] += b.count[i];
            pooled.grad2[i] += b.grad2[i];
            pooled.drift[i] += b.drift[i];
        }
    const double total = static_cast<double>(production / cfg.traj.thinning) * static_cast<double>(cfg.chains);

    CoefficientTable t;
    t.beta = beta;
    t.lo = lo;
    t.width = width;
    t.period = period;
    t.provenance = cfg.path;
    t.system = s.name();
    t.rc = rc.name();
    t.z.resize(nb);
    for (std::size_t i = 0; i < nb; ++i) t.z[i] = lo + (static_cast<double>(i) + 0.5) * width;
    std::vector<double> bias_value;
    if (bias)
        for (double z : t.z) bias_value.push_back(bias->value(z));

    const Derived d = derive(pooled, total, width, beta, period.has_value(), static_cast<double>(cfg.min_count), bias_value);
    t.count = pooled.count;
    t.mask = d.ok;
    t.A = d.A;
    t.A_prime = d.A_prime;
    t.sigma2 = d.sigma2;
    t.b = cfg.path == CoefficientPath::Direct ? d.b_direct : d.b_identity;
    if (want_direct) t.b_direct = d.b_direct;

    // batch spread
    const double batch_total = total / static_cast<double>(all_batches.size());
    std::vector<Derived> per_batch;
    for (const auto& b : all_batches) per_batch.push_back(derive(b, batch_total, width, beta, period.has_value(), 1.0, bias_value));
    t.A_prime_hw.assign(nb, kInf);
    t.b_hw.assign(nb, kInf);
    t.sigma2_hw.assign(nb, kInf);
    if (want_direct) t.b_direct_hw.assign(nb, kInf);
    for (std::size_t i = 0; i < nb; ++i) {
        std::vector<double> ap, bi, num2, numd, den;
        for (std::size_t k = 0; k < all_batches.size(); ++k) {
            if (per_batch[k].ok[i]) {
                ap.push_back(per_batch[k].A_prime[i]);
                bi.push_back(per_batch[k].b_identity[i]);
            }
            num2.push_back(all_batches[k].grad2[i]);
            numd.push_back(all_batches[k].drift[i]);
            den.push_back(all_batches[k].count[i]);
        }
        t.A_prime_hw[i] = half_width(ap);
        t.sigma2_hw[i] = ratio_half_width(num2, den);
        const double direct_hw = want_direct ? ratio_half_width(numd, den) : kInf;
        if (want_direct) t.b_direct_hw[i] = direct_hw;
        t.b_hw[i] = cfg.path == CoefficientPath::Direct ? direct_hw : half_width(bi);
    }

    double amin = kInf;
    for (std::size_t i = 0; i < nb; ++i)
        if (t.mask[i]) amin = std::min(amin, t.A[i]);
    if (!std::isfinite(amin)) throw NumericalError("every bin is starved: no usable coefficient");
    for (std::size_t i = 0; i < nb; ++i) t.A[i] = t.mask[i] ? t.A[i] - amin : 0.0;
    t.validate();
    return t;
}

namespace {

/// [first, last] unmasked bins; throws if a masked bin lies between them.
std::pair<std::size_t, std::size_t> usable_block(const CoefficientTable& t)
{
    std::size_t first = t.size(), last = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t.mask[i]) {
            first = std::min(first, i);
            last = i;
        }
    if (first >= last) throw NumericalError("coefficient table has fewer than two usable bins");
    for (std::size_t i = first; i <= last; ++i)
        if (!t.mask[i]) {
            std::ostringstream os;
            os << "masked bin at z=" << t.z[i] << " inside the dynamical range";
            throw NumericalError(os.str());
        }
    return {first, last};
}

} // namespace

Sde1d make_sde(const CoefficientTable& t, DynamicsKind kind)
{
    t.validate();
    if (kind == DynamicsKind::Full) throw ConfigError("full dynamics has no one-dimensional SDE");
    const auto [first, last] = usable_block(t);
    std::vector<double> drift, sigma;
    for (std::size_t i = first; i <= last; ++i) {
        if (kind == DynamicsKind::Effective) {
            drift.push_back(t.b[i]);
            sigma.push_back(std::sqrt(t.sigma2[i]));
        } else {
            drift.push_back(-t.A_prime[i]);
            sigma.push_back(1.0);
        }
    }
    const bool periodic = t.period && first == 0 && last + 1 == t.size();
    const std::optional<double> period = periodic ? t.period : std::nullopt;
    Sde1d sde{GridFunction(t.z[first], t.z[last], drift, period), GridFunction(t.z[first], t.z[last], sigma, period),
              t.beta, period};
    sde.validate();
    return sde;
}

std::vector<double> boltzmann_density(const CoefficientTable& t)
{
    std::vector<double> p(t.size(), 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t.mask[i]) {
            p[i] = std::exp(-t.beta * t.A[i]);
            z += p[i] * t.width;
        }
    for (double& v : p) v /= z;
    return p;
}

Profile tabulate_profile(const std::function<double(double)>& f, double lo, double hi, std::size_t n)
{
    if (n < 7 || !(hi > lo)) throw ConfigError("profile needs at least seven nodes on a proper interval");
    Profile p;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        p.z.push_back(z);
        p.A.push_back(f(z));
    }
    return p;
}

namespace {

struct QuadFit {
    double vertex = 0.0;
    double value = 0.0;
    double curvature = 0.0; ///< second derivative
};

QuadFit fit7(const Profile& p, std::size_t c)
{
    const std::size_t n = p.z.size();
    const std::size_t start = c < 3 ? 0 : std::min(c - 3, n - 7);
    const double z0 = p.z[c];
    // normal equations for A = a + b (z - z0) + q (z - z0)^2
    double s[5] = {0, 0, 0, 0, 0}, r[3] = {0, 0, 0};
    for (std::size_t i = start; i < start + 7; ++i) {
        const double d = p.z[i] - z0;
        double pw = 1.0;
        for (int k = 0; k < 5; ++k) {
            s[k] += pw;
            if (k < 3) r[k] += pw * p.A[i];
            pw *= d;
        }
    }
    double m[3][4] = {{s[0], s[1], s[2], r[0]}, {s[1], s[2], s[3], r[1]}, {s[2], s[3], s[4], r[2]}};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int row = col + 1; row < 3; ++row)
            if (std::abs(m[row][col]) > std::abs(m[piv][col])) piv = row;
        std::swap(m[col], m[piv]);
        for (int row = 0; row < 3; ++row) {
            if (row == col) continue;
            const double f = m[row][col] / m[col][col];
            for (int k = col; k < 4; ++k) m[row][k] -= f * m[col][k];
        }
    }
    const double a = m[0][3] / m[0][0], b = m[1][3] / m[1][1], q = m[2][3] / m[2][2];
    QuadFit fit;
    fit.curvature = 2.0 * q;
    const double shift = q != 0.0 ? -b / (2.0 * q) : 0.0;
    fit.vertex = z0 + shift;
    fit.value = a + b * shift + q * shift * shift;
    return fit;
}

std::size_t nearest_node(const Profile& p, double z)
{
    const auto it = std::lower_bound(p.z.begin(), p.z.end(), z);
    std::size_t i = static_cast<std::size_t>(it - p.z.begin());
    if (i == p.z.size()) return i - 1;
    if (i > 0 && std::abs(p.z[i - 1] - z) < std::abs(p.z[i] - z)) --i;
    return i;
}

std::size_t extremal_node(const Profile& p, double z, double search, bool maximum)
{
    std::size_t best = nearest_node(p, z);
    if (search <= 0.0) return best;
    for (std::size_t i = 0; i < p.z.size(); ++i) {
        if (std::abs(p.z[i] - z) > search) continue;
        if (maximum ? p.A[i] > p.A[best] : p.A[i] < p.A[best]) best = i;
    }
    return best;
}

} // namespace

KramersEstimate kramers_time(const Profile& A, double z_well, double z_sp,
                             const std::optional<std::function<double(double)>>& sigma, double search)
{
    if (A.z.size() != A.A.size() || A.z.size() < 7) throw ConfigError("profile needs at least seven nodes");
    const QuadFit well = fit7(A, extremal_node(A, z_well, search, false));
    const QuadFit sp = fit7(A, extremal_node(A, z_sp, search, true));
    if (!(well.curvature > 0.0)) throw NumericalError("well location is not a local minimum of the free energy");
    if (!(sp.curvature < 0.0)) throw NumericalError("saddle location is not a local maximum of the free energy");
    KramersEstimate k;
    k.z_well = well.vertex;
    k.z_sp = sp.vertex;
    k.delta_A = sp.value - well.value;
    k.omega_well = std::sqrt(well.curvature);
    k.omega_sp = std::sqrt(-sp.curvature);
    k.tau0 = 2.0 * std::numbers::pi / (k.omega_sp * k.omega_well);
    if (sigma) {
        k.sigma_sp = (*sigma)(k.z_sp);
        k.sigma_well = (*sigma)(k.z_well);
        if (!(k.sigma_sp > 0.0 && k.sigma_well > 0.0)) throw NumericalError("non-positive diffusion at an extremum");
        k.tau0 /= k.sigma_sp * k.sigma_well;
    }
    return k;
}

ArrheniusFit fit_arrhenius(const std::vector<ArrheniusPoint>& points)
{
    if (points.size() < 2) throw ConfigError("Arrhenius fit needs at least two points");
    bool weighted = true;
    for (const auto& p : points) {
        if (!(p.tau > 0.0)) throw ConfigError("residence times must be positive");
        if (!(p.tau_error > 0.0)) weighted = false;
    }
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : points) {
        const double w = weighted ? std::pow(p.tau / p.tau_error, 2) : 1.0;
        const double y = std::log(p.tau);
        sw += w;
        sx += w * p.beta;
        sy += w * y;
        sxx += w * p.beta * p.beta;
        sxy += w * p.beta * y;
    }
    const double det = sw * sxx - sx * sx;
    if (!(std::abs(det) > 1e-12 * sw * sxx)) throw ConfigError("Arrhenius fit needs distinct beta values");
    ArrheniusFit fit;
    fit.s = (sw * sxy - sx * sy) / det;
    const double log_tau0 = (sy - fit.s * sx) / sw;
    fit.tau0 = std::exp(log_tau0);
    double chi2 = 0.0;
    for (const auto& p : points) {
        const double r = std::log(p.tau) - log_tau0 - fit.s * p.beta;
        fit.residuals.push_back(r);
        chi2 += (weighted ? std::pow(p.tau / p.tau_error, 2) : 1.0) * r * r;
    }
    // weighted: the errors are 95% half-widths already, so sqrt(cov) is a half-width too
    double scale = 1.0;
    if (!weighted) scale = points.size() > 2 ? kZ95 * std::sqrt(chi2 / static_cast<double>(points.size() - 2)) : 0.0;
    fit.s_error = scale * std::sqrt(sw / det);
    fit.log_tau0_error = scale * std::sqrt(sxx / det);
    return fit;
}

RescaledProfile rescale_by_sigma(const CoefficientTable& t)
{
    t.validate();
    const auto [first, last] = usable_block(t);
    RescaledProfile r;
    for (std::size_t i = first; i <= last; ++i) {
        r.z.push_back(t.z[i]);
        r.A.push_back(t.A[i]);
        r.A_prime_tilde.push_back(std::sqrt(t.sigma2[i]) * t.A_prime[i]);
    }
    const std::size_t n = r.z.size();
    std::vector<double> cum(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        cum[i] = cum[i - 1] + 0.5 * (r.z[i] - r.z[i - 1]) *
                                  (1.0 / std::sqrt(t.sigma2[first + i - 1]) + 1.0 / std::sqrt(t.sigma2[first + i]));
    // origin h(0) = 0; sigma held at its end value outside the table
    double at_zero;
    if (0.0 <= r.z.front()) {
        at_zero = -r.z.front() / std::sqrt(t.sigma2[first]);
    } else if (0.0 >= r.z.back()) {
        at_zero = cum.back() + (0.0 - r.z.back()) / std::sqrt(t.sigma2[last]);
    } else {
        const std::size_t k = static_cast<std::size_t>(std::upper_bound(r.z.begin(), r.z.end(), 0.0) - r.z.begin()) - 1;
        const double frac = (0.0 - r.z[k]) / (r.z[k + 1] - r.z[k]);
        const double s0 = 1.0 / std::sqrt(t.sigma2[first + k]), s1 = 1.0 / std::sqrt(t.sigma2[first + k + 1]);
        const double sz = s0 + frac * (s1 - s0);
        at_zero = cum[k] + 0.5 * (0.0 - r.z[k]) * (s0 + sz);
    }
    for (std::size_t i = 0; i < n; ++i) r.h.push_back(cum[i] - at_zero);
    return r;
}

double local_mean_force(const MolecularSystem& s, const ReactionCoordinate& rc, double beta, std::span<const double> q)
{
    const std::size_t d = s.dof();
    std::vector<double> gv(d), gx(d), qq(q.begin(), q.end());
    s.energy(q, gv);
    rc.value(q, gx);
    double g2 = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        g2 += gx[i] * gx[i];
        dot += gv[i] * gx[i];
    }
    const double h = 1e-5;
    double div = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        double comp[2];
        for (int side = 0; side < 2; ++side) {
            qq[k] = q[k] + (side ? h : -h);
            rc.value(qq, gx);
            double n2 = 0.0;
            for (double g : gx) n2 += g * g;
            comp[side] = gx[k] / n2;
        }
        qq[k] = q[k];
        div += (comp[1] - comp[0]) / (2.0 * h);
    }
    return dot / g2 - div / beta;
}

BoundConstants entropy_bound_constants(const MolecularSystem& s, const ReactionCoordinate& rc, double beta,
                                       const std::vector<std::vector<double>>& samples, const CoefficientTable* table)
{
    if (samples.empty()) throw ConfigError("bound constants need at least one sample");
    const std::size_t d = s.dof();
    BoundConstants c;
    c.samples = samples.size();
    c.m = kInf;
    std::vector<double> gx(d), xi(samples.size()), g2(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        xi[k] = rc.value(samples[k], gx);
        double n2 = 0.0;
        for (double g : gx) n2 += g * g;
        g2[k] = n2;
        c.m = std::min(c.m, std::sqrt(n2));
        c.M = std::max(c.M, std::sqrt(n2));
    }

    // sigma^2 as a function of xi: from the table, else from 20 bins of the samples
    std::function<double(double)> sigma2;
    std::optional<GridFunction> from_table;
    if (table) {
        const auto [first, last] = usable_block(*table);
        std::vector<double> v(table->sigma2.begin() + static_cast<long>(first), table->sigma2.begin() + static_cast<long>(last) + 1);
        from_table = GridFunction(table->z[first], table->z[last], v);
        sigma2 = [&](double z) { return (*from_table)(z); };
    } else {
        const double lo = *std::min_element(xi.begin(), xi.end());
        const double hi = *std::max_element(xi.begin(), xi.end());
        const std::size_t nb = 20;
        std::vector<double> sum(nb, 0.0), cnt(nb, 0.0);
        const double w = hi > lo ? (hi - lo) / nb : 1.0;
        for (std::size_t k = 0; k < xi.size(); ++k) {
            const auto b = std::min<std::size_t>(static_cast<std::size_t>((xi[k] - lo) / w), nb - 1);
            sum[b] += g2[k];
            cnt[b] += 1.0;
        }
        sigma2 = [sum, cnt, lo, w, nb](double z) {
            auto b = std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, (z - lo) / w)), nb - 1);
            return cnt[b] > 0 ? sum[b] / cnt[b] : 1.0;
        };
    }
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const double s2 = sigma2(xi[k]);
        c.lambda = std::max(c.lambda, std::abs((g2[k] - s2) / s2));
    }

    // tangential derivative of the local mean force
    const double h = 1e-4;
    for (const auto& q : samples) {
        std::vector<double> qq(q), grad_f(d);
        for (std::size_t i = 0; i < d; ++i) {
            qq[i] = q[i] + h;
            const double fp = local_mean_force(s, rc, beta, qq);
            qq[i] = q[i] - h;
            const double fm = local_mean_force(s, rc, beta, qq);
            qq[i] = q[i];
            grad_f[i] = (fp - fm) / (2.0 * h);
        }
        rc.value(q, gx);
        double n2 = 0.0, proj = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            n2 += gx[i] * gx[i];
            proj += grad_f[i] * gx[i];
        }
        double t2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double t = grad_f[i] - proj * gx[i] / n2;
            t2 += t * t;
        }
        c.kappa = std::max(c.kappa, std::sqrt(t2));
    }
    return c;
}

} // namespace cg
