#include "cg/sde.hpp"

#include "cg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cg {

OverdampedStepper::OverdampedStepper(const MolecularSystem& s, double beta, double dt, double overflow_guard,
                                     const XiBias* bias)
    : s_(s), dt_(dt), noise_(std::sqrt(2.0 * dt / beta)), guard_(overflow_guard), bias_(bias), grad_(s.dof()),
      rc_grad_(s.dof())
{
    if (!(beta > 0.0)) throw ConfigError("beta must be positive");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (bias && (!bias->rc || bias->rc->dof() != s.dof())) throw ConfigError("bias coordinate does not match the system");
}

void OverdampedStepper::step(std::vector<double>& q, CounterRng& rng)
{
    s_.energy(q, grad_);
    if (bias_) {
        const double xi = bias_->rc->value(q, rc_grad_);
        const double a = bias_->slope(xi);
        for (std::size_t i = 0; i < q.size(); ++i) grad_[i] -= a * rc_grad_[i];
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
        q[i] += -dt_ * grad_[i] + noise_ * rng.normal();
        if (!(std::abs(q[i]) < guard_)) {
            std::ostringstream os;
            os << s_.name() << " trajectory left the overflow guard (dt=" << dt_ << " too large?)";
            throw NumericalError(os.str());
        }
    }
}

std::vector<double> simulate_overdamped(const MolecularSystem& s, double beta, const TrajectoryConfig& cfg,
                                        std::vector<double> q0,
                                        const std::function<void(std::uint64_t, std::span<const double>)>& observe,
                                        std::uint64_t stream, const XiBias* bias)
{
    cfg.validate();
    if (q0.size() != s.dof()) throw ConfigError("initial configuration has the wrong dimension");
    OverdampedStepper stepper(s, beta, cfg.dt, cfg.overflow_guard, bias);
    CounterRng rng(cfg.seed, stream);
    for (std::uint64_t k = 1; k <= cfg.steps; ++k) {
        stepper.step(q0, rng);
        if (k > cfg.burn_in && (k - cfg.burn_in) % cfg.thinning == 0 && observe) observe(k, q0);
    }
    return q0;
}

void Sde1d::validate() const
{
    if (!(beta > 0.0)) throw ConfigError("beta must be positive");
    if (drift.size() != sigma.size() || drift.lo() != sigma.lo() || drift.hi() != sigma.hi())
        throw ConfigError("drift and diffusion must share one grid");
    for (double s : sigma.values())
        if (!(s > 0.0)) throw ConfigError("diffusion coefficient must be positive on its grid");
}

double Sde1d::fold(double z) const
{
    if (period) return wrap_periodic(z, *period);
    const double a = drift.lo(), b = drift.hi();
    if (z < a) z = 2.0 * a - z;
    if (z > b) z = 2.0 * b - z;
    return std::clamp(z, a, b);
}

double Sde1d::step(double z, double dt, double gaussian) const
{
    return fold(z + drift(z) * dt + std::sqrt(2.0 * dt / beta) * sigma(z) * gaussian);
}

bool Region::contains(double xi) const
{
    switch (kind) {
    case Kind::Below:
        return xi <= threshold;
    case Kind::Above:
        return xi >= threshold;
    case Kind::Near:
        for (double c : centers) {
            const double d = period ? wrap_periodic(xi - c, *period) : xi - c;
            if (std::abs(d) <= radius) return true;
        }
        return false;
    }
    return false;
}

std::string Region::describe() const
{
    std::ostringstream os;
    os.precision(10);
    switch (kind) {
    case Kind::Below:
        os << "xi<=" << threshold;
        break;
    case Kind::Above:
        os << "xi>=" << threshold;
        break;
    case Kind::Near:
        os << "|xi-c|<=" << radius << " for c in {";
        for (std::size_t i = 0; i < centers.size(); ++i) os << (i ? ";" : "") << centers[i];
        os << "}";
        if (period) os << " mod " << *period;
        break;
    }
    return os.str();
}

WellPair default_wells(const MolecularSystem& s, const ReactionCoordinate& rc)
{
    const std::string key = s.name() + "/" + rc.name();
    if (key == "three-atom/angle") {
        const double saddle = s.parameters().at("theta_saddle");
        return {Region::above(saddle + 0.15), Region::below(saddle - 0.15)};
    }
    if (key == "three-atom/distance") {
        const double l = s.parameters().at("l_eq");
        return {Region::above(2.4 * l * l), Region::below(1.6 * l * l)};
    }
    if (key == "butane/dihedral") {
        const double p = 2.0 * std::numbers::pi;
        return {Region::near({0.0}, 0.5, p), Region::near({-p / 3.0, p / 3.0}, 0.5, p)};
    }
    if (key == "toy2d/x") return {Region::above(0.5), Region::below(-0.5)};
    throw ConfigError("no default wells for " + key);
}

HarvestResult harvest_well_samples(const MolecularSystem& s, const ReactionCoordinate& rc, double beta,
                                   const Region& well, std::size_t count, const TrajectoryConfig& cfg,
                                   std::optional<std::vector<double>> q0)
{
    cfg.validate();
    if (rc.dof() != s.dof()) throw ConfigError("reaction coordinate does not match the system");
    if (count == 0) throw ConfigError("harvest count must be positive");
    std::vector<double> q = q0 ? *q0 : s.reference_configuration();
    if (q.size() != s.dof()) throw ConfigError("initial configuration has the wrong dimension");
    OverdampedStepper stepper(s, beta, cfg.dt, cfg.overflow_guard);
    CounterRng rng(cfg.seed, 0);
    HarvestResult out;
    std::uint64_t examined = 0;
    std::uint64_t k = 0;
    for (; k < cfg.steps && out.configurations.size() < count; ++k) {
        stepper.step(q, rng);
        if (k + 1 <= cfg.burn_in || (k + 1 - cfg.burn_in) % cfg.thinning != 0) continue;
        ++examined;
        const double xi = rc.value(q);
        if (well.contains(xi)) {
            out.configurations.push_back(q);
            out.xi.push_back(xi);
        }
        if (examined >= 100'000 && static_cast<double>(out.configurations.size()) < 1e-4 * examined)
            throw NumericalError("harvest acceptance below 1e-4: is the well definition right? (" +
                                 well.describe() + ")");
    }
    out.steps = k;
    out.acceptance = examined ? static_cast<double>(out.configurations.size()) / static_cast<double>(examined) : 0.0;
    if (out.configurations.size() < count) {
        std::ostringstream os;
        os << "harvest collected only " << out.configurations.size() << " of " << count
           << " states within the step cap";
        throw NumericalError(os.str());
    }
    return out;
}

std::string to_string(DynamicsKind k)
{
    switch (k) {
    case DynamicsKind::Full:
        return "full";
    case DynamicsKind::Effective:
        return "effective";
    case DynamicsKind::FreeEnergy:
        return "free-energy";
    }
    return "?";
}

DynamicsKind parse_dynamics(const std::string& s)
{
    if (s == "full") return DynamicsKind::Full;
    if (s == "effective") return DynamicsKind::Effective;
    if (s == "free-energy" || s == "free") return DynamicsKind::FreeEnergy;
    throw ConfigError("unknown dynamics '" + s + "' (full, effective, free-energy)");
}

namespace {

constexpr std::uint64_t kCensored = ~std::uint64_t{0};

ResidenceTimeReport summarize(DynamicsKind kind, const std::vector<std::uint64_t>& steps, const Region& target,
                              const ResidenceOptions& opt)
{
    ResidenceTimeReport r;
    r.kind = kind;
    r.target = target.describe();
    r.dt = opt.dt;
    r.seed = opt.seed;
    for (std::uint64_t s : steps) {
        if (s == kCensored)
            ++r.censored;
        else
            r.times.push_back(static_cast<double>(s) * opt.dt);
    }
    r.n_realizations = r.times.size();
    if (r.n_realizations < 2) throw NumericalError("fewer than two uncensored residence times");
    const MeanEstimate e = independent_mean(r.times);
    r.mean = e.mean;
    r.half_width = e.half_width;
    return r;
}

void check_options(const ResidenceOptions& opt, std::size_t n)
{
    if (!(opt.dt > 0.0)) throw ConfigError("dt must be positive");
    if (n < 2) throw ConfigError("need at least two initial states");
    if (opt.step_cap < 1) throw ConfigError("step cap must be positive");
}

} // namespace

ResidenceTimeReport residence_times(const MolecularSystem& s, const ReactionCoordinate& rc, double beta,
                                    const std::vector<std::vector<double>>& initials, const Region& target,
                                    const ResidenceOptions& opt)
{
    check_options(opt, initials.size());
    if (rc.dof() != s.dof()) throw ConfigError("reaction coordinate does not match the system");
    std::vector<std::uint64_t> steps(initials.size(), kCensored);
    parallel_for(initials.size(), opt.workers, [&](std::size_t r) {
        OverdampedStepper stepper(s, beta, opt.dt, opt.overflow_guard);
        CounterRng rng(opt.seed, r);
        std::vector<double> q = initials[r];
        if (q.size() != s.dof()) throw ConfigError("initial configuration has the wrong dimension");
        for (std::uint64_t k = 1; k <= opt.step_cap; ++k) {
            stepper.step(q, rng);
            if (target.contains(rc.value(q))) {
                steps[r] = k;
                return;
            }
        }
    });
    return summarize(DynamicsKind::Full, steps, target, opt);
}

ResidenceTimeReport residence_times(const Sde1d& sde, DynamicsKind kind, const std::vector<double>& initials,
                                    const Region& target, const ResidenceOptions& opt)
{
    check_options(opt, initials.size());
    sde.validate();
    std::vector<std::uint64_t> steps(initials.size(), kCensored);
    parallel_for(initials.size(), opt.workers, [&](std::size_t r) {
        CounterRng rng(opt.seed, r);
        double z = sde.fold(initials[r]);
        for (std::uint64_t k = 1; k <= opt.step_cap; ++k) {
            z = sde.step(z, opt.dt, rng.normal());
            if (target.contains(z)) {
                steps[r] = k;
                return;
            }
        }
    });
    return summarize(kind, steps, target, opt);
}

std::vector<double> long_run_density(const Sde1d& sde, double z0, const TrajectoryConfig& cfg)
{
    cfg.validate();
    sde.validate();
    const GridFunction& g = sde.drift;
    const std::size_t n = g.size();
    const double h = g.step();
    std::vector<double> counts(n, 0.0);
    CounterRng rng(cfg.seed, 0);
    double z = sde.fold(z0);
    std::uint64_t recorded = 0;
    for (std::uint64_t k = 1; k <= cfg.steps; ++k) {
        z = sde.step(z, cfg.dt, rng.normal());
        if (k <= cfg.burn_in || (k - cfg.burn_in) % cfg.thinning != 0) continue;
        double u = (z - g.lo()) / h;
        if (sde.period) {
            u = std::fmod(u, static_cast<double>(n));
            if (u < 0.0) u += static_cast<double>(n);
        }
        auto i = static_cast<long>(std::floor(u + 0.5));
        if (sde.period)
            i %= static_cast<long>(n);
        else
            i = std::clamp<long>(i, 0, static_cast<long>(n) - 1);
        counts[static_cast<std::size_t>(i)] += 1.0;
        ++recorded;
    }
    // cells of width h, half cells at reflecting ends
    for (std::size_t i = 0; i < n; ++i) {
        const bool end = !sde.period && (i == 0 || i + 1 == n);
        counts[i] /= static_cast<double>(recorded) * (end ? 0.5 * h : h);
    }
    return counts;
}

} // namespace cg
