// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance [--only 1,8,...] [--report path]

#include "cg/cg_dynamics.hpp"
#include "cg/chain_nn.hpp"
#include "cg/chain_nnn.hpp"
#include "cg/error.hpp"
#include "cg/fp1d.hpp"
#include "cg/potentials.hpp"
#include "cg/sde.hpp"
#include "cg/transfer_operator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace cg;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Notes {
public:
    template <class T> Notes& operator<<(const T& v)
    {
        s_ << v;
        return *this;
    }
    std::string str() const { return s_.str(); }

private:
    std::ostringstream s_;
};

std::string fmt(double v, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

bool within_rel(double v, double target, double rel) { return std::abs(v / target - 1.0) <= rel; }

const ChainModelNNN kBench{PairPotential::w1(), PairPotential::w2(), 1.0};

// ---------------------------------------------------------------- shared data

// Coefficient trajectories of the molecular systems run at a finer step than
// the residence simulations: at 1e-3 the stiff bonds bias the sampled law.
constexpr double kTableDt = 1e-4;
constexpr std::uint64_t kTableSteps = 40'000'000;

struct Molecule {
    std::unique_ptr<MolecularSystem> system;
    std::unique_ptr<ReactionCoordinate> rc;
};

Molecule molecule(const std::string& system, const std::string& rc)
{
    return {make_system(system), make_rc(system, rc)};
}

CoefficientTable coefficients(const Molecule& m, double beta, std::uint64_t steps, std::uint64_t seed,
                              double dt = 1e-3, std::size_t bins = 256, const CoefficientTable* bias = nullptr)
{
    CoefficientConfig c;
    c.traj.dt = dt;
    c.traj.steps = steps;
    c.traj.seed = seed;
    c.bins = bins;
    c.bias = bias;
    return estimate_coefficients(*m.system, *m.rc, beta, c);
}

const Molecule& angle_molecule()
{
    static const Molecule m = molecule("three-atom", "angle");
    return m;
}

const CoefficientTable& angle_table(double beta)
{
    static std::map<double, CoefficientTable> cache;
    if (auto it = cache.find(beta); it != cache.end()) return it->second;
    if (beta == 1.0)
        return cache.emplace(beta, coefficients(angle_molecule(), 1.0, kTableSteps, 101, kTableDt)).first->second;
    const CoefficientTable& prior = angle_table(1.0);
    const auto seed = static_cast<std::uint64_t>(100 + 10 * beta);
    return cache.emplace(beta, coefficients(angle_molecule(), beta, kTableSteps, seed, kTableDt, 256, &prior))
        .first->second;
}

const Molecule& butane_molecule()
{
    static const Molecule m = molecule("butane", "dihedral");
    return m;
}

const CoefficientTable& butane_table()
{
    // transitions are about 45 times rarer than for the angle and the barrier
    // bins need the extra sampling
    static const CoefficientTable t = coefficients(butane_molecule(), 1.0, 10 * kTableSteps, 201, kTableDt);
    return t;
}

const Molecule& toy_molecule()
{
    static const Molecule m = molecule("toy2d", "x");
    return m;
}

const CoefficientTable& toy_table()
{
    static const CoefficientTable t = coefficients(toy_molecule(), 1.0, 20'000'000, 301, 1e-3, 128);
    return t;
}

struct Start {
    HarvestResult states;
    WellPair wells;
};

Start harvest(const Molecule& m, double beta, std::size_t count, std::uint64_t seed)
{
    Start s{{}, default_wells(*m.system, *m.rc)};
    TrajectoryConfig t;
    t.dt = 1e-3;
    t.steps = 10'000'000'000ULL;
    t.burn_in = 1'000'000;
    t.thinning = 1000;
    t.seed = seed;
    s.states = harvest_well_samples(*m.system, *m.rc, beta, s.wells.start, count, t);
    return s;
}

ResidenceOptions residence_options(std::uint64_t seed)
{
    ResidenceOptions o;
    o.dt = 1e-3;
    o.seed = seed;
    return o;
}

// Every dynamics of one experiment shares its seed, as `cgdyn residence --dynamics all` does.
ResidenceTimeReport run_1d(const CoefficientTable& t, DynamicsKind kind, const Start& s, std::uint64_t seed)
{
    return residence_times(make_sde(t, kind), kind, s.states.xi, s.wells.target, residence_options(seed));
}

std::string describe(const ResidenceTimeReport& r)
{
    return fmt(r.mean, 5) + "+-" + fmt(r.half_width, 2) + (r.censored ? " (" + std::to_string(r.censored) + " censored)" : "");
}

// ------------------------------------------------------------------ criteria

Outcome gaussian_closed_forms()
{
    double strain_err = 0.0, energy_err = 0.0;
    for (double a : {0.0, 1.0})
        for (double beta : {0.5, 1.0, 4.0}) {
            const ChainModelNN m{PairPotential::quadratic(a), beta};
            for (double f = -3.0; f <= 3.0 + 1e-12; f += 0.1)
                strain_err = std::max(strain_err, std::abs(strain_for_stress_nn(m, f) - (a + f)));
            for (double x = -1.0; x <= 3.0 + 1e-12; x += 0.1)
                energy_err = std::max(energy_err, std::abs(free_energy_limit_nn(m, x).F - (x - a) * (x - a) / 2.0));
        }
    return {strain_err < 1e-8 && energy_err < 1e-8,
            "max |y*(f)-(a+f)| = " + fmt(strain_err, 3) + ", max |F(x)-(x-a)^2/2| = " + fmt(energy_err, 3)};
}

Outcome nn_duality()
{
    const ChainModelNN m{PairPotential::w1(), 1.0};
    double worst = 0.0;
    for (int i = 0; i <= 160; ++i) {
        const double x = 0.2 + 0.01 * i;
        worst = std::max(worst, std::abs(strain_for_stress_nn(m, free_energy_limit_nn(m, x).F_prime) - x));
    }
    return {worst < 1e-5, "max |y*(F'(x)) - x| on [0.2, 1.8] = " + fmt(worst, 3)};
}

Outcome nnn_reduction()
{
    double worst = 0.0;
    for (double a : {0.0, 1.0})
        for (double beta : {1.0, 2.0}) {
            const SpectralTable t = log_lambda_curve(PairPotential::quadratic(a), PairPotential::zero(), beta,
                                                     uniform_xi_grid(-3.0, 3.0, 0.05), {});
            for (double xi : t.xi) worst = std::max(worst, std::abs(t.log_Lambda(xi) - (a * xi + xi * xi / (2 * beta))));
        }
    return {worst < 1e-5, "max |ln Lambda - (a xi + xi^2/(2 beta))| on [-3, 3] = " + fmt(worst, 3)};
}

Outcome spectral_convexity()
{
    const SpectralTable t = log_lambda_curve(kBench.W1, kBench.W2, 1.0, uniform_xi_grid(-10.0, 10.0, 0.05), {});
    double min_d2 = INFINITY;
    for (std::size_t i = 1; i + 1 < t.xi.size(); ++i)
        min_d2 = std::min(min_d2, t.log_lambda[i + 1] - 2 * t.log_lambda[i] + t.log_lambda[i - 1]);
    const double unit = std::abs(std::exp(t.log_Lambda(0.0)) - 1.0);
    return {min_d2 >= -1e-8 && unit < 1e-10,
            "min second difference = " + fmt(min_d2, 3) + ", |Lambda(0) - 1| = " + fmt(unit, 3)};
}

Outcome nnn_duality()
{
    const SpectralTable table = spectral_table_covering(kBench, 0.8, 2.0);
    double worst = 0.0;
    for (int i = 0; i <= 24; ++i) {
        const double x = 0.8 + 0.05 * i;
        worst = std::max(worst, std::abs(strain_for_stress_nnn(kBench, free_energy_limit_nnn(kBench, x, table).F_prime) - x));
    }
    return {worst < 1e-4, "max |y*(F'(x)) - x| on [0.8, 2.0] = " + fmt(worst, 3)};
}

Outcome finite_chain_convergence()
{
    const double limit = free_energy_limit_nnn(kBench, 1.4, spectral_table_covering(kBench, 1.0, 2.0)).F_prime;
    std::vector<double> logn, loggap;
    Notes n;
    n << "F'_inf = " << fmt(limit) << ";";
    MeanEstimate last;
    for (std::size_t N : {5u, 10u, 25u, 50u, 100u}) {
        ChainMcConfig c;
        c.traj.seed = 600 + N;
        last = reference_force_mc_nnn(kBench, 1.4, N, c);
        n << " N=" << N << ": " << fmt(last.mean, 5) << "+-" << fmt(last.half_width, 2);
        logn.push_back(std::log(static_cast<double>(N)));
        loggap.push_back(std::log(std::abs(last.mean - limit)));
    }
    const double mx = std::accumulate(logn.begin(), logn.end(), 0.0) / logn.size();
    const double my = std::accumulate(loggap.begin(), loggap.end(), 0.0) / loggap.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < logn.size(); ++i) {
        sxy += (logn[i] - mx) * (loggap[i] - my);
        sxx += (logn[i] - mx) * (logn[i] - mx);
    }
    const double slope = sxy / sxx;
    const bool covered = std::abs(last.mean - limit) <= last.half_width;
    n << "; gap slope in ln N = " << fmt(slope, 3) << "; N=100 interval covers F'_inf: " << (covered ? "yes" : "no");
    return {covered && slope < 0.0, n.str()};
}

Outcome zero_temperature_limit()
{
    bool ok = true;
    Notes n;
    for (double x : {0.8, 1.4, 2.0}) {
        const ZeroTResult r = zero_temperature(kBench, x, 200);
        const double gap = *r.J_N - r.phi;
        ok = ok && std::abs(gap) < 1e-2;
        n << "x=" << x << ": J_200-phi = " << fmt(gap, 3) << "; ";
        for (std::size_t N : {5u, 20u, 50u, 200u}) {
            const ZeroTResult b = N == 200 ? r : zero_temperature(kBench, x, N);
            if (*b.J_N > b.upper_bound + 1e-12) {
                ok = false;
                n << "(bound violated at N=" << N << ") ";
            }
        }
    }
    n << "upper bound checked for N in {5, 20, 50, 200}";
    return {ok, n.str()};
}

Outcome angle_residence_table()
{
    const Molecule& m = angle_molecule();
    const Start s = harvest(m, 1.0, 5000, 801);
    const ResidenceTimeReport full =
        residence_times(*m.system, *m.rc, 1.0, s.states.configurations, s.wells.target, residence_options(802));
    const ResidenceTimeReport eff = run_1d(angle_table(1.0), DynamicsKind::Effective, s, 802);
    const ResidenceTimeReport fe = run_1d(angle_table(1.0), DynamicsKind::FreeEnergy, s, 802);
    const bool row1 = full.mean >= 0.65 && full.mean <= 0.75 && within_rel(eff.mean, full.mean, 0.05) &&
                      within_rel(fe.mean, full.mean, 0.05) && full.censored == 0;

    const Start cold = harvest(m, 5.0, 1000, 805);
    const ResidenceTimeReport eff5 = run_1d(angle_table(5.0), DynamicsKind::Effective, cold, 806);
    const bool row5 = within_rel(eff5.mean, 5836.0, 0.10) && eff5.censored == 0;
    return {row1 && row5, "beta=1 (5000): full " + describe(full) + ", effective " + describe(eff) + ", free energy " +
                              describe(fe) + "; beta=5 (1000, effective only): " + describe(eff5)};
}

Outcome kramers_constants()
{
    const ThreeAtom s{Params{}};
    const Profile p = tabulate_profile([&](double th) { return s.angle_energy(th); },
                                       s.theta_saddle - 2.0 * s.delta_theta(), s.theta_saddle + 2.0 * s.delta_theta(), 1601);
    const KramersEstimate k = kramers_time(p, s.theta_well, s.theta_saddle, std::nullopt, 0.0);
    const bool ok = std::abs(k.delta_A - 2.2565) <= 1e-3 && std::abs(k.omega_sp - 7.828) <= 0.01 &&
                    std::abs(k.omega_well - 11.07) <= 0.01 && std::abs(k.tau0 - 0.0725) <= 0.001;
    return {ok, "delta_A = " + fmt(k.delta_A) + ", omega_sp = " + fmt(k.omega_sp) + ", omega_well = " +
                    fmt(k.omega_well) + ", tau0 = " + fmt(k.tau0)};
}

Outcome arrhenius_fit()
{
    const Molecule& m = angle_molecule();
    std::vector<ArrheniusPoint> pts;
    Notes n;
    for (double beta : {1.0, 1.5, 2.0, 3.0}) {
        const Start s = harvest(m, beta, 1000, static_cast<std::uint64_t>(900 + 10 * beta));
        const ResidenceTimeReport r =
            run_1d(angle_table(beta), DynamicsKind::Effective, s, static_cast<std::uint64_t>(950 + 10 * beta));
        pts.push_back({beta, r.mean, r.half_width});
        n << "beta=" << beta << ": " << describe(r) << "; ";
    }
    const ArrheniusFit f = fit_arrhenius(pts);
    n << "s = " << fmt(f.s) << "+-" << fmt(f.s_error, 2) << ", tau0 = " << fmt(f.tau0);
    return {within_rel(f.s, 2.250, 0.05) && within_rel(f.tau0, 0.0752, 0.25), n.str()};
}

Outcome distance_residence_table()
{
    const Molecule m = molecule("three-atom", "distance");
    const CoefficientTable t = coefficients(m, 1.0, kTableSteps, 1101, kTableDt);
    const Start s = harvest(m, 1.0, 3000, 1102);
    const ResidenceTimeReport full =
        residence_times(*m.system, *m.rc, 1.0, s.states.configurations, s.wells.target, residence_options(1103));
    const ResidenceTimeReport eff = run_1d(t, DynamicsKind::Effective, s, 1103);
    const ResidenceTimeReport fe = run_1d(t, DynamicsKind::FreeEnergy, s, 1103);
    const double re = eff.mean / full.mean, rf = fe.mean / full.mean;
    const bool ok = eff.mean < full.mean && full.mean < fe.mean && re >= 0.2 && re <= 0.45 && rf >= 2.5 && rf <= 5.5;
    return {ok, "full " + describe(full) + ", effective " + describe(eff) + ", free energy " + describe(fe) +
                    "; ratios " + fmt(re, 3) + ", " + fmt(rf, 3)};
}

Outcome butane_residence_table()
{
    const Molecule& m = butane_molecule();
    const Start s = harvest(m, 1.0, 2000, 1201);
    const ResidenceTimeReport full =
        residence_times(*m.system, *m.rc, 1.0, s.states.configurations, s.wells.target, residence_options(1202));
    const ResidenceTimeReport eff = run_1d(butane_table(), DynamicsKind::Effective, s, 1202);
    const ResidenceTimeReport fe = run_1d(butane_table(), DynamicsKind::FreeEnergy, s, 1202);
    const double rf = fe.mean / full.mean;
    const bool ok = within_rel(full.mean, 31.9, 0.10) && within_rel(eff.mean, full.mean, 0.05) && rf >= 1.05 && rf <= 1.35;
    return {ok, "full " + describe(full) + ", effective " + describe(eff) + ", free energy " + describe(fe) +
                    "; free/full " + fmt(rf, 3)};
}

std::pair<double, double> sigma_range(const CoefficientTable& t)
{
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t.mask[i]) {
            lo = std::min(lo, std::sqrt(t.sigma2[i]));
            hi = std::max(hi, std::sqrt(t.sigma2[i]));
        }
    return {lo, hi};
}

Outcome sigma_structure()
{
    const auto [alo, ahi] = sigma_range(angle_table(1.0));
    const double dev = std::max(std::abs(alo - 1.0), std::abs(ahi - 1.0));
    const auto [blo, bhi] = sigma_range(butane_table());
    const bool ok = dev < 0.01 && blo >= 1.07 && bhi <= 1.10 && bhi - blo < 0.01;
    return {ok, "three-atom angle max|sigma-1| = " + fmt(dev, 3) + "; butane sigma in [" + fmt(blo, 5) + ", " +
                    fmt(bhi, 5) + "], spread " + fmt(bhi - blo, 3)};
}

Outcome path_equivalence()
{
    const PathAgreement toy = compare_paths(toy_table());
    const CoefficientTable xi2 = coefficients(molecule("three-atom", "distance"), 1.0, 200'000'000, 1401, 1e-5, 128);
    const PathAgreement d = compare_paths(xi2);
    auto text = [](const PathAgreement& a) {
        return std::to_string(a.within) + "/" + std::to_string(a.bins) + " bins, worst ratio " + fmt(a.worst_ratio, 3) +
               " (factor " + fmt(a.factor, 3) + ")";
    };
    return {toy.agree() && d.agree(), "toy2d x: " + text(toy) + "; three-atom distance: " + text(d)};
}

Sde1d grid_sde(double lo, double hi, std::size_t n, const std::function<double(double)>& drift, double beta)
{
    std::vector<double> b(n), s(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) b[i] = drift(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    return Sde1d{GridFunction(lo, hi, b), GridFunction(lo, hi, s), beta, std::nullopt};
}

double moment(const DensityGrid& g, int k)
{
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) m += g.weight(i) * g.p[i] * std::pow(g.node(i), k);
    return m;
}

Outcome fokker_planck_properties()
{
    const double k = 2.0;
    const Sde1d ou = grid_sde(-6.0, 6.0, 1201, [&](double z) { return -k * z; }, 1.0);
    const FpResult r = solve_fp(ou, DensityGrid::on_sde_grid(ou, [](double z) { return std::exp(-z * z / 2); }), 1e-3,
                                2.0, 50);
    double var_err = 0.0;
    for (const auto& s : r.snapshots) {
        const double mean = moment(s.density, 1);
        const double expected = 1.0 / k + (1.0 - 1.0 / k) * std::exp(-2.0 * k * s.t);
        var_err = std::max(var_err, std::abs(moment(s.density, 2) - mean * mean - expected));
    }

    auto A = [](double z) { return (z * z - 1.0) * (z * z - 1.0); };
    const Sde1d dw = grid_sde(-2.5, 2.5, 401, [](double z) { return -4.0 * z * (z * z - 1.0); }, 1.0);
    const DensityGrid exact = DensityGrid::on_sde_grid(dw, [&](double z) { return std::exp(-A(z)); });
    const FpResult relax =
        solve_fp(dw, DensityGrid::on_sde_grid(dw, [](double z) { return std::exp(-(z - 1.8) * (z - 1.8) / 0.04); }),
                 5e-4, 60.0, 200);
    const DensityGrid limit = stationary_density(dw, exact);
    bool monotone = true;
    double prev = INFINITY;
    for (const auto& s : relax.snapshots) {
        DensityGrid p = s.density;
        p.normalize();
        const double h = relative_entropy(p, limit);
        monotone = monotone && h <= prev + 1e-14;
        prev = h;
    }
    const double tv = total_variation(relax.snapshots.back().density, exact);
    const double tv_stat = total_variation(limit, exact);
    const double mass = std::max(r.max_step_mass_change, relax.max_step_mass_change);
    const double drift = std::max(r.max_mass_error, relax.max_mass_error);
    const bool ok = var_err < 1e-3 && mass < 1e-12 && monotone && tv < 1e-3 && tv_stat < 1e-3;
    return {ok, "OU variance error " + fmt(var_err, 3) + ", max mass change per step " + fmt(mass, 3) +
                    " (cumulative " + fmt(drift, 3) + "), entropy " +
                    (monotone ? "monotone" : "NOT monotone") + ", TV(t=60) " + fmt(tv, 3) + ", TV(stationary) " +
                    fmt(tv_stat, 3)};
}

double effective_tv(const CoefficientTable& t, double z0, std::uint64_t steps, std::uint64_t seed)
{
    const Sde1d sde = make_sde(t, DynamicsKind::Effective);
    const std::vector<double> dens = long_run_density(sde, z0, {.dt = 1e-3, .steps = steps, .seed = seed, .burn_in = 10'000});
    const double h = sde.drift.step();
    std::vector<double> boltz(dens.size());
    double zb = 0.0;
    for (std::size_t i = 0; i < dens.size(); ++i) {
        const double z = sde.drift.node(i);
        const std::size_t bin = static_cast<std::size_t>(std::floor((z - t.lo) / t.width));
        boltz[i] = std::exp(-t.beta * t.A[std::min(bin, t.size() - 1)]);
        zb += ((i == 0 || i + 1 == dens.size()) && !sde.period ? 0.5 * h : h) * boltz[i];
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < dens.size(); ++i) {
        const double w = (i == 0 || i + 1 == dens.size()) && !sde.period ? 0.5 * h : h;
        tv += 0.5 * w * std::abs(dens[i] - boltz[i] / zb);
    }
    return tv;
}

Outcome effective_ergodicity()
{
    const double toy = effective_tv(toy_table(), 0.0, 50'000'000, 1601);
    const CoefficientTable& a = angle_table(1.0);
    const double angle = effective_tv(a, a.z[a.size() / 2], 50'000'000, 1602);
    return {toy < 0.02 && angle < 0.02, "TV toy2d x = " + fmt(toy, 3) + ", three-atom angle = " + fmt(angle, 3)};
}

struct Criterion {
    int id;
    std::string title;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    std::string report_path;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            for (std::string item; std::getline(ss, item, ',');) only.insert(std::stoi(item));
        } else if (a == "--report" && i + 1 < argc) {
            report_path = argv[++i];
        } else {
            std::cerr << "usage: acceptance [--only 1,2,...] [--report path]\n";
            return 2;
        }
    }

    // Known deviations, each explained in the decisions ledger: the finite-N
    // interval at N=100 excludes the limit (O(1/N) end effect), and the
    // affine bound forces |J_200 - phi| > 1e-2 at x = 2.0.
    const std::set<int> documented{6, 7};

    const std::vector<Criterion> criteria{
        {1, "gaussian nearest-neighbour closed forms", gaussian_closed_forms},
        {2, "nearest-neighbour stress-strain duality", nn_duality},
        {3, "next-nearest reduces to nearest-neighbour", nnn_reduction},
        {4, "convex ln(lambda0 Lambda), Lambda(0) = 1", spectral_convexity},
        {5, "next-nearest stress-strain duality", nnn_duality},
        {6, "finite-N force converges to the limit", finite_chain_convergence},
        {7, "zero-temperature limit and upper bound", zero_temperature_limit},
        {8, "three-atom angle residence times", angle_residence_table},
        {9, "Kramers constants of the angle potential", kramers_constants},
        {10, "Arrhenius fit of effective residence times", arrhenius_fit},
        {11, "three-atom distance residence times", distance_residence_table},
        {12, "butane residence times", butane_residence_table},
        {13, "diffusion coefficient structure", sigma_structure},
        {14, "direct and identity drift agree", path_equivalence},
        {15, "Fokker-Planck properties", fokker_planck_properties},
        {16, "effective SDE samples exp(-beta A)", effective_ergodicity},
    };

    std::ofstream report;
    if (!report_path.empty()) report.open(report_path);
    int unexpected = 0, failed = 0;
    for (const Criterion& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ostringstream line;
        line << "criterion " << (c.id < 10 ? " " : "") << c.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << c.title
             << "  [" << o.detail << "]  (" << fmt(secs, 3) << " s)";
        if (!o.pass) {
            ++failed;
            if (documented.count(c.id))
                line << "  documented deviation";
            else
                ++unexpected;
        }
        std::cout << line.str() << std::endl;
        if (report) report << line.str() << std::endl;
    }
    std::ostringstream summary;
    summary << failed << " criteria failed, " << unexpected << " of them undocumented";
    std::cout << summary.str() << std::endl;
    if (report) report << summary.str() << std::endl;
    return unexpected == 0 ? 0 : 1;
}
