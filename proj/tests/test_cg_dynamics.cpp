#include "doctest.h"

#include "cg/cg_dynamics.hpp"
#include "cg/error.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace cg;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInfinity = std::numeric_limits<double>::infinity();

CoefficientConfig quick(std::uint64_t steps, std::size_t bins, std::uint64_t seed)
{
    CoefficientConfig c;
    c.traj.steps = steps;
    c.traj.burn_in = 10'000;
    c.traj.seed = seed;
    c.bins = bins;
    c.pilot_steps = 200'000;
    c.batches = 32;
    return c;
}

/// Fraction of usable bins with a finite target where |value - target| <= hw.
double coverage(const CoefficientTable& t, const std::vector<double>& v, const std::vector<double>& hw,
                const std::vector<double>& target)
{
    std::size_t n = 0, ok = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!t.mask[i] || !std::isfinite(target[i]) || !std::isfinite(hw[i])) continue;
        ++n;
        if (std::abs(v[i] - target[i]) <= hw[i]) ++ok;
    }
    REQUIRE(n > 10);
    return static_cast<double>(ok) / static_cast<double>(n);
}

/// -d ln(mass)/dz / beta by centred differences of neighbouring cells (NaN at the ends).
std::vector<double> centred_log_slope(const std::vector<double>& mass, double width, double beta)
{
    std::vector<double> out(mass.size(), std::nan(""));
    for (std::size_t i = 1; i + 1 < mass.size(); ++i)
        out[i] = -(std::log(mass[i + 1]) - std::log(mass[i - 1])) / (2.0 * width * beta);
    return out;
}

CoefficientTable manual_table(std::size_t n, double lo, double hi, const std::function<double(double)>& A,
                              const std::function<double(double)>& sigma2)
{
    CoefficientTable t;
    t.lo = lo;
    t.width = (hi - lo) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = lo + (static_cast<double>(i) + 0.5) * t.width;
        const double h = 1e-5;
        t.z.push_back(z);
        t.A.push_back(A(z));
        t.A_prime.push_back((A(z + h) - A(z - h)) / (2 * h));
        t.sigma2.push_back(sigma2(z));
        const double ds = (sigma2(z + h) - sigma2(z - h)) / (2 * h);
        t.b.push_back(ds - sigma2(z) * t.A_prime.back());
        t.count.push_back(1e6);
        t.mask.push_back(true);
    }
    for (auto* v : {&t.A_prime_hw, &t.b_hw, &t.sigma2_hw}) v->assign(n, 0.0);
    return t;
}

} // namespace

TEST_SUITE("cg_dynamics")
{
    TEST_CASE("separable toy system has exact coefficients")
    {
        const auto s = make_system("toy2d", {{"separable", 1.0}});
        const auto rc = make_rc("toy2d", "x");
        auto cfg = quick(20'000'000, 48, 41);
        cfg.path = CoefficientPath::Direct;
        const CoefficientTable t = estimate_coefficients(*s, *rc, 1.0, cfg);
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t.mask[i]) CHECK(t.sigma2[i] == doctest::Approx(1.0).epsilon(1e-12));
        auto v1 = [](double x) { return (x * x - 1.0) * (x * x - 1.0); };
        auto v1p = [](double x) { return 4.0 * x * (x * x - 1.0); };
        auto logp = [&](double x) { return -v1(x); };
        const auto mass = oracle::cell_masses(logp, t.lo, t.width, t.size());
        const auto drift = oracle::cell_averages([&](double x) { return -v1p(x); }, logp, t.lo, t.width, t.size());
        const std::vector<double> a_prime = centred_log_slope(mass, t.width, 1.0);
        CHECK(coverage(t, t.A_prime, t.A_prime_hw, a_prime) >= 0.85);
        CHECK(coverage(t, t.b, t.b_hw, drift) >= 0.85);
        CHECK(t.provenance == CoefficientPath::Direct);
        CHECK(t.system == "toy2d");
    }

    TEST_CASE("three-atom angle: unit diffusion and drift from the angle potential")
    {
        const auto s = make_system("three-atom");
        ThreeAtom ref;
        const auto rc = make_rc("three-atom", "angle");
        // the stiff angle term needs a small step before Euler-Maruyama samples its Boltzmann law
        auto cfg = quick(40'000'000, 48, 42);
        cfg.traj.dt = 1e-4;
        cfg.q0 = std::vector<double>{-1.0, std::cos(kPi - 1.2), std::sin(kPi - 1.2)};
        const CoefficientTable t = estimate_coefficients(*s, *rc, 1.0, cfg);
        double worst = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t.mask[i]) worst = std::max(worst, std::abs(std::sqrt(t.sigma2[i]) - 1.0));
        CHECK(worst < 0.01);
        // bond lengths and angle decouple, so the angle marginal is exp(-W) exactly
        const auto mass =
            oracle::cell_masses([&](double th) { return -ref.angle_energy(th); }, t.lo, t.width, t.size());
        const std::vector<double> a_prime = centred_log_slope(mass, t.width, 1.0);
        CHECK(coverage(t, t.A_prime, t.A_prime_hw, a_prime) >= 0.85);
        std::vector<double> drift(t.size(), std::nan(""));
        for (std::size_t i = 0; i < t.size(); ++i) drift[i] = -t.sigma2[i] * a_prime[i];
        CHECK(coverage(t, t.b, t.b_hw, drift) >= 0.85);
    }

    TEST_CASE("direct and identity drifts agree on the toy system")
    {
        const auto s = make_system("toy2d");
        const auto rc = make_rc("toy2d", "x");
        const CoefficientTable t = estimate_coefficients(*s, *rc, 1.0, quick(20'000'000, 128, 43));
        REQUIRE(t.b_direct.size() == t.size());
        const PathAgreement agreement = compare_paths(t);
        REQUIRE(agreement.bins > 10);
        CHECK(agreement.factor > 1.0);
        INFO("worst ratio ", agreement.worst_ratio, " within ", agreement.within, "/", agreement.bins);
        CHECK(agreement.agree());
        std::size_t plain = 0;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t.mask[i] && t.count[i] >= 1000 && std::abs(t.b[i] - t.b_direct[i]) <= t.b_hw[i] + t.b_direct_hw[i])
                ++plain;
        CHECK(static_cast<double>(plain) >= 0.85 * static_cast<double>(agreement.bins));
    }

    TEST_CASE("a flattening bias leaves the mean force unchanged")
    {
        const auto s = make_system("toy2d");
        const auto rc = make_rc("toy2d", "x");
        auto cfg = quick(5'000'000, 128, 44);
        cfg.lo = -1.8;
        cfg.hi = 1.8;
        const CoefficientTable prior = estimate_coefficients(*s, *rc, 2.0, cfg);
        cfg.bias = &prior;
        cfg.traj.seed = 45;
        const CoefficientTable biased = estimate_coefficients(*s, *rc, 2.0, cfg);
        std::size_t n = 0, ok = 0;
        for (std::size_t i = 0; i < prior.size(); ++i) {
            if (!prior.mask[i] || !biased.mask[i]) continue;
            ++n;
            if (std::abs(prior.A_prime[i] - biased.A_prime[i]) <= std::hypot(prior.A_prime_hw[i], biased.A_prime_hw[i]))
                ++ok;
        }
        CHECK(static_cast<double>(ok) / static_cast<double>(n) >= 0.85);
        const double prior_min = *std::min_element(prior.count.begin(), prior.count.end());
        const double biased_min = *std::min_element(biased.count.begin(), biased.count.end());
        CHECK(biased_min > 2.0 * prior_min);
    }

    TEST_CASE("direct path without a laplacian is refused")
    {
        const auto s = make_system("three-atom");
        const auto rc = make_rc("three-atom", "angle");
        auto cfg = quick(100'000, 16, 1);
        cfg.path = CoefficientPath::Direct;
        CHECK_THROWS_AS(estimate_coefficients(*s, *rc, 1.0, cfg), ConfigError);
        CHECK(parse_path("direct") == CoefficientPath::Direct);
        CHECK_THROWS_AS(parse_path("both"), ConfigError);
    }

    TEST_CASE("identical closures give identical dynamics")
    {
        const CoefficientTable t = manual_table(64, -2.0, 2.0, [](double z) { return (z * z - 1) * (z * z - 1); },
                                                [](double) { return 1.0; });
        const Sde1d eff = make_sde(t, DynamicsKind::Effective);
        const Sde1d fre = make_sde(t, DynamicsKind::FreeEnergy);
        std::vector<double> starts(50, 1.0);
        const ResidenceOptions opt{.dt = 1e-3, .seed = 3};
        const auto a = residence_times(eff, DynamicsKind::Effective, starts, Region::below(-0.5), opt);
        const auto b = residence_times(fre, DynamicsKind::FreeEnergy, starts, Region::below(-0.5), opt);
        CHECK(a.times == b.times);
        CHECK_THROWS_AS(make_sde(t, DynamicsKind::Full), ConfigError);
    }

    TEST_CASE("masked gaps inside the range are rejected")
    {
        CoefficientTable t = manual_table(16, 0.0, 1.0, [](double z) { return z; }, [](double) { return 1.0; });
        t.mask[0] = false;
        CHECK_NOTHROW(make_sde(t, DynamicsKind::Effective));
        t.mask[7] = false;
        CHECK_THROWS_AS(make_sde(t, DynamicsKind::Effective), NumericalError);
        CHECK_THROWS_AS(rescale_by_sigma(t), NumericalError);
    }

    TEST_CASE("boltzmann density is normalised")
    {
        const CoefficientTable t = manual_table(40, -2.0, 2.0, [](double z) { return z * z; }, [](double) { return 1.0; });
        const auto p = boltzmann_density(t);
        double m = 0.0;
        for (double v : p) m += v * t.width;
        CHECK(m == doctest::Approx(1.0).epsilon(1e-14));
    }

    TEST_CASE("Kramers constants of the analytic angle free energy")
    {
        ThreeAtom s;
        const Profile p = tabulate_profile([&](double th) { return s.angle_energy(th); }, 0.8, 2.4, 1601);
        const KramersEstimate k = kramers_time(p, 1.187, kPi / 2);
        CHECK(k.delta_A == doctest::Approx(2.2565).epsilon(1e-3 / 2.2565));
        CHECK(k.omega_sp == doctest::Approx(7.828).epsilon(0.01 / 7.828));
        CHECK(k.omega_well == doctest::Approx(11.07).epsilon(0.01 / 11.07));
        CHECK(k.tau0 == doctest::Approx(0.0725).epsilon(0.001 / 0.0725));
        CHECK(k.predict(2.0) == doctest::Approx(k.tau0 * std::exp(2.0 * k.delta_A)));
        CHECK_THROWS_AS(kramers_time(p, kPi / 2, 1.187), NumericalError);
    }

    TEST_CASE("Kramers constants of the distance free-energy fit")
    {
        const double c1 = -16.4433, c2 = 3.87398, c3 = 34.2171, c4 = -6.36938, c5 = -7.89431;
        auto A = [&](double x) {
            const double d = x - 2.0;
            return c5 * std::pow(d, 6) / 6 + c4 * std::pow(d, 5) / 5 + c3 * std::pow(d, 4) / 4 + c2 * std::pow(d, 3) / 3 +
                   c1 * d * d / 2;
        };
        const Profile p = tabulate_profile(A, 1.0, 3.0, 2001);
        const KramersEstimate k = kramers_time(p, 1.25, 2.0);
        CHECK(k.omega_sp == doctest::Approx(4.055).epsilon(2e-3));
        CHECK(k.omega_well == doctest::Approx(5.809).epsilon(2e-3));
        CHECK(k.tau0 == doctest::Approx(0.267).epsilon(5e-3));
        const KramersEstimate e =
            kramers_time(p, 1.25, 2.0, std::function<double(double)>([](double z) { return z > 1.6 ? 3.465 : 2.563; }));
        CHECK(e.tau0 == doctest::Approx(0.03).epsilon(0.05));
    }

    TEST_CASE("Arrhenius fit")
    {
        const double tau0 = 0.07521, s = 2.25031;
        const auto exact = fit_arrhenius({{1.0, tau0 * std::exp(s * 1.0)}, {3.0, tau0 * std::exp(s * 3.0)}});
        CHECK(std::abs(exact.tau0 - tau0) < 1e-12);
        CHECK(std::abs(exact.s - s) < 1e-12);

        std::vector<ArrheniusPoint> pts;
        for (double b : {1.0, 1.5, 2.0, 3.0}) {
            const double tau = tau0 * std::exp(s * b) * (1.0 + (b == 2.0 ? 0.01 : -0.005));
            pts.push_back({b, tau, 0.02 * tau});
        }
        const auto fit = fit_arrhenius(pts);
        CHECK(std::abs(fit.s - s) < 0.02);
        CHECK(fit.s_error > 0.0);
        CHECK(fit.residuals.size() == 4);
        CHECK_THROWS_AS(fit_arrhenius({{1.0, 1.0}, {1.0, 2.0}}), ConfigError);
        CHECK_THROWS_AS(fit_arrhenius({{1.0, 1.0}}), ConfigError);
        CHECK_THROWS_AS(fit_arrhenius({{1.0, -1.0}, {2.0, 1.0}}), ConfigError);
    }

    TEST_CASE("sigma rescaling")
    {
        auto A = [](double z) { return (z * z - 1) * (z * z - 1); };
        const CoefficientTable unit = manual_table(200, -2.0, 2.0, A, [](double) { return 1.0; });
        const RescaledProfile r1 = rescale_by_sigma(unit);
        for (std::size_t i = 0; i < r1.z.size(); ++i) {
            CHECK(r1.h[i] == doctest::Approx(r1.z[i]).epsilon(1e-12));
            CHECK(r1.A_prime_tilde[i] == doctest::Approx(unit.A_prime[i]));
        }

        const double c = 1.5;
        const CoefficientTable scaled = manual_table(400, -2.0, 2.0, A, [&](double) { return c * c; });
        const RescaledProfile r = rescale_by_sigma(scaled);
        for (std::size_t i = 1; i < r.z.size(); ++i) {
            CHECK(r.h[i] > r.h[i - 1]);
            CHECK(r.h[i] == doctest::Approx(r.z[i] / c).epsilon(1e-12));
        }
        const Profile in_z{r.z, r.A};
        const Profile in_h{r.h, r.A};
        // targets off the midpoints between nodes so both profiles pick the same node
        const KramersEstimate kz = kramers_time(in_z, 0.996, 0.001);
        const KramersEstimate kh = kramers_time(in_h, 0.996 / c, 0.001 / c);
        CHECK(kh.tau0 == doctest::Approx(kz.tau0 / (c * c)).epsilon(1e-3));
        const KramersEstimate ks = kramers_time(in_z, 0.996, 0.001, std::function<double(double)>([&](double) { return c; }));
        CHECK(ks.tau0 == doctest::Approx(kh.tau0).epsilon(1e-3));
    }

    TEST_CASE("bound constants of the toy system")
    {
        for (double k : {2.0, 5.0}) {
            const auto s = make_system("toy2d", {{"k", k}});
            const auto rc = make_rc("toy2d", "x");
            std::vector<std::vector<double>> samples;
            TrajectoryConfig cfg{.dt = 1e-3, .steps = 200'000, .seed = 46, .burn_in = 1000, .thinning = 1000};
            simulate_overdamped(*s, 1.0, cfg, s->reference_configuration(),
                                [&](std::uint64_t, std::span<const double> q) { samples.emplace_back(q.begin(), q.end()); });
            const BoundConstants b = entropy_bound_constants(*s, *rc, 1.0, samples);
            CHECK(b.m == 1.0);
            CHECK(b.M == 1.0);
            CHECK(b.lambda == 0.0);
            CHECK(b.kappa == doctest::Approx(k).epsilon(1e-4));
            CHECK(b.samples == samples.size());
        }
    }

    TEST_CASE("three-atom angle bound constants follow the bond fluctuations")
    {
        const auto s = make_system("three-atom");
        const auto rc = make_rc("three-atom", "angle");
        const CoefficientTable t = estimate_coefficients(*s, *rc, 1.0, quick(4'000'000, 32, 47));
        std::vector<std::vector<double>> samples;
        TrajectoryConfig cfg{.dt = 1e-4, .steps = 10'000'000, .seed = 48, .burn_in = 10'000, .thinning = 10'000};
        simulate_overdamped(*s, 1.0, cfg, s->reference_configuration(),
                            [&](std::uint64_t, std::span<const double> q) { samples.emplace_back(q.begin(), q.end()); });
        double r_min = kInfinity, r_max = 0.0;
        for (const auto& q : samples) {
            const double r = std::hypot(q[1], q[2]);
            r_min = std::min(r_min, r);
            r_max = std::max(r_max, r);
        }
        const BoundConstants b = entropy_bound_constants(*s, *rc, 1.0, samples, &t);
        CHECK(b.m == doctest::Approx(1.0 / r_max).epsilon(1e-9));
        CHECK(b.M == doctest::Approx(1.0 / r_min).epsilon(1e-9));
        // bond spread sqrt(epsilon / beta) ~ 0.03 puts the sample maximum of lambda well above 0.01
        CHECK(b.lambda > 0.05);
        CHECK(b.lambda < 0.4);
    }
}
