#include "doctest.h"

#include "oracles.hpp"

#include "cg/transfer_operator.hpp"

#include <cmath>

using namespace cg;

namespace {

YGrid fixed(double lo, double hi, std::size_t n)
{
    YGrid g;
    g.lo = lo;
    g.hi = hi;
    g.n = n;
    g.automatic = false;
    return g;
}

} // namespace

TEST_SUITE("transfer_operator")
{
    TEST_CASE("power iteration on a diagonal matrix")
    {
        const Eigenpair e = leading_eigenpair(std::vector<double>{2.0, 0.0, 0.0, 1.0}, 2);
        CHECK(e.lambda == doctest::Approx(2.0).epsilon(1e-13));
        CHECK(e.phi[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(e.phi[1]) < 1e-12);
    }

    TEST_CASE("separable kernel is rank one")
    {
        const auto w1 = PairPotential::w1();
        const double xi = 0.7, beta = 1.3;
        const KernelMatrix k = build_kernel(w1, PairPotential::zero(), beta, xi, {});
        const std::size_t n = k.size();
        // every 2x2 minor vanishes
        double worst = 0.0;
        for (std::size_t i = 0; i < n; i += 37)
            for (std::size_t j = 0; j < n; j += 41)
                worst = std::max(worst, std::abs(k.at(i, j) * k.at(j, i) - k.at(i, i) * k.at(j, j)));
        CHECK(worst < 1e-12);

        const Eigenpair e = leading_eigenpair(k);
        double lam = 0.0;
        for (std::size_t i = 0; i < n; ++i) lam += k.w[i] * std::exp(xi * k.y[i] - beta * w1.value(k.y[i]));
        CHECK(e.log_lambda == doctest::Approx(std::log(lam)).epsilon(1e-12));
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = std::exp(0.5 * xi * k.y[i] - 0.5 * beta * w1.value(k.y[i]));
            norm += k.w[i] * r * r;
        }
        for (std::size_t i = 0; i < n; i += 13)
            CHECK(e.psi[i] ==
                  doctest::Approx(std::exp(0.5 * xi * k.y[i] - 0.5 * beta * w1.value(k.y[i])) / std::sqrt(norm))
                      .epsilon(1e-9));
    }

    TEST_CASE("kernel structure at zero tilt")
    {
        const KernelMatrix k = build_kernel(PairPotential::w1(), PairPotential::w2(), 1.0, 0.0, {});
        for (std::size_t i = 0; i < k.size(); ++i)
            for (std::size_t j = 0; j < i; ++j) {
                CHECK(k.at(i, j) >= 0.0);
                REQUIRE(std::abs(k.at(i, j) - k.at(j, i)) <= 1e-14 * std::max(k.at(i, j), 1e-300));
            }
    }

    TEST_CASE("dense Jacobi oracle")
    {
        const auto w1 = PairPotential::w1(), w2 = PairPotential::w2();
        const YGrid g = resolve_grid(w1, w2, 1.0, 1.0, YGrid{.n = 200});
        const SpectrumResult s = tilted_spectrum(w1, w2, 1.0, 1.0, g);
        const auto d = oracle::dense_spectrum(w1, w2, 1.0, 1.0, g.lo, g.hi, 200);
        CHECK(std::abs(s.pair.log_lambda - d.log_lambda) < 1e-10);
        double worst = 0.0;
        for (std::size_t i = 0; i < 200; ++i) worst = std::max(worst, std::abs(s.pair.psi[i] - d.psi[i]));
        CHECK(worst < 1e-8);
        double mass = 0.0;
        for (std::size_t i = 0; i < 200; ++i) {
            CHECK(s.pair.psi[i] > 0.0);
            mass += s.kernel.w[i] * s.pair.psi[i] * s.pair.psi[i];
        }
        CHECK(std::abs(mass - 1.0) < 1e-12);
        CHECK(second_eigenvalue(s.kernel, s.pair) < s.pair.lambda);
    }

    TEST_CASE("coarse and fine grids agree")
    {
        const auto w1 = PairPotential::w1(), w2 = PairPotential::w2();
        const double coarse = tilted_spectrum(w1, w2, 1.0, 0.5, YGrid{.n = 50}).pair.log_lambda;
        const double fine = tilted_spectrum(w1, w2, 1.0, 0.5, YGrid{.n = 400}).pair.log_lambda;
        CHECK(std::abs(std::expm1(coarse - fine)) < 1e-6);
    }

    TEST_CASE("grid doubling converges at order two or better")
    {
        const auto w1 = PairPotential::w1(), w2 = PairPotential::w2();
        const YGrid g = resolve_grid(w1, w2, 1.0, 0.0, {});
        const double ref = tilted_spectrum(w1, w2, 1.0, 0.0, fixed(g.lo, g.hi, 801)).pair.log_lambda;
        const double e1 = std::abs(tilted_spectrum(w1, w2, 1.0, 0.0, fixed(g.lo, g.hi, 13)).pair.log_lambda - ref);
        const double e2 = std::abs(tilted_spectrum(w1, w2, 1.0, 0.0, fixed(g.lo, g.hi, 25)).pair.log_lambda - ref);
        REQUIRE(e2 > 0.0);
        CHECK(std::log2(e1 / e2) >= 2.0);
    }

    TEST_CASE("gaussian tilt reduces to the moment generating function")
    {
        const double a = 1.0;
        const SpectralTable t =
            log_lambda_curve(PairPotential::quadratic(a), PairPotential::zero(), 1.0, uniform_xi_grid(-3, 3, 0.25), {});
        for (std::size_t i = 0; i < t.xi.size(); ++i) {
            const double xi = t.xi[i];
            CHECK(std::abs(t.log_Lambda(xi) - (a * xi + xi * xi / 2)) < 1e-6);
        }
        CHECK(t.log_lambda0() == doctest::Approx(t.log_lambda[12]).epsilon(1e-15));
    }

    TEST_CASE("benchmark curve is convex with consistent slopes")
    {
        const SpectralTable t = log_lambda_curve(PairPotential::w1(), PairPotential::w2(), 1.0,
                                                 uniform_xi_grid(-10, 10, 0.05), {});
        REQUIRE(t.xi.size() == 401);
        for (std::size_t i = 1; i + 1 < t.xi.size(); ++i) {
            CHECK(t.log_lambda[i + 1] - 2 * t.log_lambda[i] + t.log_lambda[i - 1] >= -1e-8);
            const double fd = (t.log_lambda[i + 1] - t.log_lambda[i - 1]) / (t.xi[i + 1] - t.xi[i - 1]);
            // centred difference error is O(h^2 * third derivative)
            CHECK(std::abs(fd - t.slope[i]) < 1e-3 * 0.05 * 0.05 * 100);
        }
        CHECK(std::abs(t.log_Lambda(0.0)) < 1e-10);
        CHECK(t.log_Lambda(10.0) > 14.0);
        CHECK(t.log_Lambda(10.0) < 16.0);
    }

    TEST_CASE("slope equals centred difference on a fine tilt step")
    {
        const auto w1 = PairPotential::w1(), w2 = PairPotential::w2();
        for (double xi : {-4.0, 0.0, 2.5, 7.0}) {
            const double h = 1e-3;
            const SpectralTable t = log_lambda_curve(w1, w2, 1.0, {xi - h, xi, xi + h}, {});
            const double fd = (t.log_lambda[2] - t.log_lambda[0]) / (2 * h);
            CHECK(std::abs(fd - t.slope[1]) < 1e-5);
        }
    }
}
