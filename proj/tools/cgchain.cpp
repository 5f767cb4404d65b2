#include "cli_common.hpp"

#include "cg/chain_nn.hpp"
#include "cg/chain_nnn.hpp"
#include "cg/error.hpp"

#include <algorithm>
#include <iostream>

using namespace cg;
using namespace cgcli;

namespace {

std::vector<OptionSpec> with(std::vector<OptionSpec> a, const std::vector<OptionSpec>& b)
{
    for (const OptionSpec& o : b)
        if (std::none_of(a.begin(), a.end(), [&](const OptionSpec& e) { return e.key == o.key; })) a.push_back(o);
    return a;
}

const std::vector<OptionSpec> kNnModel{
    {"potential", "paper-quartic-W1", "pair potential (quadratic[:a], paper-quartic-W1, polynomial:c0,c1,..)"},
    {"beta", "1", "inverse temperature"},
    {"quad_n", "4001", "quadrature nodes"}};

const std::vector<OptionSpec> kNnnModel{
    {"w1", "paper-quartic-W1", "nearest-neighbour potential"},
    {"w2", "paper-quartic-W2", "next-nearest-neighbour potential"},
    {"beta", "1", "inverse temperature"},
    {"y_n", "400", "transfer-operator grid nodes"},
    {"y_lo", "", "fixed grid lower end (default: automatic per tilt)"},
    {"y_hi", "", "fixed grid upper end"},
    {"xi_step", "0.05", "tilt spacing of the spectral table"},
    {"workers", "0", "worker threads (0 = all cores)"}};

const std::vector<OptionSpec> kMc{
    {"n", "5,10,25,50,100", "numbers of bonds"},
    {"dt", "1e-3", "Euler-Maruyama step"},
    {"steps", "400000", "steps per realization"},
    {"burn_in", "40000", "discarded steps"},
    {"thinning", "10", "observation stride"},
    {"realizations", "8", "independent chains"},
    {"seed", "1", "master seed"},
    {"workers", "0", "worker threads (0 = all cores)"},
    {"end_observable", "false", "use the last-bond force instead of the all-cuts average"}};

QuadratureSpec quad_of(const Run& r)
{
    QuadratureSpec q;
    q.n = r.count("quad_n");
    return q;
}

ChainModelNN nn_model(const Run& r)
{
    ChainModelNN m{PairPotential::parse(r.str("potential")), r.num("beta")};
    m.validate();
    return m;
}

ChainModelNNN nnn_model(const Run& r)
{
    ChainModelNNN m{PairPotential::parse(r.str("w1")), PairPotential::parse(r.str("w2")), r.num("beta")};
    m.validate();
    return m;
}

YGrid grid_of(const Run& r)
{
    YGrid g;
    g.n = r.count("y_n");
    if (r.has("y_lo") || r.has("y_hi")) {
        g.lo = r.num("y_lo");
        g.hi = r.num("y_hi");
        g.automatic = false;
    }
    return g;
}

ChainMcConfig mc_of(const Run& r)
{
    ChainMcConfig c;
    c.traj.dt = r.num("dt");
    c.traj.steps = r.count("steps");
    c.traj.burn_in = r.count("burn_in");
    c.traj.thinning = r.count("thinning");
    c.traj.seed = r.count("seed");
    c.realizations = r.count("realizations");
    c.workers = static_cast<unsigned>(r.count("workers"));
    c.end_observable = r.flag("end_observable");
    return c;
}

std::vector<std::size_t> sizes(const Run& r)
{
    std::vector<std::size_t> out;
    for (double v : r.grid("n")) {
        if (!(v >= 2.0) || v != std::floor(v)) throw ConfigError("chain sizes must be integers >= 2");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

void nn_stress(Run& r)
{
    const ChainModelNN m = nn_model(r);
    const QuadratureSpec q = quad_of(r);
    CsvWriter w(r.str("out"), r, {"f", "strain"});
    for (double f : r.grid("f")) {
        const double y = strain_for_stress_nn(m, f, q);
        w.row({f, y});
        std::cout << "f=" << format_number(f) << " strain=" << format_number(y) << "\n";
    }
    maybe_svg(r, w.path());
}

void nn_force(Run& r)
{
    const ChainModelNN m = nn_model(r);
    const QuadratureSpec q = quad_of(r);
    CsvWriter w(r.str("out"), r, {"x", "F", "F_prime", "xi"});
    for (double x : r.grid("x")) {
        const FreeEnergyPoint p = free_energy_limit_nn(m, x, q);
        w.row({x, p.F, p.F_prime, p.xi});
        std::cout << "x=" << format_number(x) << " F_prime_inf=" << format_number(p.F_prime) << "\n";
    }
    maybe_svg(r, w.path());
}

void nn_reference(Run& r)
{
    const ChainModelNN m = nn_model(r);
    const ChainMcConfig cfg = mc_of(r);
    const double x = r.num("x");
    const double limit = free_energy_limit_nn(m, x, quad_of(r)).F_prime;
    CsvWriter w(r.str("out"), r, {"N", "x", "F_prime_N", "half_width", "F_prime_inf"});
    for (std::size_t N : sizes(r)) {
        const MeanEstimate e = reference_force_mc_nn(m, x, N, cfg);
        w.row({static_cast<double>(N), x, e.mean, e.half_width, limit});
        std::cout << "N=" << N << " F_prime_N=" << format_number(e.mean) << " +- " << format_number(e.half_width)
                  << " (limit " << format_number(limit) << ")\n";
    }
    maybe_svg(r, w.path());
}

void nnn_stress(Run& r)
{
    const ChainModelNNN m = nnn_model(r);
    const YGrid g = grid_of(r);
    CsvWriter w(r.str("out"), r, {"f", "strain"});
    for (double f : r.grid("f")) {
        const double y = strain_for_stress_nnn(m, f, g);
        w.row({f, y});
        std::cout << "f=" << format_number(f) << " strain=" << format_number(y) << "\n";
    }
    maybe_svg(r, w.path());
}

void nnn_force(Run& r)
{
    const ChainModelNNN m = nnn_model(r);
    const std::vector<double> xs = r.grid("x");
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    const SpectralTable table = spectral_table_covering(m, *lo, *hi, grid_of(r), r.num("xi_step"),
                                                        static_cast<unsigned>(r.count("workers")));
    CsvWriter w(r.str("out"), r, {"x", "F_prime", "xi"});
    for (double x : xs) {
        const NnnForcePoint p = free_energy_limit_nnn(m, x, table);
        w.row({x, p.F_prime, p.xi});
        std::cout << "x=" << format_number(x) << " F_prime_inf=" << format_number(p.F_prime) << "\n";
    }
    maybe_svg(r, w.path());
}

void nnn_variance(Run& r)
{
    const ChainModelNNN m = nnn_model(r);
    VarianceOptions opt;
    opt.samples = r.count("samples");
    opt.batches = r.count("batches");
    opt.seed = r.count("seed");
    CsvWriter w(r.str("out"), r,
                {"f", "sigma2", "half_width", "mean", "first_half", "second_half", "batch_length",
                 "autocorrelation_time", "unstable"});
    for (double f : r.grid("f")) {
        const VarianceEstimate v = asymptotic_variance_nnn(m, f, opt, grid_of(r));
        w.row({f, v.sigma2, v.half_width, v.mean, v.first_half, v.second_half, static_cast<double>(v.batch_length),
               v.autocorrelation_time, v.insufficient_samples ? 1.0 : 0.0});
        std::cout << "f=" << format_number(f) << " sigma2=" << format_number(v.sigma2) << " +- "
                  << format_number(v.half_width) << (v.insufficient_samples ? " (halves disagree)" : "") << "\n";
    }
    maybe_svg(r, w.path());
}

void nnn_reference(Run& r)
{
    const ChainModelNNN m = nnn_model(r);
    const ChainMcConfig cfg = mc_of(r);
    const double x = r.num("x");
    const SpectralTable table =
        spectral_table_covering(m, x, x, grid_of(r), r.num("xi_step"), static_cast<unsigned>(r.count("workers")));
    const double limit = free_energy_limit_nnn(m, x, table).F_prime;
    CsvWriter w(r.str("out"), r, {"N", "x", "F_prime_N", "half_width", "F_prime_inf"});
    for (std::size_t N : sizes(r)) {
        const MeanEstimate e = reference_force_mc_nnn(m, x, N, cfg);
        w.row({static_cast<double>(N), x, e.mean, e.half_width, limit});
        std::cout << "N=" << N << " F_prime_N=" << format_number(e.mean) << " +- " << format_number(e.half_width)
                  << " (limit " << format_number(limit) << ")\n";
    }
    maybe_svg(r, w.path());
}

void nnn_zero_t(Run& r)
{
    const ChainModelNNN m = nnn_model(r);
    std::optional<std::size_t> N;
    if (r.has("n")) N = static_cast<std::size_t>(r.count("n"));
    CsvWriter w(r.str("out"), r, {"x", "phi", "phi_prime", "J_N", "upper_bound", "convex"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double x : r.grid("x")) {
        const ZeroTResult z = zero_temperature(m, x, N);
        w.row({x, z.phi, z.phi_prime, z.J_N.value_or(nan), N ? z.upper_bound : nan, z.convex_on_window ? 1.0 : 0.0});
        std::cout << "x=" << format_number(x) << " phi=" << format_number(z.phi);
        if (z.J_N) std::cout << " J_N=" << format_number(*z.J_N);
        std::cout << "\n";
    }
    maybe_svg(r, w.path());
}

void nnn_spectrum(Run& r)
{
    const ChainModelNNN m = nnn_model(r);
    const std::vector<double> xi = r.grid("xi");
    const bool dump = r.has("psi_out");
    const SpectralTable t = log_lambda_curve(m.W1, m.W2, m.beta, xi, grid_of(r),
                                             static_cast<unsigned>(r.count("workers")), dump);
    CsvWriter w(r.str("out"), r, {"xi", "log_lambda", "slope"});
    for (std::size_t i = 0; i < t.xi.size(); ++i) w.row({t.xi[i], t.log_lambda[i], t.slope[i]});
    maybe_svg(r, w.path());
    if (dump) {
        CsvWriter p(r.str("psi_out"), r, {"xi", "y", "psi"});
        for (std::size_t i = 0; i < t.xi.size(); ++i)
            for (std::size_t j = 0; j < t.y[i].size(); ++j) p.row({t.xi[i], t.y[i][j], t.psi[i][j]});
    }
    std::cout << "wrote " << t.xi.size() << " tilts to " << w.path() << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Command> commands{
        {"nn stress", "strain y*(f) of the nearest-neighbour chain",
         with(with(kNnModel, {{"f", "-1:3:41", "stress values (v, v1,v2,.. or lo:hi:n)"}}),
              output_options("nn_stress.csv")),
         nn_stress},
        {"nn force", "thermodynamic-limit free energy and stress F'(x)",
         with(with(kNnModel, {{"x", "1.4", "strains (v, v1,v2,.. or lo:hi:n)"}}), output_options("nn_force.csv")),
         nn_force},
        {"nn reference", "finite-N clamped-chain Monte Carlo force",
         with(with(with(kNnModel, {{"x", "1.4", "strain"}}), kMc), output_options("nn_reference.csv")), nn_reference},
        {"nnn stress", "strain of the NNN chain under stress f (transfer operator)",
         with(with(kNnnModel, {{"f", "-1:3:41", "stress values"}}), output_options("nnn_stress.csv")), nnn_stress},
        {"nnn force", "thermodynamic-limit stress F'(x) of the NNN chain",
         with(with(kNnnModel, {{"x", "0.8:2:13", "strains"}}), output_options("nnn_force.csv")), nnn_force},
        {"nnn variance", "asymptotic variance of the bond length under the tilted chain",
         with(with(kNnnModel, {{"f", "0", "stress values"},
                               {"samples", "1000000", "Markov-chain samples"},
                               {"batches", "0", "batch count (0 = automatic length)"},
                               {"seed", "1", "seed"}}),
              output_options("nnn_variance.csv")),
         nnn_variance},
        {"nnn reference", "finite-N clamped NNN chain Monte Carlo force",
         with(with(with(kNnnModel, {{"x", "1.4", "strain"}}), kMc), output_options("nnn_reference.csv")),
         nnn_reference},
        {"nnn zero-t", "zero-temperature energy phi(x) and clamped-chain minimum J_N",
         with(with(kNnnModel, {{"x", "0.8:2:13", "strains"}, {"n", "", "bonds for J_N (empty = phi only)"}}),
              output_options("nnn_zero_t.csv")),
         nnn_zero_t},
        {"nnn spectrum", "log of the leading transfer-operator eigenvalue over tilts",
         with(with(kNnnModel, {{"xi", "-10:10:81", "tilts"}, {"psi_out", "", "optional eigenfunction CSV"}}),
              output_options("nnn_spectrum.csv")),
         nnn_spectrum},
    };
    return run_cli(argc, argv, "cgchain", "Thermodynamic limits of 1D atom chains", commands);
}
