#include "cli_common.hpp"

#include "cg/cg_dynamics.hpp"
#include "cg/error.hpp"
#include "cg/fp1d.hpp"
#include "cg/sde.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>

using namespace cg;
using namespace cgcli;

namespace {

std::vector<OptionSpec> with(std::vector<OptionSpec> a, const std::vector<OptionSpec>& b)
{
    for (const OptionSpec& o : b)
        if (std::none_of(a.begin(), a.end(), [&](const OptionSpec& e) { return e.key == o.key; })) a.push_back(o);
    return a;
}

const std::vector<OptionSpec> kSystem{
    {"system", "three-atom", "toy2d, three-atom or butane"},
    {"params", "", "system parameter overrides, e.g. k=5,separable=1"},
    {"rc", "angle", "reaction coordinate (x, angle, distance, dihedral)"},
    {"beta", "1", "inverse temperature"},
    {"workers", "0", "worker threads (0 = all cores)"}};

std::vector<OptionSpec> trajectory(const std::string& steps, const std::string& burn_in, const std::string& thinning)
{
    return {{"dt", "1e-3", "Euler-Maruyama step"},
            {"steps", steps, "number of steps"},
            {"burn_in", burn_in, "discarded steps"},
            {"thinning", thinning, "observation stride"},
            {"seed", "1", "seed"},
            {"q0", "", "initial configuration, comma separated (default: reference)"}};
}

/// Coefficient-estimation options, optionally under a prefix.
std::vector<OptionSpec> coefficient_options(const std::string& p)
{
    return {{p + "steps", "1e7", "coefficient trajectory steps"},
            {p + "burn_in", "1e5", "coefficient trajectory burn-in"},
            {p + "dt", "1e-3", "coefficient trajectory step"},
            {p + "seed", "11", "coefficient trajectory seed"},
            {p + "bins", "256", "histogram bins"},
            {p + "lo", "", "histogram lower edge (default: pilot quantile)"},
            {p + "hi", "", "histogram upper edge"},
            {p + "quantile", "1e-3", "pilot quantile trimmed per side"},
            {p + "pilot_steps", "1e6", "pilot run length"},
            {p + "min_count", "100", "bins with fewer samples are masked"},
            {p + "batches", "32", "batches for the half-widths"},
            {p + "chains", "1", "independent merged trajectories"},
            {p + "path", "identity", "drift path: identity or direct"},
            {p + "bias", "", "prior coefficient table used as a flattening bias"}};
}

struct Model {
    std::unique_ptr<MolecularSystem> system;
    std::unique_ptr<ReactionCoordinate> rc;
    double beta = 1.0;
};

Model model_of(const Run& r)
{
    Model m;
    m.system = make_system(r.str("system"), parse_params(r.str("params")));
    m.rc = make_rc(r.str("system"), r.str("rc"));
    m.beta = r.num("beta");
    if (!(m.beta > 0.0)) throw ConfigError("beta must be positive");
    return m;
}

std::vector<double> initial_q(const Run& r, const MolecularSystem& s)
{
    if (!r.has("q0")) return s.reference_configuration();
    std::vector<double> q = r.grid("q0");
    if (q.size() != s.dof()) throw ConfigError("q0 has the wrong dimension for " + s.name());
    return q;
}

TrajectoryConfig trajectory_of(const Run& r)
{
    TrajectoryConfig t;
    t.dt = r.num("dt");
    t.steps = r.count("steps");
    t.burn_in = r.count("burn_in");
    t.thinning = r.count("thinning");
    t.seed = r.count("seed");
    t.validate();
    return t;
}

CoefficientTable estimate(const Run& r, const Model& m, const std::string& p)
{
    CoefficientConfig c;
    c.traj.dt = r.num(p + "dt");
    c.traj.steps = r.count(p + "steps");
    c.traj.burn_in = r.count(p + "burn_in");
    c.traj.seed = r.count(p + "seed");
    c.bins = r.count(p + "bins");
    c.lo = r.optional_num(p + "lo");
    c.hi = r.optional_num(p + "hi");
    c.quantile = r.num(p + "quantile");
    c.pilot_steps = r.count(p + "pilot_steps");
    c.min_count = r.count(p + "min_count");
    c.batches = r.count(p + "batches");
    c.chains = r.count(p + "chains");
    c.workers = static_cast<unsigned>(r.count("workers"));
    c.path = parse_path(r.str(p + "path"));
    if (r.has("q0")) c.q0 = initial_q(r, *m.system);
    std::optional<CoefficientTable> prior;
    if (r.has(p + "bias")) {
        prior = read_table(r.str(p + "bias"));
        c.bias = &*prior;
    }
    return estimate_coefficients(*m.system, *m.rc, m.beta, c);
}

/// Table from --table, or estimated with the coeff_ options.
CoefficientTable table_for(const Run& r, const Model& m)
{
    if (r.has("table")) {
        CoefficientTable t = read_table(r.str("table"));
        if (!t.system.empty() && t.system != m.system->name())
            throw ConfigError("table was built for " + t.system + ", not " + m.system->name());
        return t;
    }
    std::cout << "estimating coefficients for " << m.system->name() << "/" << m.rc->name() << " at beta "
              << format_number(m.beta) << "\n";
    return estimate(r, m, "coeff_");
}

std::pair<Region, Region> wells_of(const Run& r, const Model& m)
{
    const std::optional<double> period = m.rc->period();
    WellPair w{Region::above(0.0), Region::below(0.0)};
    if (!r.has("start") || !r.has("target")) w = default_wells(*m.system, *m.rc);
    if (r.has("start")) w.start = parse_region(r.str("start"), period);
    if (r.has("target")) w.target = parse_region(r.str("target"), period);
    return {w.start, w.target};
}

void simulate(Run& r)
{
    const Model m = model_of(r);
    const TrajectoryConfig t = trajectory_of(r);
    std::vector<std::string> cols{"step", "time"};
    for (std::size_t i = 0; i < m.system->dof(); ++i) cols.push_back("q" + std::to_string(i));
    cols.push_back("xi");
    CsvWriter w(r.str("out"), r, cols);
    std::vector<double> row;
    simulate_overdamped(*m.system, m.beta, t, initial_q(r, *m.system), [&](std::uint64_t k, std::span<const double> q) {
        row.assign({static_cast<double>(k), static_cast<double>(k) * t.dt});
        row.insert(row.end(), q.begin(), q.end());
        row.push_back(m.rc->value(q));
        w.row(row);
    });
    maybe_svg(r, w.path());
}

HarvestResult harvest_for(const Run& r, const Model& m, const Region& well, std::size_t count)
{
    TrajectoryConfig t;
    t.dt = r.num("dt");
    t.steps = r.count("harvest_cap");
    t.burn_in = r.count("harvest_burn_in");
    t.thinning = r.count("harvest_thinning");
    t.seed = r.count("seed") ^ 0x9e3779b97f4a7c15ULL;
    return harvest_well_samples(*m.system, *m.rc, m.beta, well, count, t, initial_q(r, *m.system));
}

void harvest(Run& r)
{
    const Model m = model_of(r);
    const Region well = r.has("well") ? parse_region(r.str("well"), m.rc->period())
                                      : default_wells(*m.system, *m.rc).start;
    const HarvestResult h = harvest_for(r, m, well, r.count("count"));
    std::vector<std::string> cols{"index"};
    for (std::size_t i = 0; i < m.system->dof(); ++i) cols.push_back("q" + std::to_string(i));
    cols.push_back("xi");
    CsvWriter w(r.str("out"), r, cols,
                {{"harvest.acceptance", format_number(h.acceptance)},
                 {"harvest.steps", std::to_string(h.steps)},
                 {"harvest.well", well.describe()}});
    for (std::size_t i = 0; i < h.configurations.size(); ++i) {
        std::vector<double> row{static_cast<double>(i)};
        row.insert(row.end(), h.configurations[i].begin(), h.configurations[i].end());
        row.push_back(h.xi[i]);
        w.row(row);
    }
    std::cout << "collected " << h.configurations.size() << " states in " << well.describe() << ", acceptance "
              << format_number(h.acceptance) << "\n";
}

void coeffs(Run& r)
{
    const Model m = model_of(r);
    const CoefficientTable t = estimate(r, m, "");
    write_table(r.str("out"), r, t);
    double smin = INFINITY, smax = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t.mask[i]) {
            smin = std::min(smin, std::sqrt(t.sigma2[i]));
            smax = std::max(smax, std::sqrt(t.sigma2[i]));
            ++used;
        }
    std::cout << used << " of " << t.size() << " bins usable; sigma in [" << format_number(smin) << ", "
              << format_number(smax) << "]\n";
    if (t.b_direct.size() == t.size() && parse_path(r.str("path")) == CoefficientPath::Identity) {
        const PathAgreement a = compare_paths(t);
        std::cout << "direct vs identity drift: " << a.within << "/" << a.bins << " bins agree (worst ratio "
                  << format_number(a.worst_ratio) << ", simultaneous factor " << format_number(a.factor) << ")\n";
    }
    maybe_svg(r, r.str("out"));
}

void residence(Run& r)
{
    const Model m = model_of(r);
    const auto [start, target] = wells_of(r, m);
    std::vector<DynamicsKind> kinds;
    const std::string which = r.str("dynamics");
    if (which == "all")
        kinds = {DynamicsKind::Full, DynamicsKind::Effective, DynamicsKind::FreeEnergy};
    else
        kinds = {parse_dynamics(which)};

    const HarvestResult h = harvest_for(r, m, start, r.count("realizations"));
    std::cout << "harvested " << h.configurations.size() << " initial states (acceptance "
              << format_number(h.acceptance) << ")\n";
    ResidenceOptions opt;
    opt.dt = r.num("dt");
    opt.seed = r.count("seed");
    opt.step_cap = r.count("step_cap");
    opt.workers = static_cast<unsigned>(r.count("workers"));

    std::optional<CoefficientTable> table;
    CsvWriter w(r.str("out"), r,
                {"dynamics", "beta", "n", "censored", "mean", "half_width", "dt", "seed", "start", "target"});
    for (DynamicsKind k : kinds) {
        ResidenceTimeReport rep;
        if (k == DynamicsKind::Full) {
            rep = residence_times(*m.system, *m.rc, m.beta, h.configurations, target, opt);
        } else {
            if (!table) table = table_for(r, m);
            Sde1d sde = make_sde(*table, k);
            sde.beta = m.beta;
            rep = residence_times(sde, k, h.xi, target, opt);
        }
        w.row(std::vector<std::string>{to_string(k), format_number(m.beta), std::to_string(rep.n_realizations),
                                       std::to_string(rep.censored), format_number(rep.mean),
                                       format_number(rep.half_width), format_number(rep.dt), std::to_string(rep.seed),
                                       start.describe(), rep.target});
        std::cout << to_string(k) << ": " << format_number(rep.mean) << " +- " << format_number(rep.half_width)
                  << " (" << rep.n_realizations << " realizations, " << rep.censored << " censored)\n";
    }
}

Profile profile_of_table(const CoefficientTable& t)
{
    Profile p;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t.mask[i]) {
            p.z.push_back(t.z[i]);
            p.A.push_back(t.A[i]);
        }
    return p;
}

void kramers(Run& r)
{
    const std::string source = r.str("source");
    Profile p;
    std::optional<std::function<double(double)>> sigma;
    double well = 0.0, saddle = 0.0;
    if (source == "angle-potential") {
        const ThreeAtom s(parse_params(r.str("params")));
        p = tabulate_profile([&](double th) { return s.angle_energy(th); }, s.theta_saddle - 2.0 * s.delta_theta(),
                             s.theta_saddle + 2.0 * s.delta_theta(), r.count("nodes"));
        well = s.theta_well;
        saddle = s.theta_saddle;
    } else {
        const CoefficientTable t = read_table(source);
        p = profile_of_table(t);
        if (r.flag("use_sigma")) {
            const Sde1d sde = make_sde(t, DynamicsKind::Effective);
            sigma = [g = sde.sigma](double z) { return g(z); };
        }
    }
    if (r.has("well")) well = r.num("well");
    if (r.has("saddle")) saddle = r.num("saddle");
    if (source != "angle-potential" && (!r.has("well") || !r.has("saddle")))
        throw ConfigError("kramers from a table needs --well and --saddle");
    const KramersEstimate k = kramers_time(p, well, saddle, sigma, r.num("search"));
    const double beta = r.num("beta");
    CsvWriter w(r.str("out"), r,
                {"delta_A", "omega_sp", "omega_well", "z_sp", "z_well", "sigma_sp", "sigma_well", "tau0", "beta",
                 "tau_predicted"});
    w.row({k.delta_A, k.omega_sp, k.omega_well, k.z_sp, k.z_well, k.sigma_sp, k.sigma_well, k.tau0, beta,
           k.predict(beta)});
    std::cout << "delta_A=" << format_number(k.delta_A) << " omega_sp=" << format_number(k.omega_sp)
              << " omega_well=" << format_number(k.omega_well) << " tau0=" << format_number(k.tau0) << "\n";
}

void fit(Run& r)
{
    std::vector<ArrheniusPoint> pts;
    if (r.has("reports")) {
        const std::string kind = r.str("dynamics");
        std::string list = r.str("reports");
        std::size_t pos = 0;
        while (pos <= list.size()) {
            const std::size_t next = std::min(list.find(',', pos), list.size());
            const CsvTable t = read_csv(list.substr(pos, next - pos));
            const std::size_t cd = t.column("dynamics"), cb = t.column("beta"), cm = t.column("mean"),
                              ch = t.column("half_width");
            for (std::size_t i = 0; i < t.rows.size(); ++i)
                if (kind.empty() || t.rows[i][cd] == kind)
                    pts.push_back({t.number(i, cb), t.number(i, cm), t.number(i, ch)});
            pos = next + 1;
        }
    }
    if (r.has("points")) {
        std::string list = r.str("points");
        std::size_t pos = 0;
        while (pos <= list.size()) {
            const std::size_t next = std::min(list.find(';', pos), list.size());
            const std::string item = list.substr(pos, next - pos);
            std::vector<double> v;
            std::size_t q = 0;
            while (q <= item.size()) {
                const std::size_t e = std::min(item.find(':', q), item.size());
                v.push_back(std::stod(item.substr(q, e - q)));
                q = e + 1;
            }
            if (v.size() < 2 || v.size() > 3) throw ConfigError("fit point '" + item + "' must be beta:tau[:hw]");
            pts.push_back({v[0], v[1], v.size() == 3 ? v[2] : 0.0});
            pos = next + 1;
        }
    }
    const ArrheniusFit f = fit_arrhenius(pts);
    CsvWriter w(r.str("out"), r, {"tau0", "s", "s_error", "log_tau0_error", "points"});
    w.row({f.tau0, f.s, f.s_error, f.log_tau0_error, static_cast<double>(pts.size())});
    std::cout << "tau0=" << format_number(f.tau0) << " s=" << format_number(f.s) << " +- " << format_number(f.s_error)
              << "\n";
}

void fp(Run& r)
{
    const CoefficientTable t = read_table(r.str("table"));
    const Sde1d sde = make_sde(t, parse_dynamics(r.str("dynamics")));
    const std::string init = r.str("init");
    DensityGrid start;
    if (init == "uniform") {
        start = DensityGrid::on_sde_grid(sde, [](double) { return 1.0; });
    } else if (init.rfind("gaussian:", 0) == 0) {
        const auto a = init.find(':', 9);
        if (a == std::string::npos) throw ConfigError("init must be gaussian:mean:variance");
        const double mean = std::stod(init.substr(9, a - 9)), var = std::stod(init.substr(a + 1));
        start = DensityGrid::on_sde_grid(sde, [&](double z) { return std::exp(-(z - mean) * (z - mean) / (2 * var)); });
    } else {
        throw ConfigError("init must be uniform or gaussian:mean:variance");
    }
    const FpResult res = solve_fp(sde, start, r.num("fp_dt"), r.num("t_final"), r.count("every"));
    const DensityGrid stat = stationary_density(sde, start);
    CsvWriter w(r.str("out"), r, {"t", "z", "value"},
                {{"fp.max_mass_error", format_number(res.max_mass_error)}});
    for (const auto& s : res.snapshots)
        for (std::size_t i = 0; i < s.density.size(); ++i) w.row({s.t, s.density.node(i), s.density.p[i]});
    maybe_svg(r, w.path());
    if (r.has("entropy_out")) {
        CsvWriter e(r.str("entropy_out"), r, {"t", "relative_entropy", "tv_to_stationary"});
        for (const auto& s : res.snapshots)
            e.row({s.t, relative_entropy(s.density, stat), total_variation(s.density, stat)});
    }
    std::cout << res.steps << " steps, max mass error " << format_number(res.max_mass_error) << ", final TV to "
              << "stationary " << format_number(total_variation(res.snapshots.back().density, stat)) << "\n";
}

void check(Run& r)
{
    const Model m = model_of(r);
    const CoefficientTable t = table_for(r, m);
    StationarityConfig c;
    c.traj = trajectory_of(r);
    c.fp_dt = r.num("fp_dt");
    c.fp_t_final = r.num("t_final");
    if (r.has("q0")) c.q0 = initial_q(r, *m.system);
    const StationarityReport rep = marginal_stationarity_check(*m.system, *m.rc, t, c);
    CsvWriter w(r.str("out"), r, {"pair", "tv_distance"});
    w.row(std::vector<std::string>{"histogram-fp", format_number(rep.tv_histogram_fp)});
    w.row(std::vector<std::string>{"histogram-boltzmann", format_number(rep.tv_histogram_boltzmann)});
    w.row(std::vector<std::string>{"fp-boltzmann", format_number(rep.tv_fp_boltzmann)});
    std::cout << "TV histogram/fp " << format_number(rep.tv_histogram_fp) << ", histogram/boltzmann "
              << format_number(rep.tv_histogram_boltzmann) << ", fp/boltzmann " << format_number(rep.tv_fp_boltzmann)
              << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<OptionSpec> harvest_opts{{"harvest_burn_in", "1e6", "harvest burn-in"},
                                               {"harvest_thinning", "1e3", "harvest stride"},
                                               {"harvest_cap", "1e10", "harvest step cap"}};
    const std::vector<Command> commands{
        {"simulate", "full overdamped Langevin trajectory",
         with(with(kSystem, trajectory("1e5", "0", "100")), output_options("trajectory.csv")), simulate},
        {"harvest", "equilibrium states restricted to a well",
         with(with(with(kSystem, trajectory("1e5", "0", "100")),
                   with({{"well", "", "region (default: start well)"}, {"count", "1000", "states"}}, harvest_opts)),
              output_options("harvest.csv")),
         harvest},
        {"coeffs", "free energy, mean force, drift and diffusion per bin",
         with(with(with(kSystem, coefficient_options("")), {{"q0", "", "initial configuration"}}),
              output_options("coefficients.csv")),
         coeffs},
        {"residence", "mean residence times of the full, effective or free-energy dynamics",
         with(with(with(with(kSystem, {{"dynamics", "full", "full, effective, free-energy or all"},
                                       {"realizations", "1000", "initial states"},
                                       {"start", "", "start well (default per system)"},
                                       {"target", "", "target well (default per system)"},
                                       {"table", "", "coefficient table (default: estimate)"},
                                       {"dt", "1e-3", "time step"},
                                       {"seed", "1", "seed"},
                                       {"step_cap", "1e9", "steps before a realization is censored"},
                                       {"q0", "", "harvest start configuration"}}),
                        harvest_opts),
                   coefficient_options("coeff_")),
              output_options("residence.csv")),
         residence},
        {"kramers", "barrier and curvatures from a free-energy profile",
         with({{"source", "angle-potential", "angle-potential or a coefficient table CSV"},
               {"params", "", "three-atom parameter overrides"},
               {"nodes", "1601", "nodes of the tabulated analytic profile"},
               {"well", "", "well location (default: theta_well)"},
               {"saddle", "", "saddle location (default: theta_saddle)"},
               {"search", "0", "move to the extremal node within this distance"},
               {"use_sigma", "false", "include sigma at the well and saddle"},
               {"beta", "1", "inverse temperature for the prediction"}},
              output_options("kramers.csv")),
         kramers},
        {"fit", "Arrhenius fit ln tau = ln tau0 + s beta",
         with({{"reports", "", "residence report CSVs, comma separated"},
               {"dynamics", "", "keep only this dynamics from the reports"},
               {"points", "", "beta:tau[:hw] items separated by ';'"}},
              output_options("arrhenius.csv")),
         fit},
        {"fp", "Fokker-Planck evolution of the effective or free-energy dynamics",
         with({{"table", "", "coefficient table CSV"},
               {"dynamics", "effective", "effective or free-energy"},
               {"init", "uniform", "uniform or gaussian:mean:variance"},
               {"fp_dt", "1e-3", "time step"},
               {"t_final", "10", "final time"},
               {"every", "100", "snapshot stride in steps"},
               {"entropy_out", "", "optional CSV of H(phi(t)|phi_inf)"}},
              output_options("density.csv")),
         fp},
        {"check", "histogram vs Fokker-Planck vs exp(-beta A) on the coefficient grid",
         with(with(with(with(kSystem, trajectory("5e6", "1e5", "1")),
                        {{"table", "", "coefficient table (default: estimate)"},
                         {"fp_dt", "1e-2", "Fokker-Planck step"},
                         {"t_final", "100", "Fokker-Planck final time"}}),
                   coefficient_options("coeff_")),
              output_options("check.csv")),
         check},
    };
    return run_cli(argc, argv, "cgdyn", "Effective dynamics along a reaction coordinate", commands);
}
