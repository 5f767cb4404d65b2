#include "cg/chain_sampler.hpp"

#include "cg/error.hpp"
#include "cg/rng.hpp"

#include <cmath>
#include <sstream>

namespace cg {

void TrajectoryConfig::validate() const
{
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (thinning < 1) throw ConfigError("thinning must be at least 1");
    if (burn_in >= steps) throw ConfigError("burn_in must be smaller than steps");
    if (!(overflow_guard > 0.0)) throw ConfigError("overflow_guard must be positive");
}

namespace {

struct ChainSetup {
    const PairPotential* w1;
    const PairPotential* w2; // null when absent
    double beta;
    std::size_t n;           // number of bonds; atoms 0..n
    bool clamped;            // last atom fixed at v[n]
    double pull = 0.0;       // force on the last atom when free
    bool end_observable = false;
    bool per_bond = false;
    bool walls = false;
};

struct RealizationOutput {
    std::vector<double> force_batches;
    std::vector<std::vector<double>> bond_batches;
    std::size_t rejected = 0;
};

bool has_wall(const PairPotential& p) { return std::holds_alternative<HardWallPair>(p.kind()); }

/// Fills d1[i] = W1'(v_i - v_{i-1}) (i = 1..n) and d2[i] = W2'(v_{i+1} - v_{i-1})
/// (i = 1..n-1). Returns false if any bond sits in an excluded region.
bool bond_forces(const ChainSetup& s, const std::vector<double>& v, std::vector<double>& d1, std::vector<double>& d2)
{
    for (std::size_t i = 1; i <= s.n; ++i) {
        const PairValue p = s.w1->eval(v[i] - v[i - 1]);
        if (p.infinite) return false;
        d1[i] = p.derivative;
    }
    if (s.w2) {
        for (std::size_t i = 1; i + 1 <= s.n; ++i) {
            const PairValue p = s.w2->eval(v[i + 1] - v[i - 1]);
            if (p.infinite) return false;
            d2[i] = p.derivative;
        }
    }
    return true;
}

double cut_force(const ChainSetup& s, const std::vector<double>& d1, const std::vector<double>& d2, std::size_t j)
{
    double f = d1[j];
    if (s.w2) {
        if (j >= 2) f += d2[j - 1];
        if (j + 1 <= s.n) f += d2[j];
    }
    return f;
}

RealizationOutput run_chain(const ChainSetup& s, std::vector<double> v, const TrajectoryConfig& traj,
                            std::uint64_t stream, std::size_t batches)
{
    CounterRng rng(traj.seed, stream);
    const std::size_t n = s.n;
    const std::size_t last_free = s.clamped ? n - 1 : n;
    std::vector<double> d1(n + 1, 0.0), d2(n + 1, 0.0), trial(v), t1(d1), t2(d2);
    const double noise = std::sqrt(2.0 * traj.dt / s.beta);
    const double guard = traj.overflow_guard * static_cast<double>(n);

    const std::uint64_t samples = (traj.steps - traj.burn_in) / traj.thinning;
    if (samples < batches) throw ConfigError("too few recorded samples for the requested number of batches");
    BatchAccumulator force(samples / batches);
    std::vector<BatchAccumulator> bonds;
    if (s.per_bond) bonds.assign(n, BatchAccumulator(samples / batches));

    RealizationOutput out;
    if (!bond_forces(s, v, d1, d2)) throw ConfigError("initial chain configuration violates a hard wall");
    for (std::uint64_t step = 1; step <= traj.steps; ++step) {
        for (std::size_t i = 1; i <= last_free; ++i) {
            double g = d1[i];
            if (i + 1 <= n) g -= d1[i + 1];
            if (s.w2) {
                if (i >= 2) g += d2[i - 1];
                if (i + 2 <= n) g -= d2[i + 1];
            }
            if (!s.clamped && i == n) g -= s.pull;
            trial[i] = v[i] - traj.dt * g + noise * rng.normal();
        }
        if (s.walls) {
            if (bond_forces(s, trial, t1, t2)) {
                v.swap(trial);
                d1.swap(t1);
                d2.swap(t2);
            } else {
                ++out.rejected;
            }
        } else {
            v.swap(trial);
            bond_forces(s, v, d1, d2);
        }
        for (std::size_t i = 1; i <= last_free; ++i) {
            if (!(std::abs(v[i]) < guard)) {
                std::ostringstream os;
                os << "chain trajectory diverged at step " << step << " (dt=" << traj.dt << " too large?)";
                throw NumericalError(os.str());
            }
        }
        if (step <= traj.burn_in || (step - traj.burn_in) % traj.thinning != 0) continue;

        if (s.end_observable) {
            force.add(cut_force(s, d1, d2, n));
        } else {
            double acc = 0.0;
            for (std::size_t j = 1; j <= n; ++j) acc += cut_force(s, d1, d2, j);
            force.add(acc / static_cast<double>(n));
        }
        if (s.per_bond)
            for (std::size_t j = 1; j <= n; ++j) bonds[j - 1].add(d1[j]);
    }
    out.force_batches = force.batch_means();
    for (auto& b : bonds) out.bond_batches.push_back(b.batch_means());
    return out;
}

ChainMcResult run_realizations(const ChainSetup& s, const std::vector<double>& v0, const ChainMcConfig& cfg)
{
    cfg.traj.validate();
    if (cfg.realizations < 1) throw ConfigError("need at least one realization");
    if (cfg.batches_per_realization * cfg.realizations < 2) throw ConfigError("need at least two batches in total");
    std::vector<RealizationOutput> outs(cfg.realizations);
    parallel_for(cfg.realizations, cfg.workers, [&](std::size_t r) {
        outs[r] = run_chain(s, v0, cfg.traj, r, cfg.batches_per_realization);
    });
    ChainMcResult res;
    std::vector<double> pooled;
    for (const auto& o : outs) {
        pooled.insert(pooled.end(), o.force_batches.begin(), o.force_batches.end());
        res.rejected_steps += o.rejected;
    }
    res.force = independent_mean(pooled);
    if (s.per_bond) {
        for (std::size_t j = 0; j < s.n; ++j) {
            std::vector<double> b;
            for (const auto& o : outs) b.insert(b.end(), o.bond_batches[j].begin(), o.bond_batches[j].end());
            res.per_bond.push_back(independent_mean(b));
        }
    }
    return res;
}

} // namespace

ChainMcResult chain_force_clamped(const PairPotential& w1, const PairPotential& w2, double beta, double x,
                                  std::size_t n_bonds, const ChainMcConfig& cfg)
{
    if (n_bonds < 2) throw ConfigError("chain needs at least two bonds");
    if (!(beta > 0.0)) throw ConfigError("beta must be positive");
    ChainSetup s{&w1, w2.is_zero() ? nullptr : &w2, beta, n_bonds, true};
    s.end_observable = cfg.end_observable;
    s.walls = has_wall(w1) || (s.w2 && has_wall(w2));
    std::vector<double> v(n_bonds + 1);
    for (std::size_t i = 0; i <= n_bonds; ++i) v[i] = x * static_cast<double>(i);
    return run_realizations(s, v, cfg);
}

ChainMcResult chain_force_free_end(const PairPotential& w, double beta, double f, std::size_t n_bonds,
                                   const ChainMcConfig& cfg)
{
    if (n_bonds < 2) throw ConfigError("chain needs at least two bonds");
    if (!(beta > 0.0)) throw ConfigError("beta must be positive");
    ChainSetup s{&w, nullptr, beta, n_bonds, false, f};
    s.end_observable = true;
    s.per_bond = true;
    s.walls = has_wall(w);
    // start every bond at the minimiser of W(y) - f y on a coarse scan
    double best = 1.0, best_e = INFINITY;
    for (int k = 0; k <= 4000; ++k) {
        const double y = -10.0 + 0.005 * k;
        const PairValue p = w.eval(y);
        if (!p.infinite && p.value - f * y < best_e) {
            best_e = p.value - f * y;
            best = y;
        }
    }
    std::vector<double> v(n_bonds + 1);
    for (std::size_t i = 0; i <= n_bonds; ++i) v[i] = best * static_cast<double>(i);
    return run_realizations(s, v, cfg);
}

} // namespace cg
