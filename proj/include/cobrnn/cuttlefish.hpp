#pragma once

/*
 * Cuttlefish optimizer: a population metaheuristic for box-constrained
 * minimization. Candidate updates combine a "reflection" term (a scaled
 * reference point) with a "visibility" term (a scaled pull toward the best
 * point found so far).
 *
 * The population is partitioned by configurable fractions into four update
 * kinds, applied in cell-index order:
 *   G1  new = Q * cell + U * (best - cell)      local reflection
 *   G2  new = Q * best + U * (best - cell)      reflection of the best
 *   G3  new = Q * best + V * (best - avg_best)  offset around the best,
 *                                               avg_best = mean coordinate
 *                                               of the best point (scalar)
 *   G4  fresh uniform sample in the box
 * Q and U are redrawn per proposal from uniform ranges [q2, q1] and
 * [u2, u1]; V follows the same draw rule as U. Proposals are clamped to
 * the box, and a cell is replaced only when its proposal is strictly
 * better (greedy), so the best-so-far fitness never increases.
 *
 * Everything is deterministic given (config, objective): proposals are
 * generated from the state at the start of a step, and replacements are
 * applied in ascending cell order.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cobrnn/errors.hpp"
#include "cobrnn/mat.hpp"
#include "cobrnn/rng.hpp"

namespace cobrnn {

struct Cell {
    std::vector<double> point;
    double fitness = 0.0;
};

struct CuttlefishConfig {
    std::size_t dim = 0;
    std::vector<double> lower;  // componentwise strict lower bounds
    std::vector<double> upper;
    std::size_t pop_size = 40;
    // Population share of each update kind, in order G1..G4.
    std::array<double, 4> group_fractions = {0.5, 0.25, 0.15, 0.1};
    double q1 = 1.0, q2 = -0.5;  // reflection factor range, Q in [q2, q1]
    double u1 = 1.0, u2 = -0.5;  // visibility factor range, U in [u2, u1]
    std::size_t budget = 0;      // max objective evaluations
    std::uint64_t seed = 0;
};

struct CuttlefishState {
    std::vector<Cell> population;
    Cell best;           // best-so-far
    double av_best = 0;  // mean over dimensions of best.point
    std::size_t evals_used = 0;
    Xoshiro256pp rng{0};
};

inline void validate(const CuttlefishConfig& cfg) {
    if (cfg.dim == 0) throw UsageError("cuttlefish: dim must be positive");
    if (cfg.lower.size() != cfg.dim || cfg.upper.size() != cfg.dim)
        throw UsageError("cuttlefish: bounds must have length dim");
    for (std::size_t i = 0; i < cfg.dim; ++i)
        if (!(cfg.lower[i] < cfg.upper[i]))
            throw UsageError("cuttlefish: lower must be strictly below upper");
    if (cfg.pop_size < 4) throw UsageError("cuttlefish: pop_size must be >= 4");
    double frac_sum = 0.0;
    for (double f : cfg.group_fractions) {
        if (f < 0.0) throw UsageError("cuttlefish: group fractions must be >= 0");
        frac_sum += f;
    }
    if (std::abs(frac_sum - 1.0) > 1e-12)
        throw UsageError("cuttlefish: group fractions must sum to 1");
    if (cfg.budget < cfg.pop_size)
        throw UsageError("cuttlefish: budget must cover the initial population");
}

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

/// Index boundaries of the four groups: group g spans [bounds[g], bounds[g+1]).
inline std::array<std::size_t, 5> group_bounds(const CuttlefishConfig& cfg) {
    std::array<std::size_t, 5> b{};
    double cum = 0.0;
    for (std::size_t g = 0; g < 4; ++g) {
        cum += cfg.group_fractions[g];
        b[g + 1] = static_cast<std::size_t>(
            std::llround(cum * double(cfg.pop_size)));
    }
    b[4] = cfg.pop_size;
    return b;
}

inline void clamp_to_box(std::vector<double>& x, const CuttlefishConfig& cfg) {
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::clamp(x[i], cfg.lower[i], cfg.upper[i]);
}

template <class F>
double checked_eval(F&& obj, const std::vector<double>& x) {
    const double f = obj(x);
    if (!std::isfinite(f)) {
        std::string msg = "cuttlefish: objective returned non-finite value at (";
        for (std::size_t i = 0; i < x.size(); ++i)
            msg += (i ? ", " : "") + std::to_string(x[i]);
        throw NumericError(msg + ")");
    }
    return f;
}

}  // namespace detail

/// G1 proposal: reflect the cell's own point and pull toward the best.
inline std::vector<double> propose_cell_reflection(const Cell& cell, const Cell& best,
                                                   double Q, double U) {
    std::vector<double> out(cell.point.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = Q * cell.point[i] + U * (best.point[i] - cell.point[i]);
    return out;
}

/// G2 proposal: reflect the best point, visibility from the cell's gap to it.
inline std::vector<double> propose_best_reflection(const Cell& cell, const Cell& best,
                                                   double Q, double U) {
    std::vector<double> out(cell.point.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = Q * best.point[i] + U * (best.point[i] - cell.point[i]);
    return out;
}

/// G3 proposal: reflect the best point, visibility from its spread around
/// the mean coordinate av_best.
inline std::vector<double> propose_best_mean_offset(const Cell& best, double av_best,
                                                    double Q, double V) {
    std::vector<double> out(best.point.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = Q * best.point[i] + V * (best.point[i] - av_best);
    return out;
}

/// G4 proposal: fresh uniform sample in the box.
inline std::vector<double> propose_uniform_resample(const CuttlefishConfig& cfg,
                                                    Xoshiro256pp& rng) {
    std::vector<double> out(cfg.dim);
    for (std::size_t i = 0; i < cfg.dim; ++i)
        out[i] = rng.uniform(cfg.lower[i], cfg.upper[i]);
    return out;
}

/// Seed the population uniformly in the box and evaluate it.
template <class F>
CuttlefishState cf_init(const CuttlefishConfig& cfg, F&& obj) {
    validate(cfg);
    CuttlefishState st;
    st.rng = derive_stream(cfg.seed, "cuttlefish");
    st.population.resize(cfg.pop_size);
    for (auto& cell : st.population) {
        cell.point = propose_uniform_resample(cfg, st.rng);
        cell.fitness = detail::checked_eval(obj, cell.point);
    }
    st.evals_used = cfg.pop_size;
    std::size_t arg = 0;
    for (std::size_t i = 1; i < st.population.size(); ++i)
        if (st.population[i].fitness < st.population[arg].fitness) arg = i;
    st.best = st.population[arg];
    st.av_best = detail::mean_of(st.best.point);
    return st;
}

/// One generation: propose, clamp, evaluate, and greedily replace.
/// If fewer than pop_size evaluations remain in the budget, only the first
/// cells in index order receive proposals; the state stays valid.
template <class F>
void cf_step(CuttlefishState& st, const CuttlefishConfig& cfg, F&& obj) {
    if (st.evals_used >= cfg.budget)
        throw UsageError("cf_step: evaluation budget exhausted");

    const auto bounds = detail::group_bounds(cfg);
    const std::size_t n_proposals =
        std::min(cfg.pop_size, cfg.budget - st.evals_used);

    // Proposals are generated from the pre-step best/av_best so that the
    // evaluation loop is order-free; draws happen in cell-index order.
    std::vector<std::vector<double>> proposals(n_proposals);
    for (std::size_t i = 0; i < n_proposals; ++i) {
        std::size_t group = 3;
        while (group > 0 && i < bounds[group]) --group;

        if (group == 3) {
            proposals[i] = propose_uniform_resample(cfg, st.rng);
        } else {
            const double Q = st.rng.uniform01() * (cfg.q1 - cfg.q2) + cfg.q2;
            const double U = st.rng.uniform01() * (cfg.u1 - cfg.u2) + cfg.u2;
            if (group == 0)
                proposals[i] = propose_cell_reflection(st.population[i], st.best, Q, U);
            else if (group == 1)
                proposals[i] = propose_best_reflection(st.population[i], st.best, Q, U);
            else
                proposals[i] = propose_best_mean_offset(st.best, st.av_best, Q, U);
            detail::clamp_to_box(proposals[i], cfg);
        }
    }

    std::vector<double> fitness(n_proposals);
    for (std::size_t i = 0; i < n_proposals; ++i)
        fitness[i] = detail::checked_eval(obj, proposals[i]);
    st.evals_used += n_proposals;

    for (std::size_t i = 0; i < n_proposals; ++i)
        if (fitness[i] < st.population[i].fitness) {
            st.population[i].point = std::move(proposals[i]);
            st.population[i].fitness = fitness[i];
            if (fitness[i] < st.best.fitness) {
                st.best = st.population[i];
                st.av_best = detail::mean_of(st.best.point);
            }
        }
}

struct OptimizeResult {
    std::vector<double> best_point;
    double best_fitness = 0.0;
    std::vector<double> curve;  // best-so-far fitness after each step
};

/// Run the optimizer until the evaluation budget is spent.
template <class F>
OptimizeResult cf_optimize(const CuttlefishConfig& cfg, F&& obj) {
    CuttlefishState st = cf_init(cfg, obj);
    OptimizeResult res;
    while (st.evals_used < cfg.budget) {
        cf_step(st, cfg, obj);
        res.curve.push_back(st.best.fitness);
    }
    res.best_point = st.best.point;
    res.best_fitness = st.best.fitness;
    return res;
}

}  // namespace cobrnn
