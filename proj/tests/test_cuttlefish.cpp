#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cobrnn/cuttlefish.hpp"
#include "cobrnn/objectives.hpp"
#include "cobrnn/rng.hpp"

using namespace cobrnn;

namespace {

CuttlefishConfig base_config(std::size_t dim, double lo, double hi) {
    CuttlefishConfig cfg;
    cfg.dim = dim;
    cfg.lower.assign(dim, lo);
    cfg.upper.assign(dim, hi);
    return cfg;
}

CuttlefishConfig random_config(Xoshiro256pp& rng) {
    CuttlefishConfig cfg;
    cfg.dim = 1 + rng.below(5);
    cfg.lower.resize(cfg.dim);
    cfg.upper.resize(cfg.dim);
    for (std::size_t i = 0; i < cfg.dim; ++i) {
        cfg.lower[i] = rng.uniform(-4.0, 0.0);
        cfg.upper[i] = cfg.lower[i] + rng.uniform(0.5, 5.0);
    }
    cfg.pop_size = 4 + rng.below(9);
    double f[4];
    double sum = 0.0;
    for (double& v : f) {
        v = rng.uniform01() + 0.05;
        sum += v;
    }
    cfg.group_fractions = {f[0] / sum, f[1] / sum, f[2] / sum, f[3] / sum};
    cfg.budget = cfg.pop_size * (2 + rng.below(5));
    cfg.seed = rng.next();
    return cfg;
}

}  // namespace

TEST_CASE("reflection-around-cell proposal arithmetic") {
    const Cell cell{{1.0, 2.0}, 0.0};
    const Cell best{{3.0, 3.0}, 0.0};
    REQUIRE(propose_cell_reflection(cell, best, 1.0, 0.0) == cell.point);
    REQUIRE(propose_cell_reflection(cell, best, 0.0, 1.0) ==
            std::vector<double>{2.0, 1.0});
    REQUIRE(propose_cell_reflection(cell, best, 0.5, 2.0) ==
            std::vector<double>{4.5, 3.0});
}

TEST_CASE("reflection-around-best proposal arithmetic") {
    const Cell cell{{0.0, 0.0}, 0.0};
    const Cell best{{2.0, -2.0}, 0.0};
    REQUIRE(propose_best_reflection(cell, best, 1.0, 0.0) == best.point);
    REQUIRE(propose_best_reflection(best, best, 0.7, 5.0) ==
            std::vector<double>{1.4, -1.4});
    REQUIRE(propose_best_reflection(cell, best, 1.0, 0.5) ==
            std::vector<double>{3.0, -3.0});
}

TEST_CASE("best-versus-average proposal arithmetic") {
    const Cell best{{1.0, 3.0}, 0.0};
    REQUIRE(propose_best_mean_offset(best, 2.0, 1.0, 1.0) ==
            std::vector<double>{0.0, 4.0});
    REQUIRE(propose_best_mean_offset(best, 2.0, 0.5, 0.0) ==
            std::vector<double>{0.5, 1.5});
    const Cell flat{{2.0, 2.0}, 0.0};
    REQUIRE(propose_best_mean_offset(flat, 2.0, 0.8, 3.0) ==
            std::vector<double>{1.6, 1.6});
}

TEST_CASE("uniform resample stays in the box and is centred") {
    CuttlefishConfig cfg = base_config(3, -2.0, 6.0);
    Xoshiro256pp rng(99);
    for (int i = 0; i < 10000; ++i) {
        const auto p = propose_uniform_resample(cfg, rng);
        for (double v : p) {
            REQUIRE(v >= -2.0);
            REQUIRE(v <= 6.0);
        }
    }

    CuttlefishConfig sliver = base_config(2, 1.0, 1.0 + 1e-9);
    for (int i = 0; i < 100; ++i)
        for (double v : propose_uniform_resample(sliver, rng))
            REQUIRE((v >= 1.0 && v <= 1.0 + 1e-9));

    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += propose_uniform_resample(cfg, rng)[0];
    const double width = 8.0;
    const double sigma = width / std::sqrt(12.0 * n);
    REQUIRE(std::fabs(sum / n - 2.0) < 3.0 * sigma);
}

TEST_CASE("config validation rejects degenerate boxes and bad fractions") {
    CuttlefishConfig cfg = base_config(2, 0.0, 0.0);
    cfg.pop_size = 4;
    cfg.budget = 10;
    REQUIRE_THROWS_AS(validate(cfg), UsageError);

    cfg = base_config(2, 0.0, 1.0);
    cfg.pop_size = 3;
    cfg.budget = 10;
    REQUIRE_THROWS_AS(validate(cfg), UsageError);

    cfg.pop_size = 4;
    cfg.group_fractions = {0.5, 0.5, 0.25, -0.25};
    REQUIRE_THROWS_AS(validate(cfg), UsageError);

    cfg.group_fractions = {0.4, 0.3, 0.2, 0.2};
    REQUIRE_THROWS_AS(validate(cfg), UsageError);

    cfg.group_fractions = {0.5, 0.25, 0.15, 0.1};
    cfg.budget = 3;
    REQUIRE_THROWS_AS(validate(cfg), UsageError);
}

TEST_CASE("initialization evaluates everyone and picks the argmin") {
    CuttlefishConfig cfg = base_config(2, -5.0, 5.0);
    cfg.pop_size = 6;
    cfg.budget = 6;
    cfg.seed = 4;
    const CuttlefishState st = cf_init(cfg, sphere);
    REQUIRE(st.population.size() == 6);
    REQUIRE(st.evals_used == 6);
    double best = st.population[0].fitness;
    for (const Cell& c : st.population) {
        best = std::min(best, c.fitness);
        for (std::size_t i = 0; i < 2; ++i) {
            REQUIRE(c.point[i] >= -5.0);
            REQUIRE(c.point[i] <= 5.0);
        }
    }
    REQUIRE(st.best.fitness == best);

    double mean = 0.0;
    for (double v : st.best.point) mean += v;
    mean /= double(st.best.point.size());
    REQUIRE(st.av_best == Catch::Approx(mean).margin(1e-12));
}

TEST_CASE("constant objective ties resolve to the lowest index") {
    CuttlefishConfig cfg = base_config(2, 0.0, 1.0);
    cfg.pop_size = 5;
    cfg.budget = 5;
    cfg.seed = 8;
    const CuttlefishState st =
        cf_init(cfg, [](const std::vector<double>&) { return 3.5; });
    REQUIRE(st.best.point == st.population[0].point);
}

TEST_CASE("initial best is identical across runs with one seed") {
    CuttlefishConfig cfg = base_config(3, -5.0, 5.0);
    cfg.pop_size = 8;
    cfg.budget = 8;
    cfg.seed = 123;
    const CuttlefishState a = cf_init(cfg, sphere);
    const CuttlefishState b = cf_init(cfg, sphere);
    REQUIRE(a.best.point == b.best.point);
    REQUIRE(a.best.fitness == b.best.fitness);
}

TEST_CASE("non-finite objectives are reported with the point") {
    CuttlefishConfig cfg = base_config(1, 0.0, 1.0);
    cfg.pop_size = 4;
    cfg.budget = 4;
    REQUIRE_THROWS_AS(
        cf_init(cfg, [](const std::vector<double>&) { return std::nan(""); }),
        NumericError);
}

TEST_CASE("identity parameters with only group one form a fixed point") {
    CuttlefishConfig cfg = base_config(3, -2.0, 2.0);
    cfg.pop_size = 6;
    cfg.budget = 60;
    cfg.q1 = cfg.q2 = 1.0;
    cfg.u1 = cfg.u2 = 0.0;
    cfg.group_fractions = {1.0, 0.0, 0.0, 0.0};
    cfg.seed = 5;
    CuttlefishState st = cf_init(cfg, sphere);
    const auto before = st.population;
    cf_step(st, cfg, sphere);
    for (std::size_t i = 0; i < before.size(); ++i) {
        REQUIRE(st.population[i].point == before[i].point);
        REQUIRE(st.population[i].fitness == before[i].fitness);
    }
}

TEST_CASE("random configs keep feasibility, population size, and budget") {
    Xoshiro256pp meta(321);
    for (int trial = 0; trial < 25; ++trial) {
        const CuttlefishConfig cfg = random_config(meta);
        validate(cfg);
        std::size_t out_of_box = 0;
        auto obj = [&](const std::vector<double>& x) {
            for (std::size_t i = 0; i < cfg.dim; ++i)
                if (x[i] < cfg.lower[i] || x[i] > cfg.upper[i]) ++out_of_box;
            return sphere(x);
        };
        CuttlefishState st = cf_init(cfg, obj);
        double prev_best = st.best.fitness;
        while (st.evals_used < cfg.budget) {
            cf_step(st, cfg, obj);
            REQUIRE(st.population.size() == cfg.pop_size);
            REQUIRE(st.best.fitness <= prev_best);
            prev_best = st.best.fitness;

            double mean = 0.0;
            for (double v : st.best.point) mean += v;
            mean /= double(st.best.point.size());
            REQUIRE(st.av_best == Catch::Approx(mean).margin(1e-12));

            for (const Cell& c : st.population) {
                REQUIRE(st.best.fitness <= c.fitness);
                for (std::size_t i = 0; i < cfg.dim; ++i) {
                    REQUIRE(c.point[i] >= cfg.lower[i]);
                    REQUIRE(c.point[i] <= cfg.upper[i]);
                }
            }
        }
        REQUIRE(st.evals_used == cfg.budget);
        REQUIRE(out_of_box == 0);
        REQUIRE_THROWS_AS(cf_step(st, cfg, obj), UsageError);
    }
}

TEST_CASE("trajectories are bit-identical per seed") {
    CuttlefishConfig cfg = base_config(4, -3.0, 3.0);
    cfg.pop_size = 10;
    cfg.budget = 300;
    cfg.seed = 777;
    const OptimizeResult a = cf_optimize(cfg, rastrigin);
    const OptimizeResult b = cf_optimize(cfg, rastrigin);
    REQUIRE(a.best_point == b.best_point);
    REQUIRE(a.best_fitness == b.best_fitness);
    REQUIRE(a.curve == b.curve);
}

TEST_CASE("convergence curves are non-increasing with one entry per step") {
    CuttlefishConfig cfg = base_config(3, -5.0, 5.0);
    cfg.pop_size = 8;
    cfg.budget = 8 + 8 * 12;
    cfg.seed = 31;
    const OptimizeResult res = cf_optimize(cfg, rosenbrock);
    REQUIRE(res.curve.size() == 12);
    for (std::size_t i = 1; i < res.curve.size(); ++i)
        REQUIRE(res.curve[i] <= res.curve[i - 1]);
}

TEST_CASE("a partial last step stops exactly at the budget") {
    CuttlefishConfig cfg = base_config(2, -1.0, 1.0);
    cfg.pop_size = 8;
    cfg.budget = 8 + 8 + 3;
    cfg.seed = 2;
    CuttlefishState st = cf_init(cfg, sphere);
    cf_step(st, cfg, sphere);
    REQUIRE(st.evals_used == 16);
    cf_step(st, cfg, sphere);
    REQUIRE(st.evals_used == 19);
}

TEST_CASE("two-dimensional sphere lands within 1e-3 of the origin") {
    // coarse grid confirms the optimum the optimizer is expected to find
    double grid_best = 1e18;
    double gx = -9, gy = -9;
    for (int i = -10; i <= 10; ++i)
        for (int j = -10; j <= 10; ++j) {
            const double f = sphere({i * 0.5, j * 0.5});
            if (f < grid_best) {
                grid_best = f;
                gx = i * 0.5;
                gy = j * 0.5;
            }
        }
    REQUIRE(gx == 0.0);
    REQUIRE(gy == 0.0);

    CuttlefishConfig cfg = base_config(2, -5.0, 5.0);
    cfg.pop_size = 20;
    cfg.budget = 20 + 20 * 100;
    cfg.seed = 6;
    const OptimizeResult res = cf_optimize(cfg, sphere);
    REQUIRE(std::sqrt(res.best_fitness) <= 1e-3);
}

TEST_CASE("two-dimensional rosenbrock reaches 1e-2 in 50k evaluations") {
    CuttlefishConfig cfg = base_config(2, -5.0, 5.0);
    cfg.pop_size = 40;
    cfg.budget = 50000;
    cfg.seed = 9;
    const OptimizeResult res = cf_optimize(cfg, rosenbrock);
    REQUIRE(res.best_fitness <= 1e-2);
}

TEST_CASE("named benchmark objectives evaluate to their textbook values") {
    REQUIRE(sphere({3.0, 4.0}) == 25.0);
    REQUIRE(rosenbrock({1.0, 1.0}) == 0.0);
    REQUIRE(rastrigin({0.0, 0.0, 0.0}) == 0.0);
    REQUIRE_THROWS_AS(benchmark_objective("simplex"), UsageError);
    REQUIRE(benchmark_objective("sphere")({1.0, 2.0}) == 5.0);
}
