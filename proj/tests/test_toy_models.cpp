#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "densemu/csv.hpp"
#include "densemu/toy_models.hpp"
#include "oracles.hpp"

using namespace densemu;

namespace {

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
    double m4 = 0.0;  // fourth central moment
};

Moments moments(const std::vector<double>& xs) {
    Moments out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    for (double x : xs) {
        const double d = x - out.mean;
        out.variance += d * d;
        out.m4 += d * d * d * d;
    }
    out.variance /= static_cast<double>(xs.size());
    out.m4 /= static_cast<double>(xs.size());
    return out;
}

}  // namespace

TEST_CASE("toy1 draws") {
    const CounterRng rng(2024);

    SUBCASE("x = 0 yields standard uniforms") {
        const std::size_t n = 100000;
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double y = toy1_draw(0.0, rng, 0, j);
            CHECK(y >= 0.0);
            CHECK(y <= 1.0);
            sum += y;
        }
        CHECK(sum / static_cast<double>(n) == doctest::Approx(0.5).epsilon(0.02));
    }

    SUBCASE("outputs stay inside [-1, 2]") {
        const std::size_t n = 1000000;
        for (std::size_t j = 0; j < n; ++j) {
            const double y = toy1_draw(0.37, rng, 1, j);
            CHECK(y >= -1.0);
            CHECK(y <= 2.0);
        }
    }

    SUBCASE("x = 1 mean matches an independent-generator oracle") {
        const std::size_t n = 1000000;
        std::vector<double> mine(n), other(n);
        for (std::size_t j = 0; j < n; ++j) mine[j] = toy1_draw(1.0, rng, 2, j);
        std::mt19937_64 gen(555);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double s = std::sin(1.0 * ((1.0 + normal(gen)) + (2.0 + normal(gen)))) +
                             unif(gen);
            other[j] = s >= -1.0 ? s : 0.0;
        }
        const Moments a = moments(mine), b = moments(other);
        const double se = std::sqrt(a.variance / n + b.variance / n);
        CHECK(std::fabs(a.mean - b.mean) <= 3.0 * se);
    }

    SUBCASE("x outside [0, 1] is rejected") {
        CHECK_THROWS(toy1_draw(-0.1, rng, 0, 0));
        CHECK_THROWS(toy1_draw(1.1, rng, 0, 0));
    }
}

TEST_CASE("toy2 draws") {
    const CounterRng rng(77);

    SUBCASE("x = 0 has mean 3/2") {
        const std::size_t n = 100000;
        const std::vector<double> zero(5, 0.0);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += toy2_draw(zero, rng, 0, j);
        CHECK(sum / static_cast<double>(n) == doctest::Approx(1.5).epsilon(0.01));
    }

    SUBCASE("x = e5 splits into two clusters 10 apart") {
        const std::vector<double> x{0.0, 0.0, 0.0, 0.0, 1.0};
        const std::size_t n = 20000;
        double lo_sum = 0.0, hi_sum = 0.0;
        std::size_t lo_count = 0, hi_count = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double y = toy2_draw(x, rng, 1, j);
            if (y < 11.5) {
                lo_sum += y;
                ++lo_count;
            } else {
                hi_sum += y;
                ++hi_count;
            }
        }
        CHECK(static_cast<double>(lo_count) / n == doctest::Approx(0.5).epsilon(0.05));
        const double gap = hi_sum / hi_count - lo_sum / lo_count;
        CHECK(gap == doctest::Approx(10.0).epsilon(0.02));
        CHECK(lo_sum / lo_count == doctest::Approx(6.5).epsilon(0.05));
    }

    SUBCASE("x = 1 variance matches an independent-generator oracle") {
        const std::size_t n = 1000000;
        const std::vector<double> ones(5, 1.0);
        std::vector<double> mine(n), other(n);
        for (std::size_t j = 0; j < n; ++j) mine[j] = toy2_draw(ones, rng, 2, j);
        std::mt19937_64 gen(556);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::bernoulli_distribution bern(0.5);
        for (std::size_t j = 0; j < n; ++j)
            other[j] = (3.0 + unif(gen)) * std::sin(-1.0 + normal(gen)) +
                       (1.0 + unif(gen)) + 10.0 * (bern(gen) ? 1.0 : 0.0) + 15.0;
        const Moments a = moments(mine), b = moments(other);
        const double se_var =
            std::sqrt((a.m4 - a.variance * a.variance) / n +
                      (b.m4 - b.variance * b.variance) / n);
        CHECK(std::fabs(a.variance - b.variance) <= 3.0 * se_var);
    }

    SUBCASE("outputs respect the analytic bounds") {
        const CounterRng point_rng(31);
        const std::vector<double> x{0.3, 0.8, 0.1, 0.9, 0.4};
        double trend = 0.0;
        for (std::size_t i = 0; i < 5; ++i) trend += (i + 1) * x[i];
        const double amp = x[0] + 2.0 * x[1] + 1.0;
        const double lo = -amp + 1.0 + trend;
        const double hi = amp + 2.0 + 10.0 * x[4] + trend;
        for (std::size_t j = 0; j < 1000000; ++j) {
            const double y = toy2_draw(x, point_rng, 0, j);
            CHECK(y >= lo);
            CHECK(y <= hi);
        }
    }

    SUBCASE("bad inputs are rejected") {
        CHECK_THROWS(toy2_draw(std::vector<double>{0.5}, rng, 0, 0));
        CHECK_THROWS(toy2_draw(std::vector<double>{0., 0., 0., 0., 1.5}, rng, 0, 0));
    }
}

TEST_CASE("gauss family") {
    Grid grid = Grid::over_interval(-6.0, 6.0, 512);

    SUBCASE("standard normal moments") {
        const Density f = gauss_family(0.0, 1.0, grid);
        const QuantitySet q = quantities(f);
        CHECK(std::fabs(q.mean) <= 1e-6);
        CHECK(q.variance == doctest::Approx(1.0).epsilon(1e-3));
    }

    SUBCASE("calls are deterministic") {
        const Density a = gauss_family(0.3, 0.8, grid);
        const Density b = gauss_family(0.3, 0.8, grid);
        for (std::size_t j = 0; j < grid.m; ++j) CHECK(a[j] == b[j]);
    }

    SUBCASE("distance between nearby members matches fine-grid quadrature") {
        const Density a = gauss_family(0.0, 1.0, grid);
        const Density b = gauss_family(0.1, 1.0, grid);
        const double expected = std::sqrt(oracles::quad(
            [](double t) {
                const double d =
                    oracles::gauss_pdf(t, 0.0, 1.0) - oracles::gauss_pdf(t, 0.1, 1.0);
                return d * d;
            },
            -6.0, 6.0, grid.m * 10));
        CHECK(l2_dist(a, b) == doctest::Approx(expected).epsilon(1e-4));
    }

    SUBCASE("nonpositive sigma is rejected") {
        CHECK_THROWS(gauss_family(0.0, 0.0, grid));
        CHECK_THROWS(gauss_family(0.0, -1.0, grid));
    }
}

TEST_CASE("designs") {
    const Box unit1{{0.0}, {1.0}};
    const Box unit2{{0.0, 0.0}, {1.0, 1.0}};

    SUBCASE("LHS places one point per stratum") {
        const Design d = make_design(DesignScheme::Lhs, 4, unit1, 3);
        std::vector<int> strata(4, 0);
        for (const auto& p : d.points)
            ++strata[std::min<std::size_t>(3, static_cast<std::size_t>(p[0] * 4.0))];
        for (int c : strata) CHECK(c == 1);

        const Design d2 = make_design(DesignScheme::Lhs, 8, unit2, 4);
        for (std::size_t k = 0; k < 2; ++k) {
            std::vector<int> hits(8, 0);
            for (const auto& p : d2.points)
                ++hits[std::min<std::size_t>(7, static_cast<std::size_t>(p[k] * 8.0))];
            for (int c : hits) CHECK(c == 1);
        }
    }

    SUBCASE("nested designs share their prefix") {
        const Design small = make_design(DesignScheme::NestedUniform, 10, unit2, 5);
        const Design large = make_design(DesignScheme::NestedUniform, 20, unit2, 5);
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t k = 0; k < 2; ++k)
                CHECK(small.points[i][k] == large.points[i][k]);
    }

    SUBCASE("uniform designs cover the box evenly") {
        const Design d = make_design(DesignScheme::Uniform, 10000, unit2, 6);
        for (std::size_t k = 0; k < 2; ++k) {
            double sum = 0.0;
            for (const auto& p : d.points) {
                CHECK(p[k] >= 0.0);
                CHECK(p[k] <= 1.0);
                sum += p[k];
            }
            CHECK(sum / 10000.0 == doctest::Approx(0.5).epsilon(0.04));
        }
    }
}

TEST_CASE("build_training") {
    SUBCASE("the analytic family bypasses sampling") {
        const StochasticModel model = StochasticModel::gauss();
        const Design design = make_design(DesignScheme::Uniform, 5, model.input_box, 7);
        const TrainingSet train = build_training(model, design, 2, 7, std::nullopt, 256);
        for (std::size_t i = 0; i < 5; ++i) {
            const Density expect =
                gauss_family(design.points[i][0], design.points[i][1], train.grid());
            CHECK(l2_dist(train.density(i), expect) <= 1e-12);
        }
    }

    SUBCASE("toy1 at x = 0 recovers the uniform mean") {
        const StochasticModel model = StochasticModel::toy1();
        Design design;
        design.points = {{0.0}};
        design.scheme = DesignScheme::Uniform;
        const TrainingSet train = build_training(model, design, 10000, 11);
        CHECK(quantities(train.density(0)).mean == doctest::Approx(0.5).epsilon(0.04));
    }

    SUBCASE("rebuilds are bit-identical") {
        const StochasticModel model = StochasticModel::toy1();
        const Design design = make_design(DesignScheme::Uniform, 6, model.input_box, 8);
        const TrainingSet a = build_training(model, design, 300, 9);
        const TrainingSet b = build_training(model, design, 300, 9);
        REQUIRE(a.size() == b.size());
        CHECK(a.grid().t1 == b.grid().t1);
        CHECK(a.grid().dt == b.grid().dt);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < a.grid().m; ++j)
                CHECK(a.density(i)[j] == b.density(i)[j]);
    }

    SUBCASE("every density satisfies the invariant") {
        const StochasticModel model = StochasticModel::toy2();
        const Design design = make_design(DesignScheme::Lhs, 8, model.input_box, 10);
        const TrainingSet train = build_training(model, design, 400, 12);
        for (std::size_t i = 0; i < train.size(); ++i) {
            CHECK(integrate(train.density(i)) == doctest::Approx(1.0).epsilon(1e-8));
            for (double v : train.density(i).values()) CHECK(v >= 0.0);
        }
    }

    SUBCASE("too few replicates are rejected") {
        const StochasticModel model = StochasticModel::toy1();
        const Design design = make_design(DesignScheme::Uniform, 3, model.input_box, 13);
        CHECK_THROWS(build_training(model, design, 1, 13));
    }
}

TEST_CASE("design and replicate export") {
    const StochasticModel model = StochasticModel::toy1();
    const Design design = make_design(DesignScheme::Uniform, 4, model.input_box, 21);
    const auto rows = draw_replicates(model, design, 16, 22);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) CHECK(r.size() == 16);

    write_design_csv(design, "design_export.csv");
    write_replicates_csv(rows, "replicates_export.csv");
    const auto design_back = read_numeric_csv("design_export.csv");
    const auto rows_back = read_numeric_csv("replicates_export.csv");
    REQUIRE(design_back.size() == 4);
    REQUIRE(rows_back.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(design_back[i][0] == design.points[i][0]);
        for (std::size_t j = 0; j < 16; ++j) CHECK(rows_back[i][j] == rows[i][j]);
    }
    std::remove("design_export.csv");
    std::remove("replicates_export.csv");
}
