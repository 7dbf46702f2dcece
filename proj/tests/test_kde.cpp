#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "densemu/kde.hpp"
#include "oracles.hpp"

using namespace densemu;

TEST_CASE("kde: single kernel value at its center before renormalization") {
    const double h = 0.4;
    const std::vector<double> samples = {0.0};
    Grid grid(-2.0, 0.25, 17);  // node 8 sits exactly at 0
    const auto raw = kde_raw(samples, h, grid);
    CHECK(raw[8] == doctest::Approx(1.0 / (h * std::sqrt(2.0 * std::numbers::pi)))
                        .epsilon(1e-14));
}

TEST_CASE("kde: repeated samples collapse to one kernel") {
    const double h = 0.3;
    Grid grid = Grid::over_interval(-2.0, 3.0, 301);
    const Density one = kde(std::vector<double>{0.7}, h, grid);
    const Density three = kde(std::vector<double>{0.7, 0.7, 0.7}, h, grid);
    for (std::size_t j = 0; j < grid.m; ++j)
        CHECK(three[j] == doctest::Approx(one[j]).epsilon(1e-13));
}

TEST_CASE("kde against the direct three-term oracle") {
    const std::vector<double> samples = {-1.0, 0.0, 1.0};
    const double h = 0.5;
    Grid grid(-4.0, 0.5, 17);  // node 8 at 0
    const auto raw = kde_raw(samples, h, grid);
    CHECK(raw[8] == doctest::Approx(oracles::kde_point(samples, h, 0.0)).epsilon(1e-13));
    // every node matches, not just the center
    for (std::size_t j = 0; j < grid.m; ++j)
        CHECK(raw[j] ==
              doctest::Approx(oracles::kde_point(samples, h, grid.node(j))).epsilon(1e-13));
}

TEST_CASE("kde errors") {
    Grid grid(0.0, 0.1, 11);
    CHECK_THROWS(kde(std::vector<double>{}, 0.5, grid));
    CHECK_THROWS(kde(std::vector<double>{1.0}, 0.0, grid));
    CHECK_THROWS(kde(std::vector<double>{1.0}, -1.0, grid));
}

TEST_CASE("kde renormalizes truncated boundary mass") {
    // half the kernel mass falls outside the grid
    Grid grid = Grid::over_interval(0.0, 3.0, 200);
    const Density f = kde(std::vector<double>{0.0}, 0.5, grid);
    CHECK(integrate(f) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("silverman bandwidth") {
    CHECK_THROWS(silverman_bandwidth(std::vector<double>{1.0}));
    CHECK_THROWS(silverman_bandwidth(std::vector<double>{2.0, 2.0, 2.0}));

    // standard normal sample: sd-hat -> 1
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n = 10000;
    std::vector<double> samples(n);
    for (double& y : samples) y = normal(rng);
    const double expected = 1.06 * std::pow(static_cast<double>(n), -0.2);
    CHECK(silverman_bandwidth(samples) == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("kde_grid covers the sample range with a 3h margin") {
    const std::vector<double> samples = {-1.0, 2.0};
    const Grid grid = kde_grid(samples, 0.5, 512);
    CHECK(grid.m == 512);
    CHECK(grid.t1 == doctest::Approx(-2.5));
    CHECK(grid.last() == doctest::Approx(3.5));
}
