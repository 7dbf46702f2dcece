#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "densemu/density.hpp"
#include "oracles.hpp"

using namespace densemu;

namespace {

Density uniform_density(double lo, double hi, std::size_t m) {
    Grid grid = Grid::over_interval(lo, hi, m);
    return Density(grid, std::vector<double>(m, 1.0));
}

Density point_mass(const Grid& grid, std::size_t node) {
    std::vector<double> v(grid.m, 0.0);
    v[node] = 1.0 / grid.dt;
    return Density(grid, std::move(v));
}

}  // namespace

TEST_CASE("density construction enforces the invariant") {
    Grid grid(0.0, 0.1, 11);
    Density f(grid, std::vector<double>(11, 3.7));
    CHECK(integrate(f) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : f.values()) CHECK(v >= 0.0);

    CHECK_THROWS(Density(grid, std::vector<double>(11, -1.0)));
    CHECK_THROWS(Density(grid, std::vector<double>(11, 0.0)));
    CHECK_THROWS(Density(grid, std::vector<double>(5, 1.0)));
}

TEST_CASE("integrate") {
    CHECK(integrate(uniform_density(0.0, 1.0, 64)) == doctest::Approx(1.0).epsilon(1e-14));

    Grid grid(0.0, 0.25, 9);
    CHECK(integrate(point_mass(grid, 4)) == doctest::Approx(1.0).epsilon(1e-14));

    // raw discretized standard normal keeps its mass on [-6, 6]
    Grid wide = Grid::over_interval(-6.0, 6.0, 512);
    double raw = 0.0;
    for (std::size_t j = 0; j < wide.m; ++j) raw += oracles::gauss_pdf(wide.node(j), 0.0, 1.0);
    raw *= wide.dt;
    CHECK(raw == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("distances: identities and disjoint supports") {
    Grid grid = Grid::over_interval(0.0, 4.0, 256);
    const Density f = oracles::mixture_density(grid, {1.2, 2.5}, {0.2, 0.4}, {0.5, 0.5});
    CHECK(l1_dist(f, f) == 0.0);
    CHECK(l2_dist(f, f) == 0.0);
    CHECK(hellinger_dist(f, f) == 0.0);

    const Density a = point_mass(grid, 10);
    const Density b = point_mass(grid, 200);
    CHECK(l1_dist(a, b) == doctest::Approx(2.0).epsilon(1e-12));
    const double he = hellinger_dist(a, b);
    CHECK(he * he == doctest::Approx(2.0).epsilon(1e-12));

    Grid other(0.0, 0.5, 32);
    const Density g = uniform_density(0.0, 1.0, 32);
    CHECK_THROWS(l1_dist(f, g));
    CHECK_THROWS(l2_dist(f, g));
    CHECK_THROWS(hellinger_dist(f, g));
    CHECK(!same_grid(grid, other));
}

TEST_CASE("distances against a fine-grid quadrature oracle") {
    Grid grid = Grid::over_interval(-8.0, 9.0, 1024);
    std::vector<double> va(grid.m), vb(grid.m);
    for (std::size_t j = 0; j < grid.m; ++j) {
        va[j] = oracles::gauss_pdf(grid.node(j), 0.0, 1.0);
        vb[j] = oracles::gauss_pdf(grid.node(j), 1.0, 1.0);
    }
    const Density a(grid, va), b(grid, vb);

    const std::size_t fine = grid.m * 10;
    auto diff = [](double t) {
        return oracles::gauss_pdf(t, 0.0, 1.0) - oracles::gauss_pdf(t, 1.0, 1.0);
    };
    const double l1 = oracles::quad([&](double t) { return std::fabs(diff(t)); }, -8.0, 9.0, fine);
    const double l2 = std::sqrt(oracles::quad([&](double t) { return diff(t) * diff(t); },
                                              -8.0, 9.0, fine));
    const double he = std::sqrt(oracles::quad(
        [&](double t) {
            const double d = std::sqrt(oracles::gauss_pdf(t, 0.0, 1.0)) -
                             std::sqrt(oracles::gauss_pdf(t, 1.0, 1.0));
            return d * d;
        },
        -8.0, 9.0, fine));

    CHECK(l1_dist(a, b) == doctest::Approx(l1).epsilon(1e-4));
    CHECK(l2_dist(a, b) == doctest::Approx(l2).epsilon(1e-4));
    CHECK(hellinger_dist(a, b) == doctest::Approx(he).epsilon(1e-4));
}

TEST_CASE("quantities") {
    const Density u = uniform_density(0.0, 1.0, 512);
    const QuantitySet qu = quantities(u);
    CHECK(qu.mean == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(std::fabs(qu.q25 - 0.25) <= u.grid().dt);

    // density symmetric about c
    const double c = 2.0;
    Grid grid(c - 3.0, 6.0 / 510.0, 511);
    std::vector<double> v(grid.m);
    for (std::size_t j = 0; j < grid.m; ++j) v[j] = oracles::gauss_pdf(grid.node(j), c, 0.7);
    const Density sym(grid, v);
    const QuantitySet qs = quantities(sym);
    CHECK(qs.mean == doctest::Approx(c).epsilon(1e-9));
    CHECK(std::fabs(quantile(sym, 0.5) - c) <= grid.dt);

    Grid wide = Grid::over_interval(-6.0, 6.0, 512);
    std::vector<double> nv(wide.m);
    for (std::size_t j = 0; j < wide.m; ++j) nv[j] = oracles::gauss_pdf(wide.node(j), 0.0, 1.0);
    const Density normal(wide, nv);
    const QuantitySet qn = quantities(normal);
    CHECK(qn.variance == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(std::fabs(qn.q01 - (-2.326)) <= 2.0 * wide.dt);
    CHECK(std::fabs(qn.q99 - 2.326) <= 2.0 * wide.dt);
}

TEST_CASE("quantiles are monotone and point masses have tiny variance") {
    Grid grid = Grid::over_interval(0.0, 5.0, 128);
    const auto densities = oracles::random_densities(grid, 5, 20240901);
    for (const auto& f : densities) {
        double prev = -1e300;
        for (double p = 0.02; p < 1.0; p += 0.02) {
            const double q = quantile(f, p);
            CHECK(q >= prev);
            prev = q;
        }
    }
    const Density pm = point_mass(grid, 64);
    CHECK(quantities(pm).variance < grid.dt * grid.dt);
}

TEST_CASE("distance properties on random densities") {
    Grid grid = Grid::over_interval(-1.0, 3.0, 200);
    const auto ds = oracles::random_densities(grid, 9, 7);
    for (std::size_t i = 0; i + 2 < ds.size(); i += 3) {
        const Density &f = ds[i], &g = ds[i + 1], &h = ds[i + 2];
        CHECK(l1_dist(f, h) <= l1_dist(f, g) + l1_dist(g, h) + 1e-10);
        CHECK(l2_dist(f, h) <= l2_dist(f, g) + l2_dist(g, h) + 1e-10);
        CHECK(hellinger_dist(f, h) <= hellinger_dist(f, g) + hellinger_dist(g, h) + 1e-10);
        const double he = hellinger_dist(f, g);
        CHECK(he * he <= l1_dist(f, g) + 1e-12);
    }
}

TEST_CASE("relative_errors") {
    Grid grid = Grid::over_interval(-0.5, 2.0, 640);
    const Density truth = oracles::mixture_density(grid, {0.4, 1.2}, {0.15, 0.3}, {0.6, 0.4});

    SUBCASE("exact estimate gives all zeros") {
        const auto e = relative_errors(truth, truth);
        for (double v : e) CHECK(v == 0.0);
    }

    SUBCASE("shifted uniform mean error is 100 percent") {
        std::vector<double> a(grid.m, 0.0), b(grid.m, 0.0);
        for (std::size_t j = 0; j < grid.m; ++j) {
            const double t = grid.node(j);
            if (t >= 0.0 && t < 1.0) a[j] = 1.0;
            if (t >= 0.5 && t < 1.5) b[j] = 1.0;
        }
        const Density fa(grid, a), fb(grid, b);
        const auto e = relative_errors(fa, fb);
        CHECK(e[static_cast<std::size_t>(Quantity::Mean)] ==
              doctest::Approx(100.0).epsilon(1e-2));
    }

    SUBCASE("matches a direct recomputation") {
        const Density est = oracles::mixture_density(grid, {0.5, 1.1}, {0.2, 0.25}, {0.5, 0.5});
        const auto e = relative_errors(truth, est);

        const double dt = grid.dt;
        double l1n = 0, l1d = 0, l2n = 0, l2d = 0, hen = 0;
        for (std::size_t j = 0; j < grid.m; ++j) {
            l1n += std::fabs(truth[j] - est[j]) * dt;
            l1d += std::fabs(truth[j]) * dt;
            l2n += (truth[j] - est[j]) * (truth[j] - est[j]) * dt;
            l2d += truth[j] * truth[j] * dt;
            const double r = std::sqrt(truth[j]) - std::sqrt(est[j]);
            hen += r * r * dt;
        }
        CHECK(e[0] == doctest::Approx(100.0 * l1n / l1d).epsilon(1e-6));
        CHECK(e[1] == doctest::Approx(100.0 * l2n / l2d).epsilon(1e-6));
        CHECK(e[2] == doctest::Approx(100.0 * hen / l1d).epsilon(1e-6));
        const double he = hellinger_dist(truth, est);
        CHECK(e[2] == doctest::Approx(100.0 * he * he).epsilon(1e-9));
    }

    SUBCASE("near-zero true scalars are flagged, not blown up") {
        Grid sgrid(-2.0, 4.0 / 400.0, 401);  // symmetric about zero
        std::vector<double> v(sgrid.m);
        for (std::size_t j = 0; j < sgrid.m; ++j)
            v[j] = oracles::gauss_pdf(sgrid.node(j), 0.0, 0.5);
        const Density sym(sgrid, v);
        const auto e = relative_errors(sym, sym);
        CHECK(std::isnan(e[static_cast<std::size_t>(Quantity::Mean)]));
        CHECK(e[static_cast<std::size_t>(Quantity::Variance)] == 0.0);
    }
}

TEST_CASE("density CSV round trip") {
    Grid grid = Grid::over_interval(-1.0, 1.0, 97);
    const Density f = oracles::mixture_density(grid, {-0.2, 0.3}, {0.15, 0.2}, {0.35, 0.65});
    const std::string path = "density_roundtrip.csv";
    write_density_csv(f, path);
    const Density g = read_density_csv(path);
    REQUIRE(g.size() == f.size());
    CHECK(same_grid(f.grid(), g.grid(), 1e-9));
    for (std::size_t j = 0; j < f.size(); ++j)
        CHECK(g[j] == doctest::Approx(f[j]).epsilon(1e-14));
    std::remove(path.c_str());

    const std::string bad = "density_irregular.csv";
    {
        std::ofstream out(bad);
        out << "t,f\n0.0,1.0\n0.1,1.0\n0.300001,1.0\n0.4,1.0\n";
    }
    CHECK_THROWS(read_density_csv(bad));
    std::remove(bad.c_str());
}
