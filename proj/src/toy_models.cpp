#include "densemu/toy_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "densemu/csv.hpp"
#include "densemu/kde.hpp"

namespace densemu {

namespace {

// counter stream tags; replicate draws never collide with design draws
constexpr std::uint64_t kStreamReplicate = 0x7265706cULL;  // "repl"
constexpr std::uint64_t kStreamDesign = 0x64736e67ULL;     // "dsng"

}  // namespace

DesignScheme scheme_from_name(const std::string& name) {
    if (name == "uniform") return DesignScheme::Uniform;
    if (name == "lhs") return DesignScheme::Lhs;
    if (name == "nested_uniform") return DesignScheme::NestedUniform;
    throw std::invalid_argument("unknown design scheme: " + name);
}

double toy1_draw(double x, const CounterRng& rng, std::uint64_t point_index,
                 std::uint64_t draw_index) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("toy1_draw: x must lie in [0, 1]");
    const double xi1 = 1.0 + rng.normal(kStreamReplicate, point_index, draw_index, 0);
    const double xi2 = 2.0 + rng.normal(kStreamReplicate, point_index, draw_index, 1);
    const double u = rng.uniform(kStreamReplicate, point_index, draw_index, 2);
    const double s = std::sin(x * (xi1 + xi2)) + u;
    return s >= -1.0 ? s : 0.0;  // the indicator, applied literally
}

double toy2_draw(std::span<const double> x, const CounterRng& rng, std::uint64_t point_index,
                 std::uint64_t draw_index) {
    if (x.size() != 5) throw std::invalid_argument("toy2_draw: x must have dimension 5");
    for (double v : x)
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument("toy2_draw: x must lie in [0, 1]^5");
    const double gn = rng.normal(kStreamReplicate, point_index, draw_index, 0);
    const double u1 = rng.uniform(kStreamReplicate, point_index, draw_index, 1);
    const double u2 = 1.0 + rng.uniform(kStreamReplicate, point_index, draw_index, 2);
    const double bern =
        rng.uniform(kStreamReplicate, point_index, draw_index, 3) < 0.5 ? 0.0 : 1.0;
    double trend = 0.0;
    for (std::size_t i = 0; i < 5; ++i) trend += static_cast<double>(i + 1) * x[i];
    return (x[0] + 2.0 * x[1] + u1) * std::sin(3.0 * x[2] - 4.0 * x[3] + gn) + u2 +
           10.0 * x[4] * bern + trend;
}

Density gauss_family(double mu, double sigma, const Grid& grid) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gauss_family: sigma must be positive");
    std::vector<double> v(grid.m);
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t j = 0; j < grid.m; ++j) {
        const double z = (grid.node(j) - mu) / sigma;
        v[j] = norm * std::exp(-0.5 * z * z);
    }
    return Density(grid, std::move(v));
}

StochasticModel StochasticModel::toy1() {
    return StochasticModel{ModelKind::Toy1, 1, Box{{0.0}, {1.0}}};
}

StochasticModel StochasticModel::toy2() {
    return StochasticModel{ModelKind::Toy2, 5,
                           Box{{0.0, 0.0, 0.0, 0.0, 0.0}, {1.0, 1.0, 1.0, 1.0, 1.0}}};
}

StochasticModel StochasticModel::gauss(Box box) {
    return StochasticModel{ModelKind::GaussFamily, 2, std::move(box)};
}

StochasticModel StochasticModel::from_name(const std::string& name) {
    if (name == "toy1") return toy1();
    if (name == "toy2") return toy2();
    if (name == "gauss") return gauss();
    throw std::invalid_argument("unknown model: " + name);
}

double StochasticModel::draw(std::span<const double> x, const CounterRng& rng,
                             std::uint64_t point_index, std::uint64_t draw_index) const {
    switch (kind) {
        case ModelKind::Toy1: return toy1_draw(x[0], rng, point_index, draw_index);
        case ModelKind::Toy2: return toy2_draw(x, rng, point_index, draw_index);
        case ModelKind::GaussFamily:
            throw std::logic_error("the analytic family has no replicate sampler");
    }
    throw std::logic_error("unknown model kind");
}

Density StochasticModel::analytic_density(std::span<const double> x, const Grid& grid) const {
    if (kind != ModelKind::GaussFamily)
        throw std::logic_error("analytic_density: only the Gaussian family is analytic");
    return gauss_family(x[0], x[1], grid);
}

Design make_design(DesignScheme scheme, std::size_t n, const Box& box, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("make_design: need at least one point");
    const std::size_t d = box.dim();
    if (d == 0 || box.hi.size() != d) throw std::invalid_argument("make_design: bad box");

    const CounterRng rng(seed);
    Design design;
    design.scheme = scheme;
    design.seed = seed;
    design.points.assign(n, std::vector<double>(d));

    if (scheme == DesignScheme::Lhs) {
        // one stratum per point per coordinate, independently permuted
        for (std::size_t k = 0; k < d; ++k) {
            std::vector<std::size_t> perm(n);
            for (std::size_t i = 0; i < n; ++i) perm[i] = i;
            SequentialRng shuffle(seed, kStreamDesign + 1 + k);
            for (std::size_t i = n - 1; i > 0; --i)
                std::swap(perm[i], perm[shuffle.below(i + 1)]);
            for (std::size_t i = 0; i < n; ++i) {
                const double jitter = rng.uniform(kStreamDesign, i, k, 1);
                const double unit =
                    (static_cast<double>(perm[i]) + jitter) / static_cast<double>(n);
                design.points[i][k] = box.lo[k] + unit * (box.hi[k] - box.lo[k]);
            }
        }
        return design;
    }

    // Uniform and NestedUniform: a single counter-indexed stream, so the
    // first n points of a larger design are exactly the smaller design.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k)
            design.points[i][k] =
                box.lo[k] + rng.uniform(kStreamDesign, i, k, 0) * (box.hi[k] - box.lo[k]);
    return design;
}

std::vector<std::vector<double>> draw_replicates(const StochasticModel& model,
                                                 const Design& design, std::size_t replicates,
                                                 std::uint64_t seed) {
    if (replicates < 2) throw std::invalid_argument("draw_replicates: need at least 2 draws");
    const CounterRng rng(seed);
    std::vector<std::vector<double>> rows(design.points.size(),
                                          std::vector<double>(replicates));
    for (std::size_t i = 0; i < design.points.size(); ++i)
        for (std::size_t j = 0; j < replicates; ++j)
            rows[i][j] = model.draw(design.points[i], rng, i, j);
    return rows;
}

TrainingSet build_training(const StochasticModel& model, const Design& design,
                           std::size_t replicates, std::uint64_t seed,
                           std::optional<Grid> grid, std::size_t grid_m) {
    const std::size_t n = design.points.size();
    for (const auto& x : design.points)
        if (!model.input_box.contains(x))
            throw std::invalid_argument("build_training: design point outside the input box");

    if (model.analytic()) {
        Grid g = grid ? *grid : [&] {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (const auto& x : design.points) {
                lo = std::min(lo, x[0] - 6.0 * x[1]);
                hi = std::max(hi, x[0] + 6.0 * x[1]);
            }
            return Grid::over_interval(lo, hi, grid_m);
        }();
        std::vector<Density> densities;
        densities.reserve(n);
        for (const auto& x : design.points) densities.push_back(model.analytic_density(x, g));
        return TrainingSet(design.points, std::move(densities), model.input_box);
    }

    if (replicates < 2)
        throw std::invalid_argument("build_training: need at least 2 replicates");
    const auto rows = draw_replicates(model, design, replicates, seed);

    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = silverman_bandwidth(rows[i]);

    Grid g = grid ? *grid : [&] {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < n; ++i) {
            const auto [mn, mx] = std::minmax_element(rows[i].begin(), rows[i].end());
            lo = std::min(lo, *mn - 3.0 * h[i]);
            hi = std::max(hi, *mx + 3.0 * h[i]);
        }
        return Grid::over_interval(lo, hi, grid_m);
    }();

    std::vector<Density> densities;
    densities.reserve(n);
    for (std::size_t i = 0; i < n; ++i) densities.push_back(kde(rows[i], h[i], g));
    return TrainingSet(design.points, std::move(densities), model.input_box);
}

void write_design_csv(const Design& design, const std::string& path) {
    write_numeric_csv(path, design.points);
}

void write_replicates_csv(const std::vector<std::vector<double>>& rows,
                          const std::string& path) {
    write_numeric_csv(path, rows);
}

}  // namespace densemu
