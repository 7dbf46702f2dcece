#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "densemu/rng.hpp"
#include "densemu/training_set.hpp"

namespace densemu {

enum class DesignScheme { Uniform, Lhs, NestedUniform };

DesignScheme scheme_from_name(const std::string& name);

struct Design {
    std::vector<std::vector<double>> points;
    DesignScheme scheme = DesignScheme::Uniform;
    std::uint64_t seed = 0;
};

enum class ModelKind { Toy1, Toy2, GaussFamily };

// One replicate of the first analytical simulator,
// (sin(x(xi1+xi2)) + U) 1{sin(x(xi1+xi2)) + U >= -1},
// xi1 ~ N(1,1), xi2 ~ N(2,1), U ~ U[0,1].
double toy1_draw(double x, const CounterRng& rng, std::uint64_t point_index,
                 std::uint64_t draw_index);

// One replicate of the second analytical simulator,
// (x1+2x2+U1) sin(3x3-4x4+N) + U2 + 10 x5 B + sum_i i x_i,
// N ~ N(0,1), U1 ~ U[0,1], U2 ~ U[1,2], B ~ Bernoulli(1/2).
double toy2_draw(std::span<const double> x, const CounterRng& rng, std::uint64_t point_index,
                 std::uint64_t draw_index);

// Exact discretized normal density, renormalized on the grid.
Density gauss_family(double mu, double sigma, const Grid& grid);

// A stochastic simulator exposed through a deterministic replicate
// sampler: draw (seed, point, replicate) always returns the same value.
struct StochasticModel {
    ModelKind kind = ModelKind::Toy1;
    std::size_t input_dim = 1;
    Box input_box;

    static StochasticModel toy1();
    static StochasticModel toy2();
    static StochasticModel gauss(Box box = {{-1.0, 0.5}, {1.0, 2.0}});
    static StochasticModel from_name(const std::string& name);

    bool analytic() const { return kind == ModelKind::GaussFamily; }

    double draw(std::span<const double> x, const CounterRng& rng, std::uint64_t point_index,
                std::uint64_t draw_index) const;
    Density analytic_density(std::span<const double> x, const Grid& grid) const;
};

// UNIFORM and NESTED_UNIFORM share the counter stream, so any prefix of a
// design is itself the smaller design; LHS stratifies each coordinate.
Design make_design(DesignScheme scheme, std::size_t n, const Box& box, std::uint64_t seed);

// Raw replicate matrix, one row per design point.
std::vector<std::vector<double>> draw_replicates(const StochasticModel& model,
                                                 const Design& design, std::size_t replicates,
                                                 std::uint64_t seed);

// Densities by kernel estimation of each replicate row (Silverman rule),
// on a shared grid fitted over the pooled sample range when none is given.
// The Gaussian family bypasses sampling and returns analytic densities.
TrainingSet build_training(const StochasticModel& model, const Design& design,
                           std::size_t replicates, std::uint64_t seed,
                           std::optional<Grid> grid = std::nullopt, std::size_t grid_m = 512);

void write_design_csv(const Design& design, const std::string& path);
void write_replicates_csv(const std::vector<std::vector<double>>& rows, const std::string& path);

}  // namespace densemu
