#pragma once

#include <span>

#include "densemu/density.hpp"

namespace densemu {

// Rule-of-thumb bandwidth 1.06 * sd * n^(-1/5); needs at least two
// distinct samples.
double silverman_bandwidth(std::span<const double> samples);

// Gaussian kernel density estimate at the grid nodes, before any
// renormalization.
std::vector<double> kde_raw(std::span<const double> samples, double bandwidth, const Grid& grid);

// KDE renormalized by its own rectangle-rule integral, so the Density
// invariant holds exactly even when the grid truncates tail mass.
Density kde(std::span<const double> samples, double bandwidth, const Grid& grid);

// default output grid: [min - 3h, max + 3h] with m nodes
Grid kde_grid(std::span<const double> samples, double bandwidth, std::size_t m = 512);

}  // namespace densemu
