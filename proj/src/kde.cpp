#include "densemu/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace densemu {

double silverman_bandwidth(std::span<const double> samples) {
    if (samples.size() < 2)
        throw std::invalid_argument("silverman_bandwidth: need at least two samples");
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double y : samples) mean += y;
    mean /= n;
    double ss = 0.0;
    for (double y : samples) ss += (y - mean) * (y - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0))
        throw std::invalid_argument("silverman_bandwidth: need at least two distinct samples");
    return 1.06 * sd * std::pow(n, -0.2);
}

std::vector<double> kde_raw(std::span<const double> samples, double bandwidth, const Grid& grid) {
    if (samples.empty()) throw std::invalid_argument("kde: empty sample list");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");

    const double inv_h = 1.0 / bandwidth;
    const double norm =
        inv_h / (std::sqrt(2.0 * std::numbers::pi) * static_cast<double>(samples.size()));
    std::vector<double> out(grid.m, 0.0);
    for (double y : samples) {
        for (std::size_t j = 0; j < grid.m; ++j) {
            const double z = (grid.node(j) - y) * inv_h;
            out[j] += std::exp(-0.5 * z * z);
        }
    }
    for (double& v : out) v *= norm;
    return out;
}

Density kde(std::span<const double> samples, double bandwidth, const Grid& grid) {
    return Density(grid, kde_raw(samples, bandwidth, grid));
}

Grid kde_grid(std::span<const double> samples, double bandwidth, std::size_t m) {
    if (samples.empty()) throw std::invalid_argument("kde_grid: empty sample list");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("kde_grid: bandwidth must be positive");
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    return Grid::over_interval(*lo - 3.0 * bandwidth, *hi + 3.0 * bandwidth, m);
}

}  // namespace densemu
