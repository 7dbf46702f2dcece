#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "densemu/grid.hpp"

namespace densemu {

// Probability density discretized on a Grid: nonnegative values whose
// rectangle-rule integral is renormalized to 1 on construction.
class Density {
public:
    Density(Grid grid, std::vector<double> values);

    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t j) const { return values_[j]; }
    std::size_t size() const { return values_.size(); }

private:
    Grid grid_;
    std::vector<double> values_;
};

// rectangle-rule integral sum_j f_j * dt
double integrate(const Density& f);

double l1_dist(const Density& f, const Density& g);
double l2_dist(const Density& f, const Density& g);
double hellinger_dist(const Density& f, const Density& g);

struct QuantitySet {
    double mean = 0.0;
    double variance = 0.0;
    double q01 = 0.0, q25 = 0.0, q75 = 0.0, q99 = 0.0;
};

// left-continuous CDF inversion with linear interpolation between nodes
double quantile(const Density& f, double p);

QuantitySet quantities(const Density& f);

inline constexpr std::size_t kNumQuantities = 9;

// fixed emission order of the nine relative-error entries
enum class Quantity : std::size_t {
    L1 = 0, L2, Hellinger, Mean, Variance, Q01, Q25, Q75, Q99
};

const char* quantity_name(std::size_t k);

// Percent errors in the order above. The three distance entries use the
// squared L2 / squared Hellinger / plain L1 forms; scalar entries are
// 100*|u - u_hat|/|u|. A scalar entry whose true value is smaller than
// 1e-12 in magnitude is flagged as NaN instead of blowing up.
std::array<double, kNumQuantities> relative_errors(const Density& truth, const Density& estimate);

// Grid carried by an explicit node list, checked regular within a 1e-9
// relative step tolerance.
Grid infer_regular_grid(const std::vector<double>& t);

// CSV round trip with header "t,f"; on read the grid is inferred from the
// t column and checked regular within a 1e-9 relative step tolerance.
void write_density_csv(const Density& f, const std::string& path);
Density read_density_csv(const std::string& path);

}  // namespace densemu
