#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace densemu {

// Regular discretization of the output interval: node j is t1 + j*dt
// (0-based), j = 0..m-1.
struct Grid {
    double t1 = 0.0;
    double dt = 1.0;
    std::size_t m = 2;

    Grid() = default;

    Grid(double t1_, double dt_, std::size_t m_) : t1(t1_), dt(dt_), m(m_) {
        if (!(dt > 0.0)) throw std::invalid_argument("Grid: dt must be positive");
        if (m < 2) throw std::invalid_argument("Grid: need at least two nodes");
    }

    double node(std::size_t j) const { return t1 + static_cast<double>(j) * dt; }
    double last() const { return node(m - 1); }

    std::vector<double> nodes() const {
        std::vector<double> t(m);
        for (std::size_t j = 0; j < m; ++j) t[j] = node(j);
        return t;
    }

    // m nodes with the first at lo and the last at hi
    static Grid over_interval(double lo, double hi, std::size_t msize) {
        if (!(hi > lo)) throw std::invalid_argument("Grid: interval must have positive length");
        if (msize < 2) throw std::invalid_argument("Grid: need at least two nodes");
        return Grid(lo, (hi - lo) / static_cast<double>(msize - 1), msize);
    }
};

inline bool same_grid(const Grid& a, const Grid& b, double rel_tol = 1e-12) {
    const double scale = std::fabs(a.dt) + std::fabs(b.dt);
    return a.m == b.m && std::fabs(a.dt - b.dt) <= rel_tol * scale &&
           std::fabs(a.t1 - b.t1) <= rel_tol * (std::fabs(a.t1) + std::fabs(b.t1) + scale);
}

inline void require_same_grid(const Grid& a, const Grid& b) {
    if (!same_grid(a, b)) throw std::invalid_argument("operation requires a shared grid");
}

}  // namespace densemu
