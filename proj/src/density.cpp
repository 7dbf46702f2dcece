#include "densemu/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "densemu/csv.hpp"

namespace densemu {

Density::Density(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.m)
        throw std::invalid_argument("Density: value count does not match grid size");

    double peak = 0.0;
    for (double v : values_) {
        if (!std::isfinite(v)) throw std::invalid_argument("Density: non-finite value");
        peak = std::max(peak, std::fabs(v));
    }
    // tolerate solver-level negative noise, reject genuinely negative input
    const double neg_tol = 1e-8 * peak + std::numeric_limits<double>::min();
    double total = 0.0;
    for (double& v : values_) {
        if (v < 0.0) {
            if (v < -neg_tol) throw std::invalid_argument("Density: negative value");
            v = 0.0;
        }
        total += v;
    }
    total *= grid_.dt;
    if (!(total > 0.0) || !std::isfinite(total))
        throw std::invalid_argument("Density: vanishing or non-finite total mass");
    for (double& v : values_) v /= total;
}

double integrate(const Density& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s * f.grid().dt;
}

double l1_dist(const Density& f, const Density& g) {
    require_same_grid(f.grid(), g.grid());
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) s += std::fabs(f[j] - g[j]);
    return s * f.grid().dt;
}

double l2_dist(const Density& f, const Density& g) {
    require_same_grid(f.grid(), g.grid());
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double d = f[j] - g[j];
        s += d * d;
    }
    return std::sqrt(s * f.grid().dt);
}

double hellinger_dist(const Density& f, const Density& g) {
    require_same_grid(f.grid(), g.grid());
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double d = std::sqrt(f[j]) - std::sqrt(g[j]);
        s += d * d;
    }
    return std::sqrt(s * f.grid().dt);
}

double quantile(const Density& f, double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("quantile: p must lie in (0, 1)");
    const Grid& grid = f.grid();
    double cum = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double prev = cum;
        cum += f[j] * grid.dt;
        if (cum >= p) {
            const double step = cum - prev;
            const double frac = step > 0.0 ? (p - prev) / step : 1.0;
            return grid.node(j) - grid.dt + frac * grid.dt;
        }
    }
    return grid.last();  // p beyond accumulated mass (roundoff at p ~ 1)
}

QuantitySet quantities(const Density& f) {
    const Grid& grid = f.grid();
    double mass = 0.0, mean = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        mass += f[j] * grid.dt;
        mean += grid.node(j) * f[j] * grid.dt;
    }
    mean /= mass;
    double var = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double d = grid.node(j) - mean;
        var += d * d * f[j] * grid.dt;
    }
    var /= mass;
    QuantitySet out;
    out.mean = mean;
    out.variance = var;
    out.q01 = quantile(f, 0.01);
    out.q25 = quantile(f, 0.25);
    out.q75 = quantile(f, 0.75);
    out.q99 = quantile(f, 0.99);
    return out;
}

const char* quantity_name(std::size_t k) {
    static const char* names[kNumQuantities] = {
        "l1", "l2", "hellinger", "mean", "variance", "q01", "q25", "q75", "q99"};
    if (k >= kNumQuantities) throw std::out_of_range("quantity_name");
    return names[k];
}

namespace {

double scalar_error(double u, double u_hat) {
    if (std::fabs(u) < 1e-12) return std::numeric_limits<double>::quiet_NaN();
    return 100.0 * std::fabs(u - u_hat) / std::fabs(u);
}

}  // namespace

std::array<double, kNumQuantities> relative_errors(const Density& truth, const Density& estimate) {
    require_same_grid(truth.grid(), estimate.grid());
    const double dt = truth.grid().dt;

    double l1_num = 0.0, l1_den = 0.0, l2_num = 0.0, l2_den = 0.0, he_num = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        const double d = truth[j] - estimate[j];
        l1_num += std::fabs(d);
        l1_den += std::fabs(truth[j]);
        l2_num += d * d;
        l2_den += truth[j] * truth[j];
        const double r = std::sqrt(truth[j]) - std::sqrt(estimate[j]);
        he_num += r * r;
    }
    // int (sqrt f)^2 = int f = 1 for a Density, so the Hellinger entry
    // divides by the truth's integral
    const double he_den = l1_den;

    std::array<double, kNumQuantities> out{};
    out[0] = l1_den * dt < 1e-12 ? std::numeric_limits<double>::quiet_NaN()
                                 : 100.0 * l1_num / l1_den;
    out[1] = l2_den * dt < 1e-12 ? std::numeric_limits<double>::quiet_NaN()
                                 : 100.0 * l2_num / l2_den;
    out[2] = he_den * dt < 1e-12 ? std::numeric_limits<double>::quiet_NaN()
                                 : 100.0 * he_num / he_den;

    const QuantitySet qt = quantities(truth);
    const QuantitySet qe = quantities(estimate);
    out[3] = scalar_error(qt.mean, qe.mean);
    out[4] = scalar_error(qt.variance, qe.variance);
    out[5] = scalar_error(qt.q01, qe.q01);
    out[6] = scalar_error(qt.q25, qe.q25);
    out[7] = scalar_error(qt.q75, qe.q75);
    out[8] = scalar_error(qt.q99, qe.q99);
    return out;
}

void write_density_csv(const Density& f, const std::string& path) {
    std::vector<std::vector<double>> rows(f.size());
    for (std::size_t j = 0; j < f.size(); ++j)
        rows[j] = {f.grid().node(j), f[j]};
    write_numeric_csv(path, rows, "t,f");
}

Grid infer_regular_grid(const std::vector<double>& t) {
    if (t.size() < 2) throw std::runtime_error("grid inference needs at least two nodes");
    const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    if (!(dt > 0.0)) throw std::runtime_error("grid nodes must be increasing");
    for (std::size_t j = 1; j < t.size(); ++j) {
        const double step = t[j] - t[j - 1];
        if (std::fabs(step - dt) > 1e-9 * std::fabs(dt))
            throw std::runtime_error("grid is not regular");
    }
    return Grid(t.front(), dt, t.size());
}

Density read_density_csv(const std::string& path) {
    const auto rows = read_numeric_csv(path);
    if (rows.size() < 2) throw std::runtime_error(path + ": need at least two rows");
    std::vector<double> t(rows.size()), v(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
        if (rows[j].size() != 2)
            throw std::runtime_error(path + ": expected two columns t,f");
        t[j] = rows[j][0];
        v[j] = rows[j][1];
    }
    return Density(infer_regular_grid(t), std::move(v));
}

}  // namespace densemu
