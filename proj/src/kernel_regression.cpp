#include "densemu/kernel_regression.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "densemu/optim.hpp"

namespace densemu {

Bandwidth Bandwidth::iso(double h, std::size_t d) {
    Bandwidth bw;
    bw.diag.assign(d, h);
    bw.isotropic = true;
    bw.validate(d);
    return bw;
}

Bandwidth Bandwidth::aniso(std::vector<double> h) {
    Bandwidth bw;
    bw.diag = std::move(h);
    bw.isotropic = false;
    bw.validate(bw.diag.size());
    return bw;
}

void Bandwidth::validate(std::size_t d) const {
    if (diag.size() != d || d == 0)
        throw std::invalid_argument("Bandwidth: dimension mismatch");
    for (double h : diag)
        if (!(h > 0.0)) throw std::invalid_argument("Bandwidth: entries must be positive");
    if (isotropic)
        for (double h : diag)
            if (h != diag.front())
                throw std::invalid_argument("Bandwidth: isotropic entries must agree");
}

namespace {

// (x - y)' H^{-1} (x - y) for diagonal H
double scaled_sq_dist(std::span<const double> x, std::span<const double> y,
                      const Bandwidth& bw) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - y[k];
        s += d * d / bw.diag[k];
    }
    return s;
}

std::vector<double> shifted_weights(const std::vector<double>& exponents) {
    const double m = *std::min_element(exponents.begin(), exponents.end());
    std::vector<double> w(exponents.size());
    double total = 0.0;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        w[i] = std::exp(-(exponents[i] - m));
        total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
}

}  // namespace

double gaussian_kernel(std::span<const double> x, std::span<const double> y,
                       const Bandwidth& bw) {
    if (x.size() != y.size() || x.size() != bw.diag.size())
        throw std::invalid_argument("gaussian_kernel: dimension mismatch");
    double det = 1.0;
    for (double h : bw.diag) det *= h;
    return std::exp(-scaled_sq_dist(x, y, bw)) / std::sqrt(2.0 * std::numbers::pi * det);
}

Weights weights(const TrainingSet& train, std::span<const double> x0, const Bandwidth& bw) {
    bw.validate(train.input_dim());
    if (x0.size() != train.input_dim())
        throw std::invalid_argument("weights: x0 dimension mismatch");
    std::vector<double> exponents(train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        exponents[i] = scaled_sq_dist(train.input(i), x0, bw);
    return Weights{shifted_weights(exponents)};
}

Density predict_l2(const TrainingSet& train, std::span<const double> x0, const Bandwidth& bw) {
    const Weights w = weights(train, x0, bw);
    std::vector<double> values(train.grid().m, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto& f = train.density(i).values();
        for (std::size_t j = 0; j < values.size(); ++j) values[j] += w.alpha[i] * f[j];
    }
    return Density(train.grid(), std::move(values));
}

Density predict_hellinger(const TrainingSet& train, std::span<const double> x0,
                          const Bandwidth& bw) {
    const Weights w = weights(train, x0, bw);
    std::vector<double> g(train.grid().m, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto& f = train.density(i).values();
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += w.alpha[i] * std::sqrt(f[j]);
    }
    for (double& v : g) v *= v;
    return Density(train.grid(), std::move(g));
}

double weighted_objective(const TrainingSet& train, std::span<const double> x0,
                          const Bandwidth& bw, std::span<const double> f_values,
                          Metric metric) {
    if (f_values.size() != train.grid().m)
        throw std::invalid_argument("weighted_objective: value count mismatch");
    const Weights w = weights(train, x0, bw);
    const double dt = train.grid().dt;
    double total = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto& fi = train.density(i).values();
        double acc = 0.0;
        if (metric == Metric::L2) {
            for (std::size_t j = 0; j < fi.size(); ++j) {
                const double d = fi[j] - f_values[j];
                acc += d * d;
            }
        } else {
            for (std::size_t j = 0; j < fi.size(); ++j) {
                const double d = std::sqrt(fi[j]) - std::sqrt(std::max(f_values[j], 0.0));
                acc += d * d;
            }
        }
        total += w.alpha[i] * acc * dt;
    }
    return total;
}

LooWorkspace::LooWorkspace(const TrainingSet& train) : train_(&train) {
    const std::size_t n = train.size();
    const std::size_t m = train.grid().m;
    const double dt = train.grid().dt;
    Eigen::MatrixXd F(m, n), S(m, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& v = train.density(i).values();
        for (std::size_t j = 0; j < m; ++j) {
            F(j, i) = v[j];
            S(j, i) = std::sqrt(v[j]);
        }
    }
    gram_l2_.noalias() = dt * (F.transpose() * F);
    gram_sqrt_.noalias() = dt * (S.transpose() * S);
}

double LooWorkspace::objective(const Bandwidth& bw, Metric metric) const {
    const TrainingSet& train = *train_;
    const std::size_t n = train.size();
    if (n < 2) throw std::invalid_argument("loo_objective: need at least two pairs");
    bw.validate(train.input_dim());

    Eigen::MatrixXd dist(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double e = scaled_sq_dist(train.input(i), train.input(j), bw);
            dist(i, j) = e;
            dist(j, i) = e;
        }
    }

    double total = 0.0;
    Eigen::VectorXd w(n);
    for (std::size_t i = 0; i < n; ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) m = std::min(m, dist(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            w(j) = j == i ? 0.0 : std::exp(-(dist(i, j) - m));
            z += w(j);
        }
        w /= z;
        if (metric == Metric::L2) {
            // ||sum_j w_j f_j - f_i||^2 through the Gram matrix
            const double err = w.dot(gram_l2_ * w) - 2.0 * w.dot(gram_l2_.col(i)) +
                               gram_l2_(i, i);
            total += std::max(err, 0.0);
        } else {
            const double norm2 = w.dot(gram_sqrt_ * w);
            const double cross = w.dot(gram_sqrt_.col(i));
            const double hell2 = 2.0 - 2.0 * cross / std::sqrt(std::max(norm2, 1e-300));
            total += std::max(hell2, 0.0);
        }
    }
    return total;
}

double loo_objective(const TrainingSet& train, const Bandwidth& bw, Metric metric) {
    return LooWorkspace(train).objective(bw, metric);
}

BandwidthFit optimize_bandwidth(const TrainingSet& train, bool isotropic, Metric metric) {
    if (train.size() < 3)
        throw std::invalid_argument("optimize_bandwidth: need at least three pairs");
    const std::size_t d = train.input_dim();
    const LooWorkspace ws(train);

    std::vector<double> range(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        double lo = train.input(0)[k], hi = lo;
        for (std::size_t i = 1; i < train.size(); ++i) {
            lo = std::min(lo, train.input(i)[k]);
            hi = std::max(hi, train.input(i)[k]);
        }
        range[k] = hi > lo ? hi - lo : 1.0;
    }
    double mean_range = 0.0;
    for (double r : range) mean_range += r;
    mean_range /= static_cast<double>(d);

    const double h_lo = 1e-6, h_hi = 1e6;
    const std::size_t dim = isotropic ? 1 : d;
    const std::vector<double> lo(dim, std::log(h_lo));
    const std::vector<double> hi(dim, std::log(h_hi));

    auto to_bandwidth = [&](const std::vector<double>& theta) {
        if (isotropic) return Bandwidth::iso(std::exp(theta[0]), d);
        std::vector<double> h(d);
        for (std::size_t k = 0; k < d; ++k) h[k] = std::exp(theta[k]);
        return Bandwidth::aniso(std::move(h));
    };
    auto objective = [&](const std::vector<double>& theta) {
        return ws.objective(to_bandwidth(theta), metric);
    };

    bool found = false;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_theta;
    for (int s = 0; s < 5; ++s) {
        // geometric ladder 0.01, ..., 10 times the input range
        const double scale = 0.01 * std::pow(1000.0, s / 4.0);
        std::vector<double> theta(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            const double r = isotropic ? mean_range : range[k];
            theta[k] = std::log(std::clamp(scale * r, h_lo, h_hi));
        }
        try {
            const BoxMinResult res = minimize_box(objective, theta, lo, hi, 1e-5, 200);
            if (res.value < best_val) {
                best_val = res.value;
                best_theta = res.x;
                found = true;
            }
        } catch (const std::exception&) {
            // a diverging start is not fatal while another start succeeds
        }
    }
    if (!found) throw std::runtime_error("optimize_bandwidth: all starts failed");
    return BandwidthFit{to_bandwidth(best_theta), best_val};
}

double stationarity_check(const TrainingSet& train, std::span<const double> x0,
                          const Bandwidth& bw, Metric metric) {
    const std::size_t m = train.grid().m;
    const double dt = train.grid().dt;
    if (metric == Metric::L2) {
        const Density fhat = predict_l2(train, x0, bw);
        std::vector<double> g(m, 0.0);
        for (std::size_t i = 0; i < train.size(); ++i) {
            const double k = gaussian_kernel(train.input(i), x0, bw);
            const auto& f = train.density(i).values();
            for (std::size_t j = 0; j < m; ++j) g[j] += k * (f[j] - fhat[j]);
        }
        double s = 0.0;
        for (double v : g) s += v * v;
        return std::sqrt(s * dt);
    }

    const Density fhat = predict_hellinger(train, x0, bw);
    const double j0 = weighted_objective(train, x0, bw, fhat.values(), Metric::Hellinger);
    const double step = 1e-6;
    double max_descent = -std::numeric_limits<double>::infinity();
    std::vector<double> probe(m);
    auto try_probe = [&](const std::vector<double>& target) {
        for (std::size_t j = 0; j < m; ++j)
            probe[j] = (1.0 - step) * fhat[j] + step * target[j];
        const double jt = weighted_objective(train, x0, bw, probe, Metric::Hellinger);
        max_descent = std::max(max_descent, -(jt - j0) / step);
    };
    for (std::size_t i = 0; i < train.size(); ++i) try_probe(train.density(i).values());
    std::vector<double> mean(m, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i)
        for (std::size_t j = 0; j < m; ++j)
            mean[j] += train.density(i)[j] / static_cast<double>(train.size());
    try_probe(mean);
    return max_descent;
}

void write_bandwidth_json(const Bandwidth& bw, const std::string& path) {
    nlohmann::ordered_json j;
    j["isotropic"] = bw.isotropic;
    j["h"] = bw.diag;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

Bandwidth read_bandwidth_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    Bandwidth bw;
    bw.isotropic = j.at("isotropic").get<bool>();
    bw.diag = j.at("h").get<std::vector<double>>();
    bw.validate(bw.diag.size());
    return bw;
}

}  // namespace densemu
