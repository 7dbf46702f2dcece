#pragma once

// Independent oracles used to freeze expected values. Everything here is
// deliberately written from scratch (enumeration, quadrature, direct
// sums) and stays off the library's computational paths.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "densemu/density.hpp"

namespace oracles {

inline double gauss_pdf(double t, double mu, double sigma) {
    const double z = (t - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// rectangle-rule quadrature on an n-point grid over [lo, hi)
inline double quad(const std::function<double(double)>& f, double lo, double hi,
                   std::size_t n) {
    const double dt = (hi - lo) / static_cast<double>(n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += f(lo + static_cast<double>(j) * dt);
    return s * dt;
}

// direct kernel sum at one point
inline double kde_point(const std::vector<double>& samples, double h, double t) {
    double s = 0.0;
    for (double y : samples) s += gauss_pdf(t, y, h);
    return s / static_cast<double>(samples.size());
}

// Exhaustive active-subset solver for
//   min 1/2 x'Gx - a'x  s.t.  C'x >= b (first meq equalities),
// valid for small n and c. Tries every subset of constraints treated as
// equalities, solves the KKT system, and keeps the feasible point with
// nonnegative inequality multipliers.
inline std::optional<Eigen::VectorXd> qp_enumerate(const Eigen::MatrixXd& G,
                                                   const Eigen::VectorXd& a,
                                                   const Eigen::MatrixXd& C,
                                                   const Eigen::VectorXd& b,
                                                   Eigen::Index meq) {
    const Eigen::Index n = G.rows();
    const Eigen::Index c = C.cols();
    std::optional<Eigen::VectorXd> best;
    double best_obj = std::numeric_limits<double>::infinity();

    for (unsigned mask = 0; mask < (1u << c); ++mask) {
        // equality rows are always active
        bool skip = false;
        for (Eigen::Index i = 0; i < meq; ++i)
            if (!(mask & (1u << i))) skip = true;
        if (skip) continue;
        std::vector<Eigen::Index> act;
        for (Eigen::Index i = 0; i < c; ++i)
            if (mask & (1u << i)) act.push_back(i);
        if (static_cast<Eigen::Index>(act.size()) > n) continue;

        const Eigen::Index k = static_cast<Eigen::Index>(act.size());
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
        kkt.topLeftCorner(n, n) = G;
        Eigen::VectorXd rhs(n + k);
        rhs.head(n) = a;
        for (Eigen::Index j = 0; j < k; ++j) {
            kkt.block(0, n + j, n, 1) = -C.col(act[static_cast<std::size_t>(j)]);
            kkt.block(n + j, 0, 1, n) = C.col(act[static_cast<std::size_t>(j)]).transpose();
            rhs(n + j) = b(act[static_cast<std::size_t>(j)]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd sol = lu.solve(rhs);
        const Eigen::VectorXd x = sol.head(n);
        const Eigen::VectorXd lambda = sol.tail(k);

        bool ok = true;
        for (Eigen::Index i = 0; i < c && ok; ++i) {
            const double s = C.col(i).dot(x) - b(i);
            if (i < meq) {
                if (std::fabs(s) > 1e-8) ok = false;
            } else if (s < -1e-8) {
                ok = false;
            }
        }
        for (Eigen::Index j = 0; j < k && ok; ++j)
            if (act[static_cast<std::size_t>(j)] >= meq && lambda(j) < -1e-8) ok = false;
        if (!ok) continue;

        const double obj = 0.5 * x.dot(G * x) - a.dot(x);
        if (obj < best_obj - 1e-12) {
            best_obj = obj;
            best = x;
        }
    }
    return best;
}

// simplex-constrained least squares through the enumeration oracle
inline Eigen::VectorXd simplex_lsq_enumerate(const Eigen::MatrixXd& A,
                                             const Eigen::VectorXd& y, double dt) {
    const Eigen::Index q = A.cols();
    Eigen::MatrixXd G = dt * (A.transpose() * A);
    G.diagonal().array() += 1e-10 * G.trace() / static_cast<double>(q);
    const Eigen::VectorXd a = dt * (A.transpose() * y);
    Eigen::MatrixXd C(q, q + 1);
    C.col(0).setOnes();
    C.rightCols(q) = Eigen::MatrixXd::Identity(q, q);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(q + 1);
    b(0) = 1.0;
    const auto sol = qp_enumerate(G, a, C, b, 1);
    if (!sol) throw std::runtime_error("simplex_lsq_enumerate: no KKT point found");
    return *sol;
}

struct QpCase {
    Eigen::MatrixXd G;
    Eigen::VectorXd a;
    Eigen::MatrixXd C;
    Eigen::VectorXd b;
    Eigen::Index meq = 0;
};

// strictly convex random program, feasible by construction
inline QpCase random_qp(std::mt19937_64& rng, Eigen::Index n, Eigen::Index c,
                        Eigen::Index meq) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    QpCase qp;
    Eigen::MatrixXd B(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) B(i, j) = normal(rng);
    qp.G = B.transpose() * B + (0.1 + unif(rng)) * Eigen::MatrixXd::Identity(n, n);
    qp.a.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) qp.a(i) = normal(rng);
    qp.C.resize(n, c);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < c; ++j) qp.C(i, j) = normal(rng);
    Eigen::VectorXd x_feas(n);
    for (Eigen::Index i = 0; i < n; ++i) x_feas(i) = normal(rng);
    qp.b.resize(c);
    for (Eigen::Index j = 0; j < c; ++j) {
        const double slack = j < meq ? 0.0 : unif(rng);
        qp.b(j) = qp.C.col(j).dot(x_feas) - slack;
    }
    qp.meq = meq;
    return qp;
}

// density made of a gaussian mixture, renormalized on the grid
inline densemu::Density mixture_density(const densemu::Grid& grid,
                                        const std::vector<double>& means,
                                        const std::vector<double>& sigmas,
                                        const std::vector<double>& weights) {
    std::vector<double> v(grid.m, 0.0);
    for (std::size_t c = 0; c < means.size(); ++c)
        for (std::size_t j = 0; j < grid.m; ++j)
            v[j] += weights[c] * gauss_pdf(grid.node(j), means[c], sigmas[c]);
    return densemu::Density(grid, std::move(v));
}

// deterministic pseudo-random mixture densities for property tests
inline std::vector<densemu::Density> random_densities(const densemu::Grid& grid,
                                                      std::size_t count,
                                                      unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mu(grid.t1 + 0.2 * (grid.last() - grid.t1),
                                              grid.last() - 0.2 * (grid.last() - grid.t1));
    std::uniform_real_distribution<double> sig(0.05 * (grid.last() - grid.t1),
                                               0.2 * (grid.last() - grid.t1));
    std::uniform_real_distribution<double> wgt(0.2, 1.0);
    std::vector<densemu::Density> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double w1 = wgt(rng);
        out.push_back(mixture_density(grid, {mu(rng), mu(rng)}, {sig(rng), sig(rng)},
                                      {w1, 1.0 - 0.5 * w1}));
    }
    return out;
}

}  // namespace oracles
