#include "densemu/optim.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace densemu {

namespace {

Eigen::VectorXd clamp(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                      const Eigen::VectorXd& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

BoxMinResult minimize_box(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const std::vector<double>& lo,
                          const std::vector<double>& hi, double fd_step, int max_iter) {
    const std::size_t d = x0.size();
    if (lo.size() != d || hi.size() != d)
        throw std::invalid_argument("minimize_box: bound dimensions mismatch");

    Eigen::VectorXd xlo = Eigen::Map<const Eigen::VectorXd>(lo.data(), d);
    Eigen::VectorXd xhi = Eigen::Map<const Eigen::VectorXd>(hi.data(), d);
    Eigen::VectorXd x = clamp(Eigen::Map<const Eigen::VectorXd>(x0.data(), d), xlo, xhi);

    std::vector<double> buf(d);
    auto eval = [&](const Eigen::VectorXd& v) {
        Eigen::Map<Eigen::VectorXd>(buf.data(), d) = v;
        return f(buf);
    };
    auto gradient = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd g(d);
        Eigen::VectorXd w = v;
        for (std::size_t j = 0; j < d; ++j) {
            const double saved = w(j);
            w(j) = std::min(saved + fd_step, xhi(j));
            const double fp = eval(w);
            w(j) = std::max(saved - fd_step, xlo(j));
            const double fm = eval(w);
            const double span = (std::min(saved + fd_step, xhi(j)) -
                                 std::max(saved - fd_step, xlo(j)));
            g(j) = span > 0.0 ? (fp - fm) / span : 0.0;
            w(j) = saved;
        }
        return g;
    };

    double fx = eval(x);
    Eigen::VectorXd g = gradient(x);
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(d, d);

    BoxMinResult out;
    int it = 0;
    for (; it < max_iter; ++it) {
        // projected-gradient stationarity on the box
        const Eigen::VectorXd pg = x - clamp(x - g, xlo, xhi);
        if (pg.lpNorm<Eigen::Infinity>() <= 1e-9 * (1.0 + std::fabs(fx))) {
            out.converged = true;
            break;
        }

        Eigen::VectorXd dir = -hinv * g;
        if (dir.dot(g) >= 0.0) {  // not a descent direction: reset curvature
            hinv.setIdentity();
            dir = -g;
        }

        // backtracking on the clamped path
        double step = 1.0;
        Eigen::VectorXd xn;
        double fn = fx;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            xn = clamp(x + step * dir, xlo, xhi);
            fn = eval(xn);
            const double pred = g.dot(xn - x);
            if (fn <= fx + 1e-4 * pred && fn < fx) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            out.converged = true;  // no descent along the model direction
            break;
        }

        const Eigen::VectorXd gn = gradient(xn);
        const Eigen::VectorXd s = xn - x;
        const Eigen::VectorXd y = gn - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const Eigen::VectorXd hy = hinv * y;
            const double yhy = y.dot(hy);
            hinv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
                    (hy * s.transpose() + s * hy.transpose()) / sy;
        } else {
            hinv.setIdentity();
        }
        x = xn;
        fx = fn;
        g = gn;
    }

    out.x.assign(d, 0.0);
    Eigen::Map<Eigen::VectorXd>(out.x.data(), d) = x;
    out.value = fx;
    out.iterations = it;
    return out;
}

}  // namespace densemu
