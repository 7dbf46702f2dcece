#include "densemu/qp.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace densemu {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// plane rotation [c s; -s c] mapping (a, b) to (r, 0)
struct Givens {
    double c = 1.0, s = 0.0, r = 0.0;
};

Givens make_givens(double a, double b) {
    Givens g;
    g.r = std::hypot(a, b);
    if (g.r > 0.0) {
        g.c = a / g.r;
        g.s = b / g.r;
    }
    return g;
}

void rotate_rows(Eigen::MatrixXd& R, Eigen::Index i, Eigen::Index k, const Givens& g,
                 Eigen::Index col_begin, Eigen::Index col_end) {
    for (Eigen::Index col = col_begin; col < col_end; ++col) {
        const double u = R(i, col);
        const double v = R(k, col);
        R(i, col) = g.c * u + g.s * v;
        R(k, col) = -g.s * u + g.c * v;
    }
}

void rotate_cols(Eigen::MatrixXd& J, Eigen::Index i, Eigen::Index k, const Givens& g) {
    const Eigen::VectorXd tmp = g.c * J.col(i) + g.s * J.col(k);
    J.col(k) = -g.s * J.col(i) + g.c * J.col(k);
    J.col(i) = tmp;
}

void validate(const QuadraticProgram& qp) {
    const Eigen::Index n = qp.G.rows();
    if (qp.G.cols() != n || n == 0) throw QpError("qp: G must be square and nonempty");
    if (qp.a.size() != n) throw QpError("qp: a has wrong length");
    if ((qp.G - qp.G.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * (1.0 + qp.G.cwiseAbs().maxCoeff()))
        throw QpError("qp: G is not symmetric");
    if (qp.C.size() > 0 && qp.C.rows() != n) throw QpError("qp: C has wrong row count");
    if (qp.b.size() != qp.C.cols()) throw QpError("qp: b has wrong length");
    if (qp.meq < 0 || qp.meq > qp.C.cols()) throw QpError("qp: bad meq");
}

}  // namespace

QpSolution solve_qp(const QuadraticProgram& qp, std::ostream* trace) {
    validate(qp);
    const Eigen::Index n = qp.G.rows();
    const Eigen::Index c = qp.C.cols();
    const Eigen::Index meq = qp.meq;

    Eigen::LLT<Eigen::MatrixXd> llt(qp.G);
    if (llt.info() != Eigen::Success) throw QpError("qp: G is not positive definite");

    // J = L^{-T}; the invariant J^T N_active = [R; 0] is maintained by
    // plane rotations as constraints enter and leave the active set.
    Eigen::MatrixXd J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
    Eigen::VectorXd x = llt.solve(qp.a);
    double fval = -0.5 * qp.a.dot(x);

    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
    std::vector<Eigen::Index> active;
    active.reserve(static_cast<std::size_t>(std::min(n, c)));
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);      // multipliers of active rows
    Eigen::VectorXd sigma = Eigen::VectorXd::Ones(c);  // orientation of equality rows
    Eigen::VectorXd d(n), z(n), r(n), np(n);

    const double btol = 1e-11 * (1.0 + (c > 0 ? qp.b.cwiseAbs().maxCoeff() : 0.0) +
                                 qp.a.cwiseAbs().maxCoeff());
    const int max_iter = 50 * static_cast<int>(n + c);
    int iter = 0;

    auto is_active = [&](Eigen::Index i) {
        for (Eigen::Index k : active)
            if (k == i) return true;
        return false;
    };

    auto drop_constraint = [&](Eigen::Index k) {
        const Eigen::Index q = static_cast<Eigen::Index>(active.size());
        active.erase(active.begin() + k);
        for (Eigen::Index j = k; j + 1 < q; ++j) u(j) = u(j + 1);
        u(q - 1) = 0.0;
        // shift R columns left, then restore triangularity
        for (Eigen::Index col = k; col + 1 < q; ++col) R.col(col) = R.col(col + 1);
        R.col(q - 1).setZero();
        const Eigen::Index qnew = q - 1;
        for (Eigen::Index j = k; j < qnew; ++j) {
            const Givens g = make_givens(R(j, j), R(j + 1, j));
            rotate_rows(R, j, j + 1, g, j, qnew);
            R(j + 1, j) = 0.0;
            rotate_cols(J, j, j + 1, g);
        }
    };

    for (;;) {
        // pick the most violated constraint
        Eigen::Index p = -1;
        double worst = btol;
        for (Eigen::Index i = 0; i < c; ++i) {
            if (is_active(i)) continue;
            const double s = qp.C.col(i).dot(x) - qp.b(i);
            const double viol = i < meq ? std::fabs(s) : -s;
            if (viol > worst) {
                worst = viol;
                p = i;
            }
        }
        if (p < 0) break;  // all constraints satisfied: optimal

        double sgn = 1.0;
        double sp = qp.C.col(p).dot(x) - qp.b(p);
        if (p < meq && sp > 0.0) sgn = -1.0;  // approach the equality from above
        sigma(p) = sgn;
        np = sgn * qp.C.col(p);
        const double bp = sgn * qp.b(p);
        sp = np.dot(x) - bp;
        double u_plus = 0.0;

        for (;;) {
            if (++iter > max_iter) throw QpError("qp: iteration cap exceeded");
            const Eigen::Index q = static_cast<Eigen::Index>(active.size());

            d.noalias() = J.transpose() * np;
            z.noalias() = J.rightCols(n - q) * d.tail(n - q);
            if (q > 0)
                r.head(q) = R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));

            // partial step: first active inequality whose multiplier hits zero
            double t1 = kInf;
            Eigen::Index l = -1;
            for (Eigen::Index k = 0; k < q; ++k) {
                if (active[static_cast<std::size_t>(k)] < meq) continue;
                if (r(k) > 0.0 && u(k) / r(k) < t1) {
                    t1 = u(k) / r(k);
                    l = k;
                }
            }

            const double ztnp = z.dot(np);  // = |J2' np|^2 >= 0
            const double zero_tol = 1e-13 * (1.0 + d.cwiseAbs().maxCoeff());
            const double t2 = ztnp > zero_tol ? -sp / ztnp : kInf;
            const double t = std::min(t1, t2);

            if (t >= kInf) {
                if (trace)
                    (*trace) << "{\"event\":\"infeasible\",\"constraint\":" << p << "}\n";
                throw QpError("qp: infeasible constraints");
            }

            if (t2 >= kInf) {
                // step in dual space only
                u.head(q) -= t * r.head(q);
                u_plus += t;
                if (trace)
                    (*trace) << "{\"event\":\"drop\",\"constraint\":"
                             << active[static_cast<std::size_t>(l)] << "}\n";
                drop_constraint(l);
                continue;
            }

            x += t * z;
            fval += t * ztnp * (0.5 * t + u_plus);
            u.head(q) -= t * r.head(q);
            u_plus += t;

            if (t == t2) {
                // full step: p becomes active
                for (Eigen::Index j = n - 1; j > q; --j) {
                    const Givens g = make_givens(d(j - 1), d(j));
                    d(j - 1) = g.r;
                    d(j) = 0.0;
                    rotate_cols(J, j - 1, j, g);
                }
                R.col(q).head(q + 1) = d.head(q + 1);
                active.push_back(p);
                u(q) = u_plus;
                if (trace) (*trace) << "{\"event\":\"add\",\"constraint\":" << p << "}\n";
                break;
            }

            // partial step: drop the blocking constraint, stay on p
            if (trace)
                (*trace) << "{\"event\":\"drop\",\"constraint\":"
                         << active[static_cast<std::size_t>(l)] << "}\n";
            drop_constraint(l);
            sp = np.dot(x) - bp;
        }
    }

    QpSolution sol;
    sol.x = x;
    sol.lagrange = Eigen::VectorXd::Zero(c);
    for (std::size_t k = 0; k < active.size(); ++k)
        sol.lagrange(active[k]) = sigma(active[k]) * u(static_cast<Eigen::Index>(k));
    sol.active_set = active;
    sol.objective = fval;
    sol.iterations = iter;
    return sol;
}

Eigen::VectorXd simplex_lsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double dt) {
    const Eigen::Index q = A.cols();
    if (q < 1) throw QpError("simplex_lsq: empty basis");
    if (A.rows() != y.size()) throw QpError("simplex_lsq: shape mismatch");

    QuadraticProgram qp;
    qp.G.noalias() = dt * (A.transpose() * A);
    qp.G.diagonal().array() += 1e-10 * qp.G.trace() / static_cast<double>(q);
    qp.a.noalias() = dt * (A.transpose() * y);
    qp.C.resize(q, q + 1);
    qp.C.col(0).setOnes();
    qp.C.rightCols(q) = Eigen::MatrixXd::Identity(q, q);
    qp.b = Eigen::VectorXd::Zero(q + 1);
    qp.b(0) = 1.0;
    qp.meq = 1;
    return solve_qp(qp).x;
}

}  // namespace densemu
