#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace densemu {

// minimize 1/2 x'Gx - a'x  subject to  C'x >= b, with the first meq
// constraints treated as equalities. One column of C per constraint.
struct QuadraticProgram {
    Eigen::MatrixXd G;
    Eigen::VectorXd a;
    Eigen::MatrixXd C;
    Eigen::VectorXd b;
    Eigen::Index meq = 0;
};

struct QpSolution {
    Eigen::VectorXd x;
    Eigen::VectorXd lagrange;  // one entry per constraint, zero when inactive
    std::vector<Eigen::Index> active_set;
    double objective = 0.0;
    int iterations = 0;
};

class QpError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Goldfarb-Idnani dual active-set method for strictly convex programs.
// Starts from the unconstrained minimizer (empty active set) and adds the
// most violated constraint each round. Infeasible programs and loss of
// positive definiteness raise QpError. When `trace` is given, one JSON
// line per active-set change is written to it.
QpSolution solve_qp(const QuadraticProgram& qp, std::ostream* trace = nullptr);

// argmin over the simplex of sum_j (y_j - sum_k psi_k A_jk)^2 * dt.
// The Gram matrix is ridge-regularized because nearly collinear sample
// densities would otherwise break strict convexity.
Eigen::VectorXd simplex_lsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double dt);

}  // namespace densemu
