#pragma once

#include <functional>
#include <vector>

namespace densemu {

struct BoxMinResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Box-constrained quasi-Newton descent: dense BFGS on the clamped path
// with Armijo backtracking and central-difference gradients. Suited to
// the low-dimensional, smooth objectives this project produces; the line
// search only ever accepts decreases, so the final value never exceeds
// the value at x0.
BoxMinResult minimize_box(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const std::vector<double>& lo,
                          const std::vector<double>& hi, double fd_step = 1e-5,
                          int max_iter = 200);

}  // namespace densemu
