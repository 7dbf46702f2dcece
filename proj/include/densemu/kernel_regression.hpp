#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>

#include "densemu/training_set.hpp"

namespace densemu {

enum class Metric { L2, Hellinger };

// Diagonal bandwidth matrix H = diag(h_1, ..., h_d).
struct Bandwidth {
    std::vector<double> diag;
    bool isotropic = false;

    static Bandwidth iso(double h, std::size_t d);
    static Bandwidth aniso(std::vector<double> h);

    void validate(std::size_t d) const;
};

struct Weights {
    std::vector<double> alpha;  // nonnegative, sums to one
};

// The kernel exactly as the regression uses it, including its
// normalization constant. The constant cancels in every weight ratio
// (see weights()), so only the exponential matters downstream.
double gaussian_kernel(std::span<const double> x, std::span<const double> y, const Bandwidth& bw);

// Normalized kernel weights alpha_i = K(x_i, x0) / sum_j K(x_j, x0),
// evaluated with an exponent shift so far extrapolation degrades to the
// nearest input instead of 0/0.
Weights weights(const TrainingSet& train, std::span<const double> x0, const Bandwidth& bw);

// Nadaraya-Watson estimate sum_i alpha_i f_i.
Density predict_l2(const TrainingSet& train, std::span<const double> x0, const Bandwidth& bw);

// Hellinger-geometry estimate (sum_i K_i sqrt(f_i))^2, renormalized.
Density predict_hellinger(const TrainingSet& train, std::span<const double> x0,
                          const Bandwidth& bw);

// Weighted objective whose minimizer over densities is the corresponding
// kernel estimate: sum_i alpha_i * dist(f_i, f)^2 in the chosen geometry.
double weighted_objective(const TrainingSet& train, std::span<const double> x0,
                          const Bandwidth& bw, std::span<const double> f_values, Metric metric);

// Caches the density Gram matrices so repeated leave-one-out evaluations
// cost O(N^2) instead of O(N^2 M).
class LooWorkspace {
public:
    explicit LooWorkspace(const TrainingSet& train);
    double objective(const Bandwidth& bw, Metric metric) const;
    const TrainingSet& train() const { return *train_; }

private:
    const TrainingSet* train_;
    Eigen::MatrixXd gram_l2_;    // dt-weighted <f_i, f_j>
    Eigen::MatrixXd gram_sqrt_;  // dt-weighted <sqrt f_i, sqrt f_j>
};

// sum over i of dist(f_i, prediction-from-the-others)^2; needs N >= 2
double loo_objective(const TrainingSet& train, const Bandwidth& bw, Metric metric = Metric::L2);

struct BandwidthFit {
    Bandwidth bandwidth;
    double objective = 0.0;  // achieved leave-one-out value
};

// Multistart bounded quasi-Newton search in log-bandwidth coordinates.
// Five geometric seeds span [0.01, 10] times the input range; bounds on
// each h_j are [1e-6, 1e6]. Needs N >= 3.
BandwidthFit optimize_bandwidth(const TrainingSet& train, bool isotropic,
                                Metric metric = Metric::L2);

// Test hook. L2: residual norm of the first-order identity satisfied by
// the kernel estimate. Hellinger: largest descent rate of the weighted
// objective over probe directions toward each sample and the mean (a
// stationary point gives a nonpositive value up to finite-difference
// noise).
double stationarity_check(const TrainingSet& train, std::span<const double> x0,
                          const Bandwidth& bw, Metric metric);

// JSON round trip: {"isotropic": bool, "h": [..]}
void write_bandwidth_json(const Bandwidth& bw, const std::string& path);
Bandwidth read_bandwidth_json(const std::string& path);

}  // namespace densemu
