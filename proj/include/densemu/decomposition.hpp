#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "densemu/kernel_regression.hpp"
#include "densemu/training_set.hpp"

namespace densemu {

enum class DecompMethod { CPCA, MMP_L2, MMP_HELLINGER, AQM, RANDOM };

const char* method_name(DecompMethod m);
DecompMethod method_from_name(const std::string& name);

// A fitted basis of size q plus the simplex coefficients of each sample.
// CPCA keeps the mean density and signed orthonormal components apart
// from the density basis the other methods use.
struct DecompositionModel {
    DecompMethod method = DecompMethod::RANDOM;
    Grid grid;
    std::size_t q = 0;

    std::vector<Density> basis;         // MMP / AQM / RANDOM
    std::optional<Density> mean;        // CPCA
    Eigen::MatrixXd components;         // CPCA: M x q, dt-orthonormal

    Eigen::MatrixXd coeffs;             // N x q, rows on the simplex (CPCA: projections)
    std::vector<std::size_t> selected_indices;  // MMP / RANDOM
    std::vector<double> history;  // MMP: sup error per step; AQM: objective per half-sweep
    std::uint64_t seed = 0;

    // signed reconstruction before the clip-and-renormalize step
    std::vector<double> preclip_values(std::size_t i) const;
    Density reconstruct(std::size_t i) const;
};

// PCA of the centered sample in the dt-weighted geometry, reconstruction
// clipped at zero and renormalized. Needs 1 <= q <= N-1.
DecompositionModel cpca_fit(const TrainingSet& train, std::size_t q);

// Greedy selection of the worst-approximated sample; projections stay L2
// least squares on the simplex while the selection error uses the chosen
// metric. Stops at q_max or when the sup error drops to tol.
DecompositionModel mmp_fit(const TrainingSet& train, std::size_t q_max, Metric metric,
                           double tol = 1e-12);

// Block-coordinate descent on 1/2 ||F - Psi W||_F^2 dt: simplex rows of
// Psi and per-row quadratic programs for W, from the uniform start.
DecompositionModel aqm_fit(const TrainingSet& train, std::size_t q, std::size_t iter_max = 20);

// q distinct sample densities drawn without replacement.
DecompositionModel random_basis_fit(const TrainingSet& train, std::size_t q, std::uint64_t seed);

// Per-sample relative errors of the reconstructions, N x 9.
Eigen::MatrixXd reconstruction_errors(const DecompositionModel& model, const TrainingSet& train);

// Directory layout: basis.csv (M x q), coeffs.csv (N x q), meta.json,
// plus mean.csv for CPCA.
void save_model(const DecompositionModel& model, const std::string& dir);
DecompositionModel load_model(const std::string& dir);

}  // namespace densemu
