#include "densemu/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "densemu/csv.hpp"
#include "densemu/qp.hpp"
#include "densemu/rng.hpp"

namespace densemu {

const char* method_name(DecompMethod m) {
    switch (m) {
        case DecompMethod::CPCA: return "CPCA";
        case DecompMethod::MMP_L2: return "MMP_L2";
        case DecompMethod::MMP_HELLINGER: return "MMP_HELLINGER";
        case DecompMethod::AQM: return "AQM";
        case DecompMethod::RANDOM: return "RANDOM";
    }
    throw std::invalid_argument("method_name: unknown method");
}

DecompMethod method_from_name(const std::string& name) {
    if (name == "CPCA") return DecompMethod::CPCA;
    if (name == "MMP_L2") return DecompMethod::MMP_L2;
    if (name == "MMP_HELLINGER") return DecompMethod::MMP_HELLINGER;
    if (name == "AQM") return DecompMethod::AQM;
    if (name == "RANDOM") return DecompMethod::RANDOM;
    throw std::invalid_argument("unknown decomposition method: " + name);
}

namespace {

// columns are the sample densities
Eigen::MatrixXd density_matrix(const TrainingSet& train) {
    const std::size_t n = train.size();
    const std::size_t m = train.grid().m;
    Eigen::MatrixXd F(m, n);
    for (std::size_t i = 0; i < n; ++i)
        F.col(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::VectorXd>(train.density(i).values().data(), m);
    return F;
}

double metric_distance(const Eigen::VectorXd& f, const Eigen::VectorXd& g, double dt,
                       Metric metric) {
    if (metric == Metric::L2) return std::sqrt((f - g).squaredNorm() * dt);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < f.size(); ++j) {
        const double d = std::sqrt(std::max(f(j), 0.0)) - std::sqrt(std::max(g(j), 0.0));
        acc += d * d;
    }
    return std::sqrt(acc * dt);
}

Density density_from_vector(const Grid& grid, const Eigen::VectorXd& v) {
    return Density(grid, std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

std::vector<double> DecompositionModel::preclip_values(std::size_t i) const {
    const Eigen::Index row = static_cast<Eigen::Index>(i);
    Eigen::VectorXd v;
    if (method == DecompMethod::CPCA) {
        v = Eigen::Map<const Eigen::VectorXd>(mean->values().data(), grid.m);
        v.noalias() += components * coeffs.row(row).transpose();
    } else {
        v = Eigen::VectorXd::Zero(grid.m);
        for (std::size_t k = 0; k < q; ++k)
            v += coeffs(row, static_cast<Eigen::Index>(k)) *
                 Eigen::Map<const Eigen::VectorXd>(basis[k].values().data(), grid.m);
    }
    return std::vector<double>(v.data(), v.data() + v.size());
}

Density DecompositionModel::reconstruct(std::size_t i) const {
    std::vector<double> v = preclip_values(i);
    if (method == DecompMethod::CPCA)
        for (double& x : v) x = std::max(x, 0.0);
    return Density(grid, std::move(v));
}

DecompositionModel cpca_fit(const TrainingSet& train, std::size_t q) {
    const std::size_t n = train.size();
    if (q < 1 || q > n - 1)
        throw std::invalid_argument("cpca_fit: q must lie in [1, N-1]");
    const double dt = train.grid().dt;
    const Eigen::Index m = static_cast<Eigen::Index>(train.grid().m);
    const Eigen::Index nn = static_cast<Eigen::Index>(n);

    Eigen::MatrixXd F = density_matrix(train);  // m x n
    const Eigen::VectorXd mean = F.rowwise().mean();
    Eigen::MatrixXd Fc = F.colwise() - mean;

    // eigenproblem of the dt-weighted covariance through the n x n Gram
    Eigen::MatrixXd K = (dt / static_cast<double>(n - 1)) * (Fc.transpose() * Fc);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    if (eig.info() != Eigen::Success) throw std::runtime_error("cpca_fit: eigensolver failed");

    DecompositionModel model;
    model.method = DecompMethod::CPCA;
    model.grid = train.grid();
    model.q = q;
    model.mean = density_from_vector(train.grid(), mean);
    model.components = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(q));
    model.coeffs = Eigen::MatrixXd::Zero(nn, static_cast<Eigen::Index>(q));

    const double lambda_max = eig.eigenvalues().cwiseMax(0.0).maxCoeff();
    for (std::size_t k = 0; k < q; ++k) {
        const Eigen::Index src = nn - 1 - static_cast<Eigen::Index>(k);  // descending order
        const double lambda = eig.eigenvalues()(src);
        if (!(lambda > 1e-13 * std::max(lambda_max, 1e-300)))
            continue;  // null direction: keep a zero component and zero scores
        const double scale = std::sqrt(static_cast<double>(n - 1) * lambda);
        Eigen::VectorXd w = Fc * eig.eigenvectors().col(src) / scale;
        Eigen::VectorXd psi = scale * eig.eigenvectors().col(src);
        // deterministic orientation: largest-magnitude entry positive
        Eigen::Index peak;
        w.cwiseAbs().maxCoeff(&peak);
        if (w(peak) < 0.0) {
            w = -w;
            psi = -psi;
        }
        model.components.col(static_cast<Eigen::Index>(k)) = w;
        model.coeffs.col(static_cast<Eigen::Index>(k)) = psi;
    }
    return model;
}

DecompositionModel mmp_fit(const TrainingSet& train, std::size_t q_max, Metric metric,
                           double tol) {
    const std::size_t n = train.size();
    if (q_max < 1 || q_max > n)
        throw std::invalid_argument("mmp_fit: q_max must lie in [1, N]");
    const double dt = train.grid().dt;
    const Eigen::MatrixXd F = density_matrix(train);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(F.rows());

    DecompositionModel model;
    model.method = metric == Metric::L2 ? DecompMethod::MMP_L2 : DecompMethod::MMP_HELLINGER;
    model.grid = train.grid();

    // distance from the zero function seeds the first pick
    std::vector<double> errors(n);
    for (std::size_t i = 0; i < n; ++i)
        errors[i] = metric_distance(F.col(static_cast<Eigen::Index>(i)), zero, dt, metric);

    std::vector<bool> selected(n, false);
    Eigen::MatrixXd A;  // m x q basis columns
    for (std::size_t step = 0; step < q_max; ++step) {
        std::size_t pick = n;
        double worst = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (selected[i]) continue;
            // ties resolve to the lowest index; the Hellinger norm of every
            // density from the zero function is 1, so the first Hellinger
            // pick is an all-way tie up to roundoff
            if (errors[i] > worst + 1e-12 * (1.0 + worst)) {
                worst = errors[i];
                pick = i;
            }
        }
        selected[pick] = true;
        model.selected_indices.push_back(pick);
        model.basis.push_back(train.density(pick));
        const std::size_t q = model.basis.size();
        A.conservativeResize(F.rows(), static_cast<Eigen::Index>(q));
        A.col(static_cast<Eigen::Index>(q - 1)) = F.col(static_cast<Eigen::Index>(pick));

        // project everything onto the current basis; selected samples are
        // reproduced exactly and never picked again
        model.coeffs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
        double sup = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::VectorXd psi = simplex_lsq(A, F.col(static_cast<Eigen::Index>(i)), dt);
            model.coeffs.row(static_cast<Eigen::Index>(i)) = psi.transpose();
            errors[i] = selected[i]
                            ? 0.0
                            : metric_distance(F.col(static_cast<Eigen::Index>(i)), A * psi, dt,
                                              metric);
            sup = std::max(sup, errors[i]);
        }
        model.history.push_back(sup);
        if (sup <= tol) break;
    }
    model.q = model.basis.size();
    return model;
}

DecompositionModel aqm_fit(const TrainingSet& train, std::size_t q, std::size_t iter_max) {
    const std::size_t n = train.size();
    if (q < 1) throw std::invalid_argument("aqm_fit: q must be positive");
    if (iter_max < 1) throw std::invalid_argument("aqm_fit: iter_max must be positive");
    const double dt = train.grid().dt;
    const Eigen::Index m = static_cast<Eigen::Index>(train.grid().m);
    const Eigen::Index nn = static_cast<Eigen::Index>(n);
    const Eigen::Index qq = static_cast<Eigen::Index>(q);

    const Eigen::MatrixXd F = density_matrix(train).transpose();  // n x m
    Eigen::MatrixXd Psi = Eigen::MatrixXd::Constant(nn, qq, 1.0 / static_cast<double>(q));
    Eigen::MatrixXd W =
        Eigen::MatrixXd::Constant(qq, m, 1.0 / (static_cast<double>(m) * dt));

    auto objective = [&]() { return 0.5 * dt * (F - Psi * W).squaredNorm(); };

    DecompositionModel model;
    model.method = DecompMethod::AQM;
    model.grid = train.grid();
    model.q = q;
    model.history.push_back(objective());

    for (std::size_t sweep = 0; sweep < iter_max; ++sweep) {
        const double before = model.history.back();

        const Eigen::MatrixXd A = W.transpose();  // m x q
        for (Eigen::Index i = 0; i < nn; ++i)
            Psi.row(i) = simplex_lsq(A, F.row(i).transpose(), dt).transpose();
        model.history.push_back(objective());

        for (Eigen::Index k = 0; k < qq; ++k) {
            const double s = Psi.col(k).squaredNorm();
            if (s <= 1e-30) {
                // dead component: no sample uses it, so the row subproblem
                // is singular; restart it on the worst-approximated sample
                Eigen::Index worst = 0;
                (F - Psi * W).rowwise().squaredNorm().maxCoeff(&worst);
                W.row(k) = F.row(worst);
                continue;
            }
            // residuals with component k removed
            Eigen::MatrixXd E = F - Psi * W;
            E.noalias() += Psi.col(k) * W.row(k);
            QuadraticProgram qp;
            qp.G = s * Eigen::MatrixXd::Identity(m, m);
            qp.a = E.transpose() * Psi.col(k);
            qp.C.resize(m, m + 1);
            qp.C.col(0).setConstant(dt);
            qp.C.rightCols(m) = Eigen::MatrixXd::Identity(m, m);
            qp.b = Eigen::VectorXd::Zero(m + 1);
            qp.b(0) = 1.0;
            qp.meq = 1;
            W.row(k) = solve_qp(qp).x.transpose();
        }
        model.history.push_back(objective());

        const double after = model.history.back();
        if (before - after < 1e-8 * std::max(before, 1e-300)) break;
    }

    model.coeffs = Psi;
    model.basis.reserve(q);
    for (Eigen::Index k = 0; k < qq; ++k)
        model.basis.push_back(density_from_vector(train.grid(), W.row(k).transpose()));
    return model;
}

DecompositionModel random_basis_fit(const TrainingSet& train, std::size_t q,
                                    std::uint64_t seed) {
    const std::size_t n = train.size();
    if (q < 1 || q > n) throw std::invalid_argument("random_basis_fit: q must lie in [1, N]");

    // seed-determined permutation; taking prefixes nests the bases
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    SequentialRng rng(seed, /*stream=*/0x52414e44);  // "RAND"
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.below(i + 1)]);

    DecompositionModel model;
    model.method = DecompMethod::RANDOM;
    model.grid = train.grid();
    model.q = q;
    model.seed = seed;
    const double dt = train.grid().dt;
    const Eigen::MatrixXd F = density_matrix(train);
    Eigen::MatrixXd A(F.rows(), static_cast<Eigen::Index>(q));
    for (std::size_t k = 0; k < q; ++k) {
        model.selected_indices.push_back(perm[k]);
        model.basis.push_back(train.density(perm[k]));
        A.col(static_cast<Eigen::Index>(k)) = F.col(static_cast<Eigen::Index>(perm[k]));
    }
    model.coeffs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
    for (std::size_t i = 0; i < n; ++i)
        model.coeffs.row(static_cast<Eigen::Index>(i)) =
            simplex_lsq(A, F.col(static_cast<Eigen::Index>(i)), dt).transpose();
    return model;
}

Eigen::MatrixXd reconstruction_errors(const DecompositionModel& model, const TrainingSet& train) {
    const std::size_t n = train.size();
    if (model.coeffs.rows() != static_cast<Eigen::Index>(n))
        throw std::invalid_argument("reconstruction_errors: model was fitted on a different sample");
    Eigen::MatrixXd out(n, kNumQuantities);
    for (std::size_t i = 0; i < n; ++i) {
        const auto errs = relative_errors(train.density(i), model.reconstruct(i));
        for (std::size_t k = 0; k < kNumQuantities; ++k)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = errs[k];
    }
    return out;
}

void save_model(const DecompositionModel& model, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    const std::size_t m = model.grid.m;
    std::vector<std::vector<double>> basis_rows(m, std::vector<double>(model.q));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < model.q; ++k)
            basis_rows[j][k] = model.method == DecompMethod::CPCA
                                   ? model.components(static_cast<Eigen::Index>(j),
                                                      static_cast<Eigen::Index>(k))
                                   : model.basis[k][j];
    write_numeric_csv(dir + "/basis.csv", basis_rows);

    std::vector<std::vector<double>> coeff_rows(static_cast<std::size_t>(model.coeffs.rows()),
                                                std::vector<double>(model.q));
    for (Eigen::Index i = 0; i < model.coeffs.rows(); ++i)
        for (std::size_t k = 0; k < model.q; ++k)
            coeff_rows[static_cast<std::size_t>(i)][k] =
                model.coeffs(i, static_cast<Eigen::Index>(k));
    write_numeric_csv(dir + "/coeffs.csv", coeff_rows);

    if (model.mean) write_density_csv(*model.mean, dir + "/mean.csv");

    nlohmann::ordered_json meta;
    meta["method"] = method_name(model.method);
    meta["q"] = model.q;
    meta["grid"] = {{"t1", model.grid.t1}, {"dt", model.grid.dt}, {"m", model.grid.m}};
    meta["history"] = model.history;
    meta["seed"] = model.seed;
    meta["selected_indices"] = model.selected_indices;
    std::ofstream out(dir + "/meta.json");
    if (!out) throw std::runtime_error("cannot write " + dir + "/meta.json");
    out << meta.dump(2) << '\n';
}

DecompositionModel load_model(const std::string& dir) {
    std::ifstream in(dir + "/meta.json");
    if (!in) throw std::runtime_error("cannot open " + dir + "/meta.json");
    nlohmann::json meta;
    in >> meta;

    DecompositionModel model;
    model.method = method_from_name(meta.at("method").get<std::string>());
    model.q = meta.at("q").get<std::size_t>();
    model.grid = Grid(meta.at("grid").at("t1").get<double>(),
                      meta.at("grid").at("dt").get<double>(),
                      meta.at("grid").at("m").get<std::size_t>());
    model.history = meta.at("history").get<std::vector<double>>();
    model.seed = meta.at("seed").get<std::uint64_t>();
    model.selected_indices = meta.at("selected_indices").get<std::vector<std::size_t>>();

    const auto basis_rows = read_numeric_csv(dir + "/basis.csv");
    if (basis_rows.size() != model.grid.m)
        throw std::runtime_error(dir + "/basis.csv: row count does not match the grid");
    if (model.method == DecompMethod::CPCA) {
        model.components.resize(static_cast<Eigen::Index>(model.grid.m),
                                static_cast<Eigen::Index>(model.q));
        for (std::size_t j = 0; j < model.grid.m; ++j) {
            if (basis_rows[j].size() != model.q)
                throw std::runtime_error(dir + "/basis.csv: column count does not match q");
            for (std::size_t k = 0; k < model.q; ++k)
                model.components(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
                    basis_rows[j][k];
        }
        model.mean = read_density_csv(dir + "/mean.csv");
    } else {
        for (std::size_t k = 0; k < model.q; ++k) {
            std::vector<double> col(model.grid.m);
            for (std::size_t j = 0; j < model.grid.m; ++j) {
                if (basis_rows[j].size() != model.q)
                    throw std::runtime_error(dir + "/basis.csv: column count does not match q");
                col[j] = basis_rows[j][k];
            }
            model.basis.emplace_back(model.grid, std::move(col));
        }
    }

    const auto coeff_rows = read_numeric_csv(dir + "/coeffs.csv");
    model.coeffs.resize(static_cast<Eigen::Index>(coeff_rows.size()),
                        static_cast<Eigen::Index>(model.q));
    for (std::size_t i = 0; i < coeff_rows.size(); ++i) {
        if (coeff_rows[i].size() != model.q)
            throw std::runtime_error(dir + "/coeffs.csv: column count does not match q");
        for (std::size_t k = 0; k < model.q; ++k)
            model.coeffs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                coeff_rows[i][k];
    }
    return model;
}

}  // namespace densemu
