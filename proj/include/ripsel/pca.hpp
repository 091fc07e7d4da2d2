#pragma once

// Principal components of (by default) the correlation matrix, Kaiser eigenvalue>1
// component selection, and projection to / from the reduced basis.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ripsel/dataset.hpp"
#include "ripsel/eigen_util.hpp"
#include "ripsel/error.hpp"
#include "ripsel/log.hpp"

namespace ripsel {

struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    /// Descending.
    Eigen::VectorXd eigenvalues;
    /// Columns are unit eigenvectors matching `eigenvalues`.
    Eigen::MatrixXd components;
    std::size_t kept = 1;
    bool standardized = true;

    std::size_t dims() const { return static_cast<std::size_t>(mean.size()); }
    auto kept_components() const { return components.leftCols(static_cast<Eigen::Index>(kept)); }
};

inline constexpr double kaiser_cutoff = 1.0;

/// Covariance (or correlation, when `standardize`) of `x` with the model's centering.
inline Eigen::MatrixXd fitted_covariance(const PcaModel& model, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd z = (x.rowwise() - model.mean.transpose()).array().rowwise() / model.scale.transpose().array();
    return (z.transpose() * z) / static_cast<double>(x.rows() - 1);
}

inline PcaModel fit_pca(const Eigen::MatrixXd& x, bool standardize = true) {
    if (x.rows() < 2)
        throw DataError("PCA needs at least two rows");
    if (x.cols() < 1)
        throw DataError("PCA needs at least one column");
    PcaModel model;
    model.standardized = standardize;
    model.mean = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();
    const double denom = static_cast<double>(x.rows() - 1);
    model.scale = Eigen::VectorXd::Ones(x.cols());
    if (standardize) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            double sd = std::sqrt(centered.col(j).squaredNorm() / denom);
            if (sd > 1e-12) {
                model.scale(j) = sd;
            } else {
                warn("column " + std::to_string(j) + " has zero variance; left unscaled");
            }
        }
        centered = centered.array().rowwise() / model.scale.transpose().array();
    }
    Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw NumericalError("symmetric eigendecomposition did not converge");
    const Eigen::Index m = x.cols();
    model.eigenvalues = solver.eigenvalues().reverse();
    model.components = solver.eigenvectors().rowwise().reverse();
    // Fix signs so the largest-magnitude entry of each component is positive.
    for (Eigen::Index k = 0; k < m; ++k) {
        Eigen::Index arg = 0;
        model.components.col(k).cwiseAbs().maxCoeff(&arg);
        if (model.components(arg, k) < 0.0)
            model.components.col(k) *= -1.0;
    }
    std::size_t kept = 0;
    for (Eigen::Index k = 0; k < m; ++k)
        kept += model.eigenvalues(k) > kaiser_cutoff ? 1 : 0;
    model.kept = std::max<std::size_t>(kept, 1);
    return model;
}

namespace detail {

inline void check_pca_width(Eigen::Index cols, Eigen::Index expected) {
    if (cols != expected)
        throw SchemaError("PCA input has " + std::to_string(cols) + " columns, model expects " +
                          std::to_string(expected));
}

} // namespace detail

inline Eigen::MatrixXd transform(const PcaModel& model, const Eigen::MatrixXd& x) {
    detail::check_pca_width(x.cols(), model.mean.size());
    Eigen::MatrixXd z = (x.rowwise() - model.mean.transpose()).array().rowwise() / model.scale.transpose().array();
    return z * model.kept_components();
}

/// Missing cells become 0 after centering (mean substitution) before projection.
inline Eigen::MatrixXd transform(const PcaModel& model, const Dataset& data) {
    detail::check_pca_width(static_cast<Eigen::Index>(data.cols()), model.mean.size());
    Eigen::MatrixXd z(data.rows(), data.cols());
    for (std::size_t r = 0; r < data.rows(); ++r)
        for (std::size_t j = 0; j < data.cols(); ++j) {
            const auto& c = data.cell(r, j);
            const auto jj = static_cast<Eigen::Index>(j);
            z(static_cast<Eigen::Index>(r), jj) = c ? (*c - model.mean(jj)) / model.scale(jj) : 0.0;
        }
    return z * model.kept_components();
}

inline Eigen::MatrixXd inverse_transform(const PcaModel& model, const Eigen::MatrixXd& projected) {
    detail::check_pca_width(projected.cols(), static_cast<Eigen::Index>(model.kept));
    Eigen::MatrixXd z = projected * model.kept_components().transpose();
    return (z.array().rowwise() * model.scale.transpose().array()).rowwise() + model.mean.transpose().array();
}

/// Complete feature matrix of `data`; throws if any cell is missing.
inline Eigen::MatrixXd feature_matrix(const Dataset& data) {
    Eigen::MatrixXd x(data.rows(), data.cols());
    for (std::size_t r = 0; r < data.rows(); ++r)
        for (std::size_t j = 0; j < data.cols(); ++j) {
            const auto& c = data.cell(r, j);
            if (!c)
                throw DataError("missing value at row " + std::to_string(r) + ", column '" +
                                data.schema()[j].name + "'");
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = *c;
        }
    return x;
}

/// Column means over observed cells; used to fill residual gaps before fitting.
inline Eigen::MatrixXd mean_filled_matrix(const Dataset& data) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(data.cols());
    Eigen::VectorXd count = Eigen::VectorXd::Zero(data.cols());
    for (std::size_t r = 0; r < data.rows(); ++r)
        for (std::size_t j = 0; j < data.cols(); ++j)
            if (const auto& c = data.cell(r, j)) {
                sum(j) += *c;
                count(j) += 1.0;
            }
    Eigen::MatrixXd x(data.rows(), data.cols());
    for (std::size_t r = 0; r < data.rows(); ++r)
        for (std::size_t j = 0; j < data.cols(); ++j) {
            const auto& c = data.cell(r, j);
            x(r, j) = c ? *c : (count(j) > 0 ? sum(j) / count(j) : 0.0);
        }
    return x;
}

inline void to_json(nlohmann::json& j, const PcaModel& m) {
    std::vector<double> rows;
    for (Eigen::Index r = 0; r < m.components.rows(); ++r)
        for (Eigen::Index c = 0; c < m.components.cols(); ++c)
            rows.push_back(m.components(r, c));
    j = {{"mean", detail::to_vector(m.mean)},
         {"scale", detail::to_vector(m.scale)},
         {"eigenvalues", detail::to_vector(m.eigenvalues)},
         {"components", rows},
         {"kept", m.kept},
         {"standardized", m.standardized}};
}

inline void from_json(const nlohmann::json& j, PcaModel& m) {
    m.mean = detail::from_vector(j.at("mean").get<std::vector<double>>());
    m.scale = detail::from_vector(j.at("scale").get<std::vector<double>>());
    m.eigenvalues = detail::from_vector(j.at("eigenvalues").get<std::vector<double>>());
    auto rows = j.at("components").get<std::vector<double>>();
    const auto d = m.mean.size();
    if (static_cast<Eigen::Index>(rows.size()) != d * d || m.scale.size() != d || m.eigenvalues.size() != d)
        throw DataError("PCA model JSON has inconsistent dimensions");
    m.components = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(rows.data(), d, d);
    m.kept = j.at("kept").get<std::size_t>();
    m.standardized = j.value("standardized", true);
    if (m.kept < 1 || static_cast<Eigen::Index>(m.kept) > d)
        throw DataError("PCA model JSON has kept outside [1, m]");
}

} // namespace ripsel
