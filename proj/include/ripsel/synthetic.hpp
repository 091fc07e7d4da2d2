#pragma once

// Seeded synthetic datasets for tests, the acceptance suite and `bench` without data files.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ripsel/dataset.hpp"
#include "ripsel/util.hpp"

namespace ripsel::synthetic {

inline std::vector<AttributeSpec> numbered_schema(std::size_t m, const std::string& prefix = "x") {
    std::vector<AttributeSpec> schema;
    for (std::size_t j = 0; j < m; ++j)
        schema.push_back({prefix + std::to_string(j), AttributeKind::continuous, j});
    return schema;
}

inline const std::vector<std::string>& binary_labels() {
    static const std::vector<std::string> labels{"0", "1"};
    return labels;
}

/// Features in [0,1]; class 1 iff (x0 > 0.5 and x1 > 0.5) or (x2 < 0.3 and x3 > 0.6).
/// Columns beyond the first four are irrelevant. With levels > 0 each feature takes one of
/// `levels` equally spaced cell centres, otherwise it is continuous uniform.
inline Dataset conjunctive_concept(std::size_t n_rows, std::uint64_t seed, std::size_t n_features = 6,
                                   std::size_t levels = 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Cell> cells;
    std::vector<std::size_t> classes;
    std::vector<double> x(n_features);
    for (std::size_t r = 0; r < n_rows; ++r) {
        for (auto& v : x) {
            v = unit(rng);
            if (levels > 0)
                v = (std::floor(v * static_cast<double>(levels)) + 0.5) / static_cast<double>(levels);
        }
        const bool pos = (x[0] > 0.5 && x[1] > 0.5) || (x[2] < 0.3 && x[3] > 0.6);
        cells.insert(cells.end(), x.begin(), x.end());
        classes.push_back(pos ? 1 : 0);
    }
    return {numbered_schema(n_features), binary_labels(), std::move(cells), std::move(classes)};
}

/// Standard-normal inputs; target ~ Bernoulli(sigmoid(sum_k coef_k * x_k)) over the first
/// coefficients.size() inputs. The remaining inputs are irrelevant.
inline Dataset logistic_relevance(std::size_t n_rows, std::size_t n_inputs, const std::vector<double>& coefficients,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Cell> cells;
    std::vector<std::size_t> classes;
    std::vector<double> x(n_inputs);
    for (std::size_t r = 0; r < n_rows; ++r) {
        double a = 0.0;
        for (std::size_t j = 0; j < n_inputs; ++j) {
            x[j] = normal(rng);
            if (j < coefficients.size())
                a += coefficients[j] * x[j];
        }
        cells.insert(cells.end(), x.begin(), x.end());
        classes.push_back(unit(rng) < 1.0 / (1.0 + std::exp(-a)) ? 1 : 0);
    }
    return {numbered_schema(n_inputs), binary_labels(), std::move(cells), std::move(classes)};
}

struct BenchmarkShape {
    std::size_t n_train = 2000;
    std::size_t n_test = 1000;
    std::size_t n_features = 40;
    std::size_t n_informative = 10;
    std::size_t n_factors = 2;
    double feature_noise = 0.6;
    double label_noise = 0.3;
    /// Class 1 iff the factor sum (plus label noise) exceeds this.
    double cutoff = 1.0;
};

/// Informative columns are noisy copies of a few latent factors (round-robin); the class
/// depends on the factor sum. Remaining columns are independent noise.
inline Dataset latent_factor_data(std::size_t n_rows, const BenchmarkShape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Cell> cells;
    std::vector<std::size_t> classes;
    std::vector<double> z(shape.n_factors);
    for (std::size_t r = 0; r < n_rows; ++r) {
        double score = 0.0;
        for (auto& f : z) {
            f = normal(rng);
            score += f;
        }
        for (std::size_t j = 0; j < shape.n_features; ++j) {
            const double noise = normal(rng);
            cells.emplace_back(j < shape.n_informative ? z[j % shape.n_factors] + shape.feature_noise * noise : noise);
        }
        score += shape.label_noise * normal(rng);
        classes.push_back(score > shape.cutoff ? 1 : 0);
    }
    return {numbered_schema(shape.n_features), binary_labels(), std::move(cells), std::move(classes)};
}

inline std::pair<Dataset, Dataset> benchmark_split(const BenchmarkShape& shape, std::uint64_t seed) {
    return {latent_factor_data(shape.n_train, shape, mix_seed(seed, 0)),
            latent_factor_data(shape.n_test, shape, mix_seed(seed, 1))};
}

} // namespace ripsel::synthetic
