#pragma once

// MCAR gap injection and the (level x scope) test-set grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ripsel/dataset.hpp"
#include "ripsel/error.hpp"
#include "ripsel/util.hpp"

namespace ripsel {

enum class MissingScope { all_attributes, half_attributes };

inline const char* to_string(MissingScope s) {
    return s == MissingScope::all_attributes ? "all" : "half";
}

inline MissingScope parse_scope(std::string_view s) {
    if (s == "all")
        return MissingScope::all_attributes;
    if (s == "half")
        return MissingScope::half_attributes;
    throw ConfigError("unknown scope '" + std::string(s) + "' (expected all|half)");
}

inline constexpr double max_missing_rate = 0.95;

/// Benchmark missing rates; each is applied under both scopes.
inline constexpr std::array<double, 5> standard_levels{0.10, 0.25, 0.30, 0.40, 0.50};

struct InjectionPlan {
    double rate = 0.0;
    MissingScope scope = MissingScope::all_attributes;
    std::uint64_t seed = 0;
    /// Explicit half-scope columns; drawn from `seed` when absent.
    std::optional<std::vector<std::size_t>> half_selection;
    /// Mask exactly round(rate * eligible) cells instead of independent Bernoulli draws.
    bool exact_count = false;

    bool operator==(const InjectionPlan&) const = default;
};

/// Feature columns a plan may mask, ascending.
inline std::vector<std::size_t> eligible_columns(std::size_t num_features, const InjectionPlan& plan) {
    std::vector<std::size_t> cols(num_features);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    if (plan.scope == MissingScope::all_attributes)
        return cols;
    const std::size_t half = num_features / 2;
    if (plan.half_selection) {
        auto sel = *plan.half_selection;
        std::sort(sel.begin(), sel.end());
        if (sel.size() != half || std::adjacent_find(sel.begin(), sel.end()) != sel.end())
            throw ConfigError("half_selection must list " + std::to_string(half) +
                              " distinct columns");
        if (!sel.empty() && sel.back() >= num_features)
            throw ConfigError("half_selection column out of range");
        return sel;
    }
    std::mt19937_64 rng(mix_seed(plan.seed, 1));
    std::shuffle(cols.begin(), cols.end(), rng);
    cols.resize(half);
    std::sort(cols.begin(), cols.end());
    return cols;
}

inline Dataset inject_mcar(const Dataset& data, const InjectionPlan& plan) {
    if (!(plan.rate >= 0.0 && plan.rate <= max_missing_rate))
        throw ConfigError("missing rate " + format_double(plan.rate) + " outside [0, 0.95]");
    auto cols = eligible_columns(data.cols(), plan);
    std::vector<Cell> cells = data.cells();
    const std::size_t m = data.cols();
    std::mt19937_64 rng(mix_seed(plan.seed, 2));

    if (plan.exact_count) {
        std::vector<std::size_t> slots;
        slots.reserve(data.rows() * cols.size());
        for (std::size_t r = 0; r < data.rows(); ++r)
            for (auto c : cols)
                slots.push_back(r * m + c);
        auto k = static_cast<std::size_t>(std::llround(plan.rate * static_cast<double>(slots.size())));
        std::shuffle(slots.begin(), slots.end(), rng);
        for (std::size_t i = 0; i < k; ++i)
            cells[slots[i]].reset();
    } else {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t r = 0; r < data.rows(); ++r)
            for (auto c : cols)
                if (unit(rng) < plan.rate)
                    cells[r * m + c].reset();
    }
    return data.with_cells(std::move(cells));
}

struct GridCell {
    InjectionPlan plan;
    Dataset data;
};

/// Two cells (all, half) per level in level order, preceded by the clean set when requested.
inline std::vector<GridCell> build_test_grid(const Dataset& test, std::span<const double> levels,
                                             std::uint64_t seed, bool include_baseline = false) {
    if (levels.empty())
        throw ConfigError("at least one missingness level is required");
    for (double l : levels)
        if (!(l > 0.0 && l <= max_missing_rate))
            throw ConfigError("missingness level " + format_double(l) + " outside (0, 0.95]");
    std::vector<GridCell> grid;
    if (include_baseline) {
        InjectionPlan clean;
        clean.seed = seed;
        grid.push_back({clean, test});
    }
    std::uint64_t stream = 0;
    for (double level : levels)
        for (auto scope : {MissingScope::all_attributes, MissingScope::half_attributes}) {
            InjectionPlan plan;
            plan.rate = level;
            plan.scope = scope;
            plan.seed = mix_seed(seed, stream++);
            grid.push_back({plan, inject_mcar(test, plan)});
        }
    return grid;
}

inline double measure_missing_rate(const Dataset& data, std::span<const std::size_t> scope) {
    if (scope.empty())
        throw ConfigError("missing-rate scope must be non-empty");
    std::size_t missing = 0;
    for (std::size_t r = 0; r < data.rows(); ++r)
        for (auto c : scope)
            missing += data.cell(r, c) ? 0 : 1;
    return static_cast<double>(missing) / static_cast<double>(data.rows() * scope.size());
}

inline double measure_missing_rate(const Dataset& data) {
    std::vector<std::size_t> all(data.cols());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return measure_missing_rate(data, all);
}

} // namespace ripsel
