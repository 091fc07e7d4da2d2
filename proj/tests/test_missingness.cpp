#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "ripsel/error.hpp"
#include "ripsel/missingness.hpp"
#include "ripsel/synthetic.hpp"

using namespace ripsel;

namespace {

Dataset normal_table(std::size_t n, std::size_t m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<Cell> cells;
    std::vector<std::size_t> classes;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c)
            cells.emplace_back(normal(rng));
        classes.push_back(r % 2);
    }
    return {synthetic::numbered_schema(m), {"a", "b"}, cells, classes};
}

InjectionPlan plan(double rate, MissingScope scope, std::uint64_t seed) {
    InjectionPlan p;
    p.rate = rate;
    p.scope = scope;
    p.seed = seed;
    return p;
}

std::size_t untouched_columns(const Dataset& d) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < d.cols(); ++c) {
        bool clean = true;
        for (std::size_t r = 0; r < d.rows(); ++r)
            clean = clean && d.cell(r, c).has_value();
        k += clean ? 1 : 0;
    }
    return k;
}

} // namespace

TEST(InjectMcar, ZeroRateIsIdentity) {
    auto d = normal_table(50, 4, 1);
    EXPECT_EQ(inject_mcar(d, plan(0.0, MissingScope::all_attributes, 9)), d);
}

TEST(InjectMcar, CountWithinBinomialThreeSigma) {
    // n = 1000 cells, p = 0.25: mean 250, sd = sqrt(187.5) = 13.69, 3 sd = 41.1
    auto d = normal_table(100, 10, 2);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto out = inject_mcar(d, plan(0.25, MissingScope::all_attributes, seed));
        EXPECT_GE(out.count_missing(), 209u);
        EXPECT_LE(out.count_missing(), 291u);
    }
}

TEST(InjectMcar, HalfScopeTouchesFloorHalf) {
    auto d = normal_table(400, 10, 3);
    auto p = plan(0.10, MissingScope::half_attributes, 5);
    EXPECT_EQ(eligible_columns(10, p).size(), 5u);
    EXPECT_EQ(untouched_columns(inject_mcar(d, p)), 5u);
    EXPECT_EQ(eligible_columns(11, p).size(), 5u);
}

TEST(InjectMcar, ExplicitHalfSelection) {
    auto d = normal_table(300, 6, 4);
    auto p = plan(0.5, MissingScope::half_attributes, 1);
    p.half_selection = std::vector<std::size_t>{5, 0, 2};
    auto out = inject_mcar(d, p);
    for (std::size_t c : {1u, 3u, 4u})
        EXPECT_EQ(measure_missing_rate(out, std::vector<std::size_t>{c}), 0.0);
    for (std::size_t c : {0u, 2u, 5u})
        EXPECT_GT(measure_missing_rate(out, std::vector<std::size_t>{c}), 0.3);
    p.half_selection = std::vector<std::size_t>{0, 0, 1};
    EXPECT_THROW(inject_mcar(d, p), ConfigError);
    p.half_selection = std::vector<std::size_t>{0, 1};
    EXPECT_THROW(inject_mcar(d, p), ConfigError);
}

TEST(InjectMcar, RateOutsideRangeIsConfigError) {
    auto d = normal_table(10, 2, 5);
    EXPECT_THROW(inject_mcar(d, plan(0.96, MissingScope::all_attributes, 1)), ConfigError);
    EXPECT_THROW(inject_mcar(d, plan(-0.01, MissingScope::all_attributes, 1)), ConfigError);
    EXPECT_NO_THROW(inject_mcar(d, plan(0.95, MissingScope::all_attributes, 1)));
}

TEST(InjectMcar, ComposesOnExistingGaps) {
    auto d = normal_table(200, 5, 6);
    auto once = inject_mcar(d, plan(0.3, MissingScope::all_attributes, 1));
    auto twice = inject_mcar(once, plan(0.3, MissingScope::all_attributes, 2));
    for (std::size_t r = 0; r < d.rows(); ++r) {
        for (std::size_t c = 0; c < d.cols(); ++c) {
            if (!once.cell(r, c)) {
                ASSERT_FALSE(twice.cell(r, c).has_value());
            }
        }
    }
    EXPECT_GT(twice.count_missing(), once.count_missing());
}

TEST(InjectMcar, ExactCountMode) {
    auto d = normal_table(100, 10, 7);
    auto p = plan(0.25, MissingScope::all_attributes, 3);
    p.exact_count = true;
    EXPECT_EQ(inject_mcar(d, p).count_missing(), 250u);
}

TEST(InjectMcar, InputUntouchedAndClassesPreserved) {
    auto d = normal_table(100, 4, 8);
    auto copy = d;
    auto out = inject_mcar(d, plan(0.9, MissingScope::all_attributes, 1));
    EXPECT_EQ(d, copy);
    EXPECT_EQ(out.classes(), d.classes());
}

TEST(InjectMcar, MonotoneInRate) {
    auto d = normal_table(10000, 10, 9);
    std::size_t previous = 0;
    for (double rate : {0.1, 0.25, 0.3, 0.4, 0.5}) {
        auto k = inject_mcar(d, plan(rate, MissingScope::all_attributes, 11)).count_missing();
        EXPECT_GT(k, previous);
        previous = k;
    }
}

TEST(InjectMcar, MaskIndependentOfValues) {
    // masked and observed means of one column agree; pooled standard error ~ 0.005
    double masked_sum = 0, masked_n = 0, kept_sum = 0, kept_n = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto d = normal_table(10000, 1, 100 + seed);
        auto out = inject_mcar(d, plan(0.3, MissingScope::all_attributes, seed));
        for (std::size_t r = 0; r < d.rows(); ++r) {
            if (out.cell(r, 0)) {
                kept_sum += *d.cell(r, 0);
                kept_n += 1;
            } else {
                masked_sum += *d.cell(r, 0);
                masked_n += 1;
            }
        }
    }
    EXPECT_LT(std::abs(masked_sum / masked_n - kept_sum / kept_n), 0.03);
}

TEST(BuildTestGrid, FiveLevelsGiveTenCells) {
    auto d = normal_table(50, 6, 10);
    std::vector<double> levels{0.10, 0.25, 0.30, 0.40, 0.50};
    auto grid = build_test_grid(d, levels, 1);
    ASSERT_EQ(grid.size(), 10u);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_DOUBLE_EQ(grid[i].plan.rate, levels[i / 2]);
        EXPECT_EQ(grid[i].plan.scope, i % 2 == 0 ? MissingScope::all_attributes : MissingScope::half_attributes);
    }
    EXPECT_EQ(build_test_grid(d, levels, 1, true).size(), 11u);
}

TEST(BuildTestGrid, SingleLevelGivesTwoCells) {
    auto d = normal_table(20, 4, 11);
    std::vector<double> levels{0.5};
    EXPECT_EQ(build_test_grid(d, levels, 3).size(), 2u);
}

TEST(BuildTestGrid, DeterministicPerSeed) {
    auto d = normal_table(100, 6, 12);
    std::vector<double> levels{0.1, 0.5};
    auto a = build_test_grid(d, levels, 77);
    auto b = build_test_grid(d, levels, 77);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].plan, b[i].plan);
        EXPECT_EQ(a[i].data, b[i].data);
    }
    auto c = build_test_grid(d, levels, 78);
    EXPECT_NE(a[0].data, c[0].data);
}

TEST(BuildTestGrid, RejectsBadLevels) {
    auto d = normal_table(10, 2, 13);
    EXPECT_THROW(build_test_grid(d, std::vector<double>{}, 1), ConfigError);
    EXPECT_THROW(build_test_grid(d, std::vector<double>{0.0}, 1), ConfigError);
    EXPECT_THROW(build_test_grid(d, std::vector<double>{0.99}, 1), ConfigError);
}

TEST(MeasureMissingRate, CleanDataIsZero) {
    EXPECT_EQ(measure_missing_rate(normal_table(10, 3, 14)), 0.0);
}

TEST(MeasureMissingRate, HalfOverLargeTable) {
    auto d = normal_table(10000, 10, 15);
    auto out = inject_mcar(d, plan(0.5, MissingScope::all_attributes, 4));
    EXPECT_NEAR(measure_missing_rate(out), 0.5, 0.005);
}

TEST(MeasureMissingRate, DisjointScopesCombineByWeight) {
    auto d = normal_table(500, 7, 16);
    auto out = inject_mcar(d, plan(0.4, MissingScope::half_attributes, 5));
    std::vector<std::size_t> left{0, 1, 2}, right{3, 4, 5, 6};
    const double combined = (3 * measure_missing_rate(out, left) + 4 * measure_missing_rate(out, right)) / 7;
    EXPECT_NEAR(combined, measure_missing_rate(out), 1e-12);
    EXPECT_THROW(measure_missing_rate(out, std::vector<std::size_t>{}), ConfigError);
}

TEST(MissingScope, ParseAndPrint) {
    EXPECT_EQ(parse_scope("all"), MissingScope::all_attributes);
    EXPECT_EQ(parse_scope("half"), MissingScope::half_attributes);
    EXPECT_STREQ(to_string(MissingScope::half_attributes), "half");
    EXPECT_THROW(parse_scope("some"), ConfigError);
}
