#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "ripsel/error.hpp"
#include "ripsel/ripper.hpp"
#include "ripsel/synthetic.hpp"

using namespace ripsel;

namespace {

Dataset one_column(const std::vector<double>& xs, const std::vector<std::size_t>& ys) {
    std::vector<Cell> cells(xs.begin(), xs.end());
    return {synthetic::numbered_schema(1), {"neg", "pos"}, cells, ys};
}

double accuracy(const RuleSet& rs, const Dataset& d) {
    auto pred = classify(rs, d);
    double hits = 0;
    for (std::size_t r = 0; r < d.rows(); ++r)
        hits += pred[r] == d.class_of(r) ? 1 : 0;
    return hits / static_cast<double>(d.rows());
}

Condition cond(std::size_t a, ConditionOp op, double t) { return {a, op, t}; }

} // namespace

TEST(FoilGain, WorkedValue) {
    // 6 * (log2(6/8) - log2(10/20)) = 6 * (-0.415037... + 1)
    const double expected = 6.0 * (std::log2(0.75) + 1.0);
    EXPECT_NEAR(foil_gain(10, 10, 6, 2), expected, 1e-12);
    EXPECT_NEAR(foil_gain(10, 10, 6, 2), 3.5098, 1e-4);
    EXPECT_EQ(foil_gain(10, 10, 0, 5), 0.0);
}

TEST(PruneValue, Substitutions) {
    EXPECT_DOUBLE_EQ(prune_value(6, 2), 0.5);
    EXPECT_DOUBLE_EQ(prune_value(4, 4), 0.0);
    EXPECT_DOUBLE_EQ(prune_value(10, 0), 1.0);
    EXPECT_DOUBLE_EQ(prune_value(0, 0), -1.0);
}

TEST(GrowRule, SeparableOneDimension) {
    auto pos = one_column({5, 6, 7}, {1, 1, 1});
    auto neg = one_column({1, 2, 3}, {0, 0, 0});
    auto rule = grow_rule(pos, neg, 1);
    ASSERT_EQ(rule.conditions.size(), 1u);
    // every midpoint in the gap separates; brute force shows no other threshold reaches gain 3
    double best = 0;
    for (double t : {1.5, 2.5, 4.0, 5.5, 6.5}) {
        double p = 0, n = 0;
        for (double x : {5.0, 6.0, 7.0})
            p += x >= t ? 1 : 0;
        for (double x : {1.0, 2.0, 3.0})
            n += x >= t ? 1 : 0;
        best = std::max(best, foil_gain(3, 3, p, n));
    }
    EXPECT_DOUBLE_EQ(best, 3.0);
    EXPECT_EQ(rule.conditions[0], cond(0, ConditionOp::greater_equal, 4.0));
    for (double x : {1.0, 2.0, 3.0})
        EXPECT_FALSE(rule.covers(std::vector<Cell>{x}));
}

TEST(GrowRule, DuplicatedPointsGiveEmptyRule) {
    auto pos = one_column({1, 2, 3}, {1, 1, 1});
    auto neg = one_column({1, 2, 3}, {0, 0, 0});
    auto rule = grow_rule(pos, neg, 1);
    EXPECT_TRUE(rule.conditions.empty());
    EXPECT_TRUE(rule.covers(std::vector<Cell>{9.0}));
}

TEST(GrowRule, NoSharedAttributeOperatorPair) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto d = synthetic::conjunctive_concept(200, seed);
        std::vector<std::size_t> p, n;
        for (std::size_t r = 0; r < d.rows(); ++r)
            (d.class_of(r) == 1 ? p : n).push_back(r);
        auto rule = grow_rule(d.subset(p), d.subset(n), 1);
        for (std::size_t i = 0; i < rule.conditions.size(); ++i)
            for (std::size_t j = i + 1; j < rule.conditions.size(); ++j)
                EXPECT_FALSE(rule.conditions[i].attribute == rule.conditions[j].attribute &&
                             rule.conditions[i].op == rule.conditions[j].op);
    }
}

TEST(GrowRule, MissingValuesNeverCovered) {
    std::vector<Cell> cells{5.0, 6.0, std::nullopt, 1.0, 2.0, std::nullopt};
    Dataset d(synthetic::numbered_schema(1), {"neg", "pos"}, cells, {1, 1, 1, 0, 0, 0});
    auto rule = grow_rule(d.subset(std::vector<std::size_t>{0, 1, 2}), d.subset(std::vector<std::size_t>{3, 4, 5}), 1);
    ASSERT_EQ(rule.conditions.size(), 1u);
    EXPECT_FALSE(rule.covers(d.row(2)));
    EXPECT_FALSE(rule.covers(d.row(5)));
}

TEST(PruneRule, KeepsBestPrefixAndPrefersShorter) {
    Rule rule{{cond(0, ConditionOp::greater_equal, 2), cond(1, ConditionOp::greater_equal, 2)}, 1};
    // positives all satisfy both; negatives fail the first condition already
    std::vector<Cell> pc{3.0, 3.0, 4.0, 4.0}, nc{1.0, 3.0, 0.0, 5.0};
    Dataset pos(synthetic::numbered_schema(2), {"n", "p"}, pc, {1, 1});
    Dataset neg(synthetic::numbered_schema(2), {"n", "p"}, nc, {0, 0});
    auto pruned = prune_rule(rule, pos, neg);
    ASSERT_EQ(pruned.conditions.size(), 1u);
    EXPECT_EQ(pruned.conditions[0], rule.conditions[0]);
}

TEST(PruneRule, DropsConditionThatHurts) {
    Rule rule{{cond(0, ConditionOp::greater_equal, 2), cond(1, ConditionOp::less_equal, 0)}, 1};
    std::vector<Cell> pc{3.0, 1.0, 4.0, 1.0}, nc{3.0, 5.0};
    Dataset pos(synthetic::numbered_schema(2), {"n", "p"}, pc, {1, 1});
    Dataset neg(synthetic::numbered_schema(2), {"n", "p"}, nc, {0});
    // prefix 1: p=2, n=1 -> v=1/3; full rule: p=0, n=0 -> -1
    auto pruned = prune_rule(rule, pos, neg);
    EXPECT_EQ(pruned.conditions.size(), 1u);
}

TEST(PruneRule, NeverLowersValue) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        auto d = synthetic::conjunctive_concept(60, 100 + trial);
        Rule rule{{}, 1};
        const int len = 1 + static_cast<int>(unit(rng) * 4);
        for (int k = 0; k < len; ++k)
            rule.conditions.push_back(cond(static_cast<std::size_t>(unit(rng) * 6),
                                           unit(rng) < 0.5 ? ConditionOp::less_equal : ConditionOp::greater_equal,
                                           unit(rng)));
        std::vector<std::size_t> p, n;
        for (std::size_t r = 0; r < d.rows(); ++r)
            (d.class_of(r) == 1 ? p : n).push_back(r);
        if (p.empty())
            continue;
        auto pos = d.subset(p), neg = d.subset(n);
        auto v_of = [&](const Rule& r) {
            double cp = 0, cn = 0;
            for (std::size_t i = 0; i < pos.rows(); ++i)
                cp += r.covers(pos.row(i)) ? 1 : 0;
            for (std::size_t i = 0; i < neg.rows(); ++i)
                cn += r.covers(neg.row(i)) ? 1 : 0;
            return prune_value(cp, cn);
        };
        auto pruned = prune_rule(rule, pos, neg);
        EXPECT_GE(v_of(pruned), v_of(rule));
        EXPECT_LE(pruned.conditions.size(), rule.conditions.size());
        for (std::size_t k = 0; k < pruned.conditions.size(); ++k)
            EXPECT_EQ(pruned.conditions[k], rule.conditions[k]);
    }
}

TEST(Induce, ThresholdConcept) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0, 1);
    std::vector<double> xs;
    std::vector<std::size_t> ys;
    for (int i = 0; i < 200; ++i) {
        // values on a 0.05 grid so the grow set sees every gap
        double x = std::round(unit(rng) * 20) / 20;
        xs.push_back(x);
        ys.push_back(x >= 0.5 ? 1 : 0);
    }
    auto d = one_column(xs, ys);
    auto rs = induce(d);
    EXPECT_EQ(accuracy(rs, d), 1.0);
    EXPECT_LE(rs.rules.size(), 2u);
}

TEST(Induce, DefaultIsMostPrevalentClass) {
    auto d = synthetic::conjunctive_concept(300, 4);
    auto counts = d.class_counts();
    auto rs = induce(d);
    EXPECT_EQ(rs.default_class, counts[0] >= counts[1] ? 0u : 1u);
    for (const auto& r : rs.rules) {
        EXPECT_NE(r.target_class, rs.default_class);
        EXPECT_FALSE(r.conditions.empty());
    }
}

TEST(Induce, IndistinguishableClassesGiveDefaultOnly) {
    std::vector<double> xs;
    std::vector<std::size_t> ys;
    for (int i = 0; i < 100; ++i) {
        xs.push_back(i % 2);
        ys.push_back((i / 2) % 10 < 3 ? 1 : 0);
    }
    auto rs = induce(one_column(xs, ys));
    EXPECT_TRUE(rs.rules.empty());
    EXPECT_EQ(rs.default_class, 0u);
}

TEST(Induce, Deterministic) {
    auto d = synthetic::conjunctive_concept(400, 8);
    RipperConfig cfg;
    cfg.seed = 99;
    EXPECT_EQ(induce(d, cfg), induce(d, cfg));
}

TEST(Induce, EveryRuleCoversNewPositives) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto d = synthetic::conjunctive_concept(300, seed);
        auto rs = induce(d);
        std::vector<char> taken(d.rows(), 0);
        for (const auto& rule : rs.rules) {
            std::size_t fresh = 0;
            for (std::size_t r = 0; r < d.rows(); ++r)
                if (!taken[r] && rule.covers(d.row(r))) {
                    fresh += d.class_of(r) == rule.target_class ? 1 : 0;
                    taken[r] = 1;
                }
            EXPECT_GE(fresh, 1u);
        }
    }
}

TEST(Induce, NoiseFreeConjunctionRecovered) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto d = synthetic::conjunctive_concept(500, seed, 6, 20);
        RipperConfig cfg;
        cfg.seed = seed;
        EXPECT_EQ(accuracy(induce(d, cfg), d), 1.0) << "seed " << seed;
    }
}

TEST(Induce, ThreeClasses) {
    std::vector<double> xs;
    std::vector<std::size_t> ys;
    for (int i = 0; i < 90; ++i) {
        xs.push_back(i);
        ys.push_back(i < 10 ? 2 : (i < 40 ? 1 : 0));
    }
    Dataset d(synthetic::numbered_schema(1), {"a", "b", "c"}, std::vector<Cell>(xs.begin(), xs.end()), ys);
    auto rs = induce(d);
    EXPECT_EQ(rs.default_class, 0u);
    ASSERT_FALSE(rs.rules.empty());
    EXPECT_EQ(rs.rules.front().target_class, 2u);
    EXPECT_EQ(accuracy(rs, d), 1.0);
}

TEST(Induce, OptimizePassKeepsAccuracy) {
    auto d = synthetic::conjunctive_concept(300, 12, 6, 20);
    RipperConfig cfg;
    cfg.optimize = true;
    EXPECT_EQ(accuracy(induce(d, cfg), d), 1.0);
}

TEST(Induce, RejectsSingleClassAndBadConfig) {
    auto d = one_column({1, 2, 3}, {0, 0, 0});
    EXPECT_THROW(induce(d), DataError);
    RipperConfig cfg;
    cfg.grow_ratio = 1.0;
    EXPECT_THROW(induce(synthetic::conjunctive_concept(50, 1), cfg), ConfigError);
}

TEST(Classify, DefaultOnly) {
    RuleSet rs{{}, 1};
    EXPECT_EQ(classify(rs, std::vector<Cell>{0.0, 1.0}), 1u);
}

TEST(Classify, MissingAttributeFallsThrough) {
    RuleSet rs{{Rule{{cond(3, ConditionOp::greater_equal, 5)}, 1}}, 0};
    std::vector<Cell> row{1.0, 1.0, 1.0, std::nullopt};
    EXPECT_EQ(classify(rs, row), 0u);
    row[3] = 7.0;
    EXPECT_EQ(classify(rs, row), 1u);
}

TEST(Classify, FirstMatchingRuleWins) {
    RuleSet rs{{Rule{{cond(0, ConditionOp::less_equal, 0)}, 1}, Rule{{cond(1, ConditionOp::greater_equal, 1)}, 2},
                Rule{{cond(1, ConditionOp::greater_equal, 0)}, 1}},
               0};
    EXPECT_EQ(classify(rs, std::vector<Cell>{5.0, 2.0}), 2u);
    EXPECT_EQ(classify(rs, std::vector<Cell>{-1.0, 2.0}), 1u);
}

TEST(Classify, EqualityCondition) {
    Condition c = cond(0, ConditionOp::equal, 3);
    EXPECT_TRUE(c.satisfied_by(3.0));
    EXPECT_FALSE(c.satisfied_by(3.5));
    EXPECT_FALSE(c.satisfied_by(std::nullopt));
}

TEST(Classify, AgreesWithScanOracle) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0, 1);
    RuleSet rs;
    rs.default_class = 0;
    for (int k = 0; k < 6; ++k) {
        Rule r{{}, static_cast<std::size_t>(1 + k % 2)};
        for (int c = 0; c < 2; ++c)
            r.conditions.push_back(cond(static_cast<std::size_t>(unit(rng) * 4),
                                        unit(rng) < 0.5 ? ConditionOp::less_equal : ConditionOp::greater_equal,
                                        unit(rng)));
        rs.rules.push_back(r);
    }
    for (int i = 0; i < 2000; ++i) {
        std::vector<Cell> row(4);
        for (auto& v : row)
            if (unit(rng) > 0.2)
                v = unit(rng);
        std::size_t expected = rs.default_class;
        for (const auto& r : rs.rules) {
            bool all = true;
            for (const auto& c : r.conditions) {
                const auto& v = row[c.attribute];
                const bool ok = v && (c.op == ConditionOp::less_equal ? *v <= c.threshold : *v >= c.threshold);
                all = all && ok;
            }
            if (all) {
                expected = r.target_class;
                break;
            }
        }
        ASSERT_EQ(classify(rs, row), expected);
    }
}

TEST(DescriptionLength, EmptyRulesetOnPureData) {
    auto d = one_column({1, 2, 3, 4}, {0, 0, 0, 0});
    Dataset two(d.schema(), {"neg", "pos"}, d.cells(), d.classes());
    RuleSet rs{{}, 0};
    EXPECT_EQ(theory_bits(rs, two), 0.0);
    EXPECT_NEAR(exception_bits(rs, two), 0.0, 1e-12);
}

TEST(DescriptionLength, RedundantRuleAddsTheory) {
    auto d = synthetic::conjunctive_concept(50, 3);
    RuleSet one{{Rule{{cond(0, ConditionOp::greater_equal, 0.5), cond(1, ConditionOp::greater_equal, 0.5)}, 1}}, 0};
    RuleSet two = one;
    two.rules.push_back(one.rules.front());
    EXPECT_GT(theory_bits(two, d), theory_bits(one, d));
}

TEST(DescriptionLength, ExplicitEncodingComparison) {
    // x >= 5 labels the positives exactly; the extra rule x1 <= 0.2 is noise
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unit(0, 1);
    std::vector<Cell> cells;
    std::vector<std::size_t> ys;
    for (int i = 0; i < 50; ++i) {
        double x = i % 10;
        cells.emplace_back(x);
        cells.emplace_back(unit(rng));
        ys.push_back(x >= 5 ? 1 : 0);
    }
    Dataset d(synthetic::numbered_schema(2), {"neg", "pos"}, cells, ys);
    Rule good{{cond(0, ConditionOp::greater_equal, 4.5)}, 1};
    Rule noise{{cond(1, ConditionOp::less_equal, 0.2)}, 1};
    RuleSet a{{good}, 0}, b{{good, noise}, 0};

    // hand encoding: possible = 2*9 + 2*49 literal slots
    const double literal = std::log2(2.0 * 9 + 2.0 * 49);
    double noise_neg = 0;
    for (std::size_t r = 0; r < d.rows(); ++r)
        if (!good.covers(d.row(r)) && noise.covers(d.row(r)))
            noise_neg += 1;
    auto log2c = [](double n, double k) {
        return (std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1)) / std::log(2.0);
    };
    const double la = literal;
    const double lb = 2 * literal + log2c(25 + noise_neg, noise_neg);
    EXPECT_NEAR(description_length(a, d), la, 1e-9);
    EXPECT_NEAR(description_length(b, d), lb, 1e-9);
    EXPECT_LT(description_length(a, d), description_length(b, d));
}

TEST(RuleSetText, Format) {
    auto schema = synthetic::numbered_schema(2);
    RuleSet rs{{Rule{{cond(0, ConditionOp::less_equal, 1.5), cond(1, ConditionOp::greater_equal, 0.25)}, 1}}, 0};
    EXPECT_EQ(to_text(rs, schema, {"no", "yes"}), "(x0 <= 1.5) and (x1 >= 0.25) => yes\ndefault => no\n");
}

TEST(RuleSetJson, RoundTrip) {
    RuleSet rs{{Rule{{cond(0, ConditionOp::less_equal, 0.1), cond(2, ConditionOp::equal, 3)}, 2},
                Rule{{cond(1, ConditionOp::greater_equal, -1e-17)}, 1}},
               0};
    nlohmann::json j = rs;
    EXPECT_EQ(nlohmann::json::parse(j.dump()).get<RuleSet>(), rs);
    EXPECT_EQ(j.at("default_class"), 0);
}

TEST(RuleRefine, ReplacesSamePair) {
    Rule r{{cond(0, ConditionOp::greater_equal, 1), cond(1, ConditionOp::less_equal, 2)}, 1};
    r.refine(cond(0, ConditionOp::greater_equal, 3));
    ASSERT_EQ(r.conditions.size(), 2u);
    EXPECT_EQ(r.conditions.back(), cond(0, ConditionOp::greater_equal, 3));
    r.refine(cond(0, ConditionOp::less_equal, 9));
    EXPECT_EQ(r.conditions.size(), 3u);
}
