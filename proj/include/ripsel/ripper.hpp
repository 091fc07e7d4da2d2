#pragma once

// RIPPER decision-list learner: per-class IREP grow/prune loops with FOIL-gain growing,
// (p - n) / (p + n) pruning, error-rate rejection and a description-length stop.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ripsel/dataset.hpp"
#include "ripsel/error.hpp"
#include "ripsel/util.hpp"

namespace ripsel {

enum class ConditionOp { less_equal, greater_equal, equal };

inline const char* to_string(ConditionOp op) {
    switch (op) {
    case ConditionOp::less_equal: return "<=";
    case ConditionOp::greater_equal: return ">=";
    case ConditionOp::equal: return "=";
    }
    return "?";
}

inline ConditionOp parse_condition_op(std::string_view s) {
    if (s == "<=")
        return ConditionOp::less_equal;
    if (s == ">=")
        return ConditionOp::greater_equal;
    if (s == "=")
        return ConditionOp::equal;
    throw DataError("unknown condition operator '" + std::string(s) + "'");
}

struct Condition {
    std::size_t attribute = 0;
    ConditionOp op = ConditionOp::less_equal;
    double threshold = 0.0;

    /// A missing value never satisfies a condition.
    bool satisfied_by(const Cell& value) const {
        if (!value)
            return false;
        switch (op) {
        case ConditionOp::less_equal: return *value <= threshold;
        case ConditionOp::greater_equal: return *value >= threshold;
        case ConditionOp::equal: return *value == threshold;
        }
        return false;
    }

    bool operator==(const Condition&) const = default;
};

struct Rule {
    std::vector<Condition> conditions;
    std::size_t target_class = 0;

    bool covers(std::span<const Cell> row) const {
        return std::all_of(conditions.begin(), conditions.end(),
                           [&](const Condition& c) { return c.satisfied_by(row[c.attribute]); });
    }

    /// Adds `c`, replacing an existing condition on the same (attribute, operator) pair.
    void refine(const Condition& c) {
        std::erase_if(conditions, [&](const Condition& old) {
            return old.attribute == c.attribute && old.op == c.op;
        });
        conditions.push_back(c);
    }

    bool operator==(const Rule&) const = default;
};

struct RuleSet {
    std::vector<Rule> rules;
    std::size_t default_class = 0;

    bool operator==(const RuleSet&) const = default;
};

struct RipperConfig {
    double grow_ratio = 2.0 / 3.0;
    /// Slack d (bits) over the best description length before a class loop stops.
    double mdl_slack_bits = 64.0;
    double rule_error_threshold = 0.5;
    std::uint64_t seed = 1;
    /// Replacement/revision optimization rounds after each class loop.
    bool optimize = false;

    void validate() const {
        if (!(grow_ratio > 0.0 && grow_ratio < 1.0))
            throw ConfigError("grow_ratio must lie in (0, 1)");
        if (!(mdl_slack_bits > 0.0))
            throw ConfigError("mdl_slack_bits must be positive");
        if (!(rule_error_threshold > 0.0 && rule_error_threshold <= 1.0))
            throw ConfigError("rule_error_threshold must lie in (0, 1]");
    }
};

/// FOIL information gain of refining coverage (p0, n0) to (p1, n1).
inline double foil_gain(double p0, double n0, double p1, double n1) {
    if (p1 <= 0.0 || p0 <= 0.0)
        return 0.0;
    return p1 * (std::log2(p1 / (p1 + n1)) - std::log2(p0 / (p0 + n0)));
}

/// Pruning metric v = (p - n) / (p + n); -1 when nothing is covered.
inline double prune_value(double p, double n) {
    if (p + n <= 0.0)
        return -1.0;
    return (p - n) / (p + n);
}

inline std::size_t classify(const RuleSet& rs, std::span<const Cell> row) {
    for (const auto& r : rs.rules)
        if (r.covers(row))
            return r.target_class;
    return rs.default_class;
}

inline std::vector<std::size_t> classify(const RuleSet& rs, const Dataset& data) {
    std::vector<std::size_t> out(data.rows());
    for (std::size_t r = 0; r < data.rows(); ++r)
        out[r] = classify(rs, data.row(r));
    return out;
}

namespace detail {

using Ids = std::vector<std::size_t>;

inline Ids covered_by(const Rule& rule, const Dataset& d, std::span<const std::size_t> ids) {
    Ids out;
    for (auto i : ids)
        if (rule.covers(d.row(i)))
            out.push_back(i);
    return out;
}

inline std::size_t count_covered(const Rule& rule, const Dataset& d, std::span<const std::size_t> ids) {
    std::size_t k = 0;
    for (auto i : ids)
        k += rule.covers(d.row(i)) ? 1 : 0;
    return k;
}

inline bool any_covers(std::span<const Rule> rules, std::span<const Cell> row) {
    return std::any_of(rules.begin(), rules.end(), [&](const Rule& r) { return r.covers(row); });
}

struct Candidate {
    Condition condition;
    double gain = 0.0;
};

/// Best single condition over the currently covered instances. Thresholds are midpoints
/// between consecutive distinct values; instances missing the attribute count for neither side.
inline std::optional<Candidate> best_condition(const Dataset& d, std::span<const std::size_t> pos,
                                               std::span<const std::size_t> neg) {
    const double p0 = static_cast<double>(pos.size());
    const double n0 = static_cast<double>(neg.size());
    std::optional<Candidate> best;
    auto consider = [&](std::size_t attr, ConditionOp op, double thr, double p1, double n1) {
        double g = foil_gain(p0, n0, p1, n1);
        if (g > 1e-12 && (!best || g > best->gain + 1e-12))
            best = Candidate{{attr, op, thr}, g};
    };

    std::vector<std::pair<double, bool>> values;
    for (std::size_t a = 0; a < d.cols(); ++a) {
        values.clear();
        for (auto i : pos)
            if (const auto& c = d.cell(i, a))
                values.emplace_back(*c, true);
        for (auto i : neg)
            if (const auto& c = d.cell(i, a))
                values.emplace_back(*c, false);
        if (values.empty())
            continue;
        std::sort(values.begin(), values.end());
        double total_p = 0.0, total_n = 0.0;
        for (const auto& [v, is_pos] : values)
            (is_pos ? total_p : total_n) += 1.0;

        const bool categorical = d.schema()[a].kind == AttributeKind::categorical_numeric;
        double cum_p = 0.0, cum_n = 0.0;
        for (std::size_t k = 0; k < values.size();) {
            const double v = values[k].first;
            double grp_p = 0.0, grp_n = 0.0;
            while (k < values.size() && values[k].first == v) {
                (values[k].second ? grp_p : grp_n) += 1.0;
                ++k;
            }
            cum_p += grp_p;
            cum_n += grp_n;
            if (categorical)
                consider(a, ConditionOp::equal, v, grp_p, grp_n);
            if (k < values.size()) {
                const double thr = v + (values[k].first - v) / 2.0;
                consider(a, ConditionOp::less_equal, thr, cum_p, cum_n);
                consider(a, ConditionOp::greater_equal, thr, total_p - cum_p, total_n - cum_n);
            }
        }
    }
    return best;
}

inline Rule grow_rule(const Dataset& d, std::span<const std::size_t> pos, std::span<const std::size_t> neg,
                      std::size_t target, Rule start = {}) {
    start.target_class = target;
    Ids cov_pos = covered_by(start, d, pos);
    Ids cov_neg = covered_by(start, d, neg);
    while (!cov_neg.empty() && !cov_pos.empty()) {
        auto cand = best_condition(d, cov_pos, cov_neg);
        if (!cand)
            break;
        start.refine(cand->condition);
        cov_pos = covered_by(start, d, cov_pos);
        cov_neg = covered_by(start, d, cov_neg);
    }
    return start;
}

/// Index of the first condition `row` fails, or conditions.size() if it passes all.
inline std::size_t first_failure(const Rule& rule, std::span<const Cell> row) {
    for (std::size_t k = 0; k < rule.conditions.size(); ++k) {
        const auto& c = rule.conditions[k];
        if (!c.satisfied_by(row[c.attribute]))
            return k;
    }
    return rule.conditions.size();
}

/// Coverage counts of every prefix length 0..L; prefix L covers a row iff first_failure >= L.
inline std::vector<double> prefix_coverage(const Rule& rule, const Dataset& d,
                                           std::span<const std::size_t> ids) {
    const std::size_t len = rule.conditions.size();
    std::vector<double> fail_at(len + 1, 0.0);
    for (auto i : ids)
        fail_at[first_failure(rule, d.row(i))] += 1.0;
    std::vector<double> covered(len + 1, 0.0);
    double acc = 0.0;
    for (std::size_t L = len + 1; L-- > 0;) {
        acc += fail_at[L];
        covered[L] = acc;
    }
    return covered;
}

/// Shortest prefix length maximizing (p - n) / (p + n) given per-prefix coverage counts.
inline std::size_t best_prefix(std::span<const double> p, std::span<const double> n) {
    std::size_t best_len = p.size() - 1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t L = 1; L < p.size(); ++L) {
        double v = prune_value(p[L], n[L]);
        if (v > best_v) {
            best_v = v;
            best_len = L;
        }
    }
    return best_len;
}

inline Rule prune_rule(Rule rule, const Dataset& d, std::span<const std::size_t> pos,
                       std::span<const std::size_t> neg) {
    if (rule.conditions.empty())
        return rule;
    auto p = prefix_coverage(rule, d, pos);
    auto n = prefix_coverage(rule, d, neg);
    rule.conditions.resize(best_prefix(p, n));
    return rule;
}

inline double log2_binomial(double n, double k) {
    if (k <= 0.0 || k >= n)
        return 0.0;
    return (std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) / std::log(2.0);
}

/// Bits to name one literal among `possible` candidate conditions.
inline double literal_bits(double possible) { return std::log2(std::max(possible, 2.0)); }

/// Description length of a binary (target vs rest) rule list over pos/neg.
inline double binary_description_length(std::span<const Rule> rules, const Dataset& d,
                                        std::span<const std::size_t> pos,
                                        std::span<const std::size_t> neg, double possible) {
    double theory = 0.0;
    for (const auto& r : rules)
        theory += static_cast<double>(r.conditions.size()) * literal_bits(possible);
    double cov_p = 0.0, cov_n = 0.0;
    for (auto i : pos)
        cov_p += any_covers(rules, d.row(i)) ? 1.0 : 0.0;
    for (auto i : neg)
        cov_n += any_covers(rules, d.row(i)) ? 1.0 : 0.0;
    const double covered = cov_p + cov_n;
    const double uncovered = static_cast<double>(pos.size() + neg.size()) - covered;
    const double fn = static_cast<double>(pos.size()) - cov_p;
    return theory + log2_binomial(covered, cov_n) + log2_binomial(uncovered, fn);
}

} // namespace detail

/// Number of distinct candidate conditions the data admits: two threshold tests per gap
/// between distinct values, plus one equality test per value of categorical attributes.
inline double possible_conditions(const Dataset& d) {
    double total = 0.0;
    std::vector<double> values;
    for (std::size_t a = 0; a < d.cols(); ++a) {
        values.clear();
        for (std::size_t r = 0; r < d.rows(); ++r)
            if (const auto& c = d.cell(r, a))
                values.push_back(*c);
        std::sort(values.begin(), values.end());
        auto distinct = static_cast<double>(std::unique(values.begin(), values.end()) - values.begin());
        total += 2.0 * std::max(distinct - 1.0, 0.0);
        if (d.schema()[a].kind == AttributeKind::categorical_numeric)
            total += distinct;
    }
    return total;
}

inline double theory_bits(const RuleSet& rs, const Dataset& data) {
    const double bits = detail::literal_bits(possible_conditions(data));
    double total = 0.0;
    for (const auto& r : rs.rules)
        total += static_cast<double>(r.conditions.size()) * bits;
    return total;
}

/// Binomial coding of the decision list's errors among covered and uncovered rows.
inline double exception_bits(const RuleSet& rs, const Dataset& data) {
    double covered = 0.0, fp = 0.0, uncovered = 0.0, fn = 0.0;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        auto row = data.row(r);
        auto it = std::find_if(rs.rules.begin(), rs.rules.end(), [&](const Rule& rule) { return rule.covers(row); });
        if (it != rs.rules.end()) {
            covered += 1.0;
            fp += it->target_class != data.class_of(r) ? 1.0 : 0.0;
        } else {
            uncovered += 1.0;
            fn += rs.default_class != data.class_of(r) ? 1.0 : 0.0;
        }
    }
    return detail::log2_binomial(covered, fp) + detail::log2_binomial(uncovered, fn);
}

inline double description_length(const RuleSet& rs, const Dataset& data) {
    return theory_bits(rs, data) + exception_bits(rs, data);
}

namespace detail {

inline Ids minus_covered(std::span<const Rule> rules, const Dataset& d, std::span<const std::size_t> ids) {
    Ids out;
    for (auto i : ids)
        if (!any_covers(rules, d.row(i)))
            out.push_back(i);
    return out;
}

inline IndexSplit split_plain(std::span<const std::size_t> ids, double ratio, std::uint64_t seed) {
    return split_indices(ids, {}, 0, ratio, seed, false);
}

/// Error rate n / (p + n) on the pruning sets, falling back to the growing sets when the
/// rule covers nothing there.
inline double rule_error_rate(const Rule& rule, const Dataset& d, const IndexSplit& pos,
                              const IndexSplit& neg) {
    double p = static_cast<double>(count_covered(rule, d, pos.prune));
    double n = static_cast<double>(count_covered(rule, d, neg.prune));
    if (p + n == 0.0) {
        p = static_cast<double>(count_covered(rule, d, pos.grow));
        n = static_cast<double>(count_covered(rule, d, neg.grow));
    }
    return p + n == 0.0 ? 1.0 : n / (p + n);
}

/// IREP loop for one class, extending `rules` until positives run out or a stop fires.
inline void cover_class(std::vector<Rule>& rules, const Dataset& d, std::span<const std::size_t> pos,
                        std::span<const std::size_t> neg, std::size_t target, const RipperConfig& cfg,
                        double possible, std::uint64_t seed) {
    Ids uncovered = minus_covered(rules, d, pos);
    double min_dl = binary_description_length(rules, d, pos, neg, possible);
    for (std::uint64_t iter = 0; !uncovered.empty(); ++iter) {
        const std::uint64_t s = mix_seed(seed, iter);
        auto pos_split = split_plain(uncovered, cfg.grow_ratio, mix_seed(s, 0));
        auto neg_split = split_plain(neg, cfg.grow_ratio, mix_seed(s, 1));
        Rule rule = grow_rule(d, pos_split.grow, neg_split.grow, target);
        if (rule.conditions.empty())
            break;
        rule = prune_rule(rule, d, pos_split.prune, neg_split.prune);
        if (rule_error_rate(rule, d, pos_split, neg_split) > cfg.rule_error_threshold)
            break;
        rules.push_back(std::move(rule));
        uncovered = minus_covered(std::span(&rules.back(), 1), d, uncovered);
        const double dl = binary_description_length(rules, d, pos, neg, possible);
        if (dl > min_dl + cfg.mdl_slack_bits)
            break;
        min_dl = std::min(min_dl, dl);
    }
}

/// Prunes `rule` (suffix deletion) to minimize errors of the whole list on the pruning data.
inline Rule prune_in_context(Rule rule, std::vector<Rule> list, std::size_t slot, const Dataset& d,
                             std::span<const std::size_t> pos, std::span<const std::size_t> neg) {
    std::size_t best_len = rule.conditions.size();
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t L = 1; L <= rule.conditions.size(); ++L) {
        Rule cand = rule;
        cand.conditions.resize(L);
        list[slot] = cand;
        double err = 0.0;
        for (auto i : pos)
            err += any_covers(list, d.row(i)) ? 0.0 : 1.0;
        for (auto i : neg)
            err += any_covers(list, d.row(i)) ? 1.0 : 0.0;
        if (err < best_err) {
            best_err = err;
            best_len = L;
        }
    }
    rule.conditions.resize(best_len);
    return rule;
}

/// One replacement/revision round over the class's rules, then re-cover leftovers.
inline void optimize_class(std::vector<Rule>& rules, const Dataset& d, std::span<const std::size_t> pos,
                           std::span<const std::size_t> neg, std::size_t target, const RipperConfig& cfg,
                           double possible, std::uint64_t seed) {
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const std::uint64_t s = mix_seed(seed, i);
        auto pos_split = split_plain(pos, cfg.grow_ratio, mix_seed(s, 0));
        auto neg_split = split_plain(neg, cfg.grow_ratio, mix_seed(s, 1));

        Rule replacement = grow_rule(d, pos_split.grow, neg_split.grow, target);
        Rule revision = grow_rule(d, pos_split.grow, neg_split.grow, target, rules[i]);
        std::vector<Rule> best_list = rules;
        double best_dl = binary_description_length(rules, d, pos, neg, possible);
        for (Rule* cand : {&replacement, &revision}) {
            if (cand->conditions.empty())
                continue;
            Rule pruned = prune_in_context(*cand, rules, i, d, pos_split.prune, neg_split.prune);
            auto variant = rules;
            variant[i] = std::move(pruned);
            double dl = binary_description_length(variant, d, pos, neg, possible);
            if (dl < best_dl) {
                best_dl = dl;
                best_list = std::move(variant);
            }
        }
        rules = std::move(best_list);
    }
    cover_class(rules, d, pos, neg, target, cfg, possible, mix_seed(seed, 0xC0FFEE));
}

} // namespace detail

/// Greedy FOIL-gain growth of a rule for `target` on the union of the two growing sets.
inline Rule grow_rule(const Dataset& grow_pos, const Dataset& grow_neg, std::size_t target) {
    if (grow_pos.empty())
        throw DataError("grow_rule needs at least one positive instance");
    if (grow_neg.empty())
        return Rule{{}, target};
    std::vector<Cell> cells = grow_pos.cells();
    cells.insert(cells.end(), grow_neg.cells().begin(), grow_neg.cells().end());
    std::vector<std::size_t> classes = grow_pos.classes();
    classes.insert(classes.end(), grow_neg.classes().begin(), grow_neg.classes().end());
    Dataset all(grow_pos.schema(), grow_pos.class_labels(), std::move(cells), std::move(classes));
    std::vector<std::size_t> pos(grow_pos.rows()), neg(grow_neg.rows());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    std::iota(neg.begin(), neg.end(), grow_pos.rows());
    return detail::grow_rule(all, pos, neg, target);
}

/// Keeps the prefix of `rule` maximizing (p - n) / (p + n) on the pruning sets.
inline Rule prune_rule(const Rule& rule, const Dataset& prune_pos, const Dataset& prune_neg) {
    if (rule.conditions.empty())
        throw ConfigError("prune_rule needs a non-empty rule");
    std::vector<std::size_t> all_pos(prune_pos.rows()), all_neg(prune_neg.rows());
    std::iota(all_pos.begin(), all_pos.end(), std::size_t{0});
    std::iota(all_neg.begin(), all_neg.end(), std::size_t{0});
    auto p = detail::prefix_coverage(rule, prune_pos, all_pos);
    auto n = detail::prefix_coverage(rule, prune_neg, all_neg);
    Rule out = rule;
    out.conditions.resize(detail::best_prefix(p, n));
    return out;
}

inline RuleSet induce(const Dataset& train, const RipperConfig& cfg = {}) {
    cfg.validate();
    auto counts = train.class_counts();
    if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2)
        throw DataError("induction needs at least two classes present in the training data");
    auto order = class_prevalence_order(counts);
    const double possible = possible_conditions(train);

    RuleSet rs;
    rs.default_class = order.back();
    std::vector<char> alive(train.rows(), 1);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::size_t target = order[k];
        detail::Ids pos, neg;
        for (std::size_t r = 0; r < train.rows(); ++r) {
            if (!alive[r])
                continue;
            (train.class_of(r) == target ? pos : neg).push_back(r);
        }
        if (pos.empty())
            continue;
        std::vector<Rule> rules;
        const std::uint64_t class_seed = mix_seed(cfg.seed, target);
        detail::cover_class(rules, train, pos, neg, target, cfg, possible, class_seed);
        if (cfg.optimize && !rules.empty())
            detail::optimize_class(rules, train, pos, neg, target, cfg, possible, mix_seed(class_seed, 7));
        rs.rules.insert(rs.rules.end(), rules.begin(), rules.end());
        for (auto r : pos)
            alive[r] = 0;
    }
    return rs;
}

inline std::string format_rule_conditions(const Rule& rule, const std::vector<AttributeSpec>& schema) {
    std::string out;
    for (std::size_t k = 0; k < rule.conditions.size(); ++k) {
        const auto& c = rule.conditions[k];
        if (k)
            out += " and ";
        out += "(" + schema.at(c.attribute).name + " " + to_string(c.op) + " " + format_double(c.threshold) + ")";
    }
    return out;
}

/// One rule per line, `(a <= t) and (b >= u) => class`, closed by `default => class`.
inline std::string to_text(const RuleSet& rs, const std::vector<AttributeSpec>& schema,
                           const std::vector<std::string>& labels) {
    std::ostringstream out;
    for (const auto& r : rs.rules)
        out << format_rule_conditions(r, schema) << " => " << labels.at(r.target_class) << '\n';
    out << "default => " << labels.at(rs.default_class) << '\n';
    return out.str();
}

inline void to_json(nlohmann::json& j, const Condition& c) {
    j = {{"attribute", c.attribute}, {"op", to_string(c.op)}, {"threshold", c.threshold}};
}

inline void from_json(const nlohmann::json& j, Condition& c) {
    c.attribute = j.at("attribute").get<std::size_t>();
    c.op = parse_condition_op(j.at("op").get<std::string>());
    c.threshold = j.at("threshold").get<double>();
}

inline void to_json(nlohmann::json& j, const Rule& r) {
    j = {{"class", r.target_class}, {"conditions", r.conditions}};
}

inline void from_json(const nlohmann::json& j, Rule& r) {
    r.target_class = j.at("class").get<std::size_t>();
    r.conditions = j.at("conditions").get<std::vector<Condition>>();
}

inline void to_json(nlohmann::json& j, const RuleSet& rs) {
    j = {{"rules", rs.rules}, {"default_class", rs.default_class}};
}

inline void from_json(const nlohmann::json& j, RuleSet& rs) {
    rs.rules = j.at("rules").get<std::vector<Rule>>();
    rs.default_class = j.at("default_class").get<std::size_t>();
}

} // namespace ripsel
