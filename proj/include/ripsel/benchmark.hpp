#pragma once

// Missingness benchmark: fit each pipeline once on clean training data, evaluate it on
// every injected test set, and aggregate accuracies by level, scope and overall.

#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ripsel/dataset.hpp"
#include "ripsel/error.hpp"
#include "ripsel/missingness.hpp"
#include "ripsel/pipeline.hpp"
#include "ripsel/util.hpp"

namespace ripsel {

struct CellResult {
    std::string pipeline;
    double level = 0.0;
    std::string scope;
    double accuracy = 0.0;
    /// F1 of the least prevalent training class; supplementary.
    double f1 = 0.0;

    bool operator==(const CellResult&) const = default;
};

struct ExperimentReport {
    std::vector<std::string> pipelines;
    std::vector<double> levels;
    std::vector<CellResult> per_cell;
    std::map<std::string, double> overall;
    std::map<std::string, std::map<double, double>> by_level;
    std::map<std::string, std::map<std::string, double>> by_scope;
    /// Clean-test accuracy per pipeline, when requested.
    std::map<std::string, double> baseline;
    std::map<std::string, double> baseline_f1;

    std::uint64_t seed = 0;
    std::string train_name;
    std::string test_name;
    std::size_t n_test = 0;
    std::map<std::string, std::size_t> kept_features;

    bool operator==(const ExperimentReport&) const = default;

    double cell(const std::string& pipeline, double level, const std::string& scope) const {
        for (const auto& c : per_cell)
            if (c.pipeline == pipeline && c.level == level && c.scope == scope)
                return c.accuracy;
        throw ConfigError("no cell for " + pipeline + " at " + format_double(level) + "/" + scope);
    }
};

/// Recomputes overall / by_level / by_scope as arithmetic means of per_cell.
inline void aggregate(ExperimentReport& report) {
    report.overall.clear();
    report.by_level.clear();
    report.by_scope.clear();
    std::map<std::string, std::pair<double, double>> overall;
    std::map<std::string, std::map<double, std::pair<double, double>>> level;
    std::map<std::string, std::map<std::string, std::pair<double, double>>> scope;
    auto add = [](std::pair<double, double>& acc, double v) {
        acc.first += v;
        acc.second += 1.0;
    };
    for (const auto& c : report.per_cell) {
        add(overall[c.pipeline], c.accuracy);
        add(level[c.pipeline][c.level], c.accuracy);
        add(scope[c.pipeline][c.scope], c.accuracy);
    }
    for (const auto& [p, acc] : overall)
        report.overall[p] = acc.first / acc.second;
    for (const auto& [p, m] : level)
        for (const auto& [l, acc] : m)
            report.by_level[p][l] = acc.first / acc.second;
    for (const auto& [p, m] : scope)
        for (const auto& [s, acc] : m)
            report.by_scope[p][s] = acc.first / acc.second;
}

struct BenchOptions {
    bool include_baseline = false;
    std::string train_name = "train";
    std::string test_name = "test";
    /// Evaluate grid cells concurrently; results are identical either way.
    bool parallel = true;
};

namespace detail {

inline std::pair<double, double> accuracy_and_f1(const FittedPipeline& fp, const Dataset& test,
                                                 std::size_t positive) {
    auto pred = classify(fp.rules, rule_view(fp, test));
    double hits = 0, tp = 0, fp_count = 0, fn = 0;
    for (std::size_t r = 0; r < test.rows(); ++r) {
        const bool truth = test.class_of(r) == positive;
        const bool said = pred[r] == positive;
        hits += pred[r] == test.class_of(r) ? 1 : 0;
        tp += truth && said ? 1 : 0;
        fp_count += !truth && said ? 1 : 0;
        fn += truth && !said ? 1 : 0;
    }
    const double f1 = tp > 0 ? 2 * tp / (2 * tp + fp_count + fn) : 0.0;
    return {hits / static_cast<double>(test.rows()), f1};
}

} // namespace detail

inline ExperimentReport run_benchmark(const Dataset& train, const Dataset& test,
                                      const std::vector<Pipeline>& pipelines, const std::vector<double>& levels,
                                      std::uint64_t seed, const BenchOptions& opt = {}) {
    if (pipelines.empty())
        throw ConfigError("benchmark needs at least one pipeline");
    Dataset aligned = test.aligned_to(train);
    if (aligned.empty())
        throw DataError("test set is empty");
    auto grid = build_test_grid(aligned, levels, seed);
    const std::size_t positive = class_prevalence_order(train).front();

    ExperimentReport report;
    report.levels = levels;
    report.seed = seed;
    report.train_name = opt.train_name;
    report.test_name = opt.test_name;
    report.n_test = aligned.rows();

    std::vector<FittedPipeline> fitted;
    for (const auto& p : pipelines) {
        fitted.push_back(fit_pipeline(p, train));
        report.pipelines.push_back(p.name());
        report.kept_features[p.name()] = fitted.back().kept_features();
    }

    for (std::size_t k = 0; k < fitted.size(); ++k) {
        const auto& fp = fitted[k];
        std::vector<std::future<std::pair<double, double>>> jobs;
        for (const auto& cell : grid)
            jobs.push_back(std::async(opt.parallel ? std::launch::async : std::launch::deferred,
                                      [&fp, &cell, positive] { return detail::accuracy_and_f1(fp, cell.data, positive); }));
        for (std::size_t c = 0; c < grid.size(); ++c) {
            auto [acc, f1] = jobs[c].get();
            report.per_cell.push_back({report.pipelines[k], grid[c].plan.rate, to_string(grid[c].plan.scope), acc, f1});
        }
        if (opt.include_baseline) {
            auto [acc, f1] = detail::accuracy_and_f1(fp, aligned, positive);
            report.baseline[report.pipelines[k]] = acc;
            report.baseline_f1[report.pipelines[k]] = f1;
        }
    }
    aggregate(report);
    return report;
}

inline constexpr const char* report_csv_header = "pipeline,level,scope,accuracy,n_test,kept_features,seed,f1";

/// Long-format CSV: grid rows, then per pipeline its by-level, by-scope, overall and
/// baseline rows ("*" marks an aggregated dimension).
inline void write_report_csv(std::ostream& out, const ExperimentReport& r) {
    out << report_csv_header << '\n';
    auto kept = [&](const std::string& p) {
        auto it = r.kept_features.find(p);
        return it == r.kept_features.end() ? std::size_t{0} : it->second;
    };
    auto row = [&](const std::string& p, const std::string& level, const std::string& scope, double acc, double f1) {
        out << p << ',' << level << ',' << scope << ',' << format_double(acc) << ',' << r.n_test << ','
            << kept(p) << ',' << r.seed << ',' << format_double(f1) << '\n';
    };
    for (const auto& c : r.per_cell)
        row(c.pipeline, format_double(c.level), c.scope, c.accuracy, c.f1);
    for (const auto& p : r.pipelines) {
        std::map<double, std::pair<double, double>> f1_level;
        std::map<std::string, std::pair<double, double>> f1_scope;
        double f1_sum = 0.0, f1_n = 0.0;
        for (const auto& c : r.per_cell)
            if (c.pipeline == p) {
                f1_level[c.level].first += c.f1;
                f1_level[c.level].second += 1.0;
                f1_scope[c.scope].first += c.f1;
                f1_scope[c.scope].second += 1.0;
                f1_sum += c.f1;
                f1_n += 1.0;
            }
        if (auto it = r.by_level.find(p); it != r.by_level.end())
            for (const auto& [level, acc] : it->second)
                row(p, format_double(level), "*", acc, f1_level[level].first / f1_level[level].second);
        if (auto it = r.by_scope.find(p); it != r.by_scope.end())
            for (const auto& [scope, acc] : it->second)
                row(p, "*", scope, acc, f1_scope[scope].first / f1_scope[scope].second);
        if (auto it = r.overall.find(p); it != r.overall.end())
            row(p, "*", "*", it->second, f1_n > 0 ? f1_sum / f1_n : 0.0);
        if (auto it = r.baseline.find(p); it != r.baseline.end())
            row(p, "0", "none", it->second, r.baseline_f1.count(p) ? r.baseline_f1.at(p) : 0.0);
    }
}

inline void to_json(nlohmann::json& j, const CellResult& c) {
    j = {{"pipeline", c.pipeline}, {"level", c.level}, {"scope", c.scope}, {"accuracy", c.accuracy}, {"f1", c.f1}};
}

inline void from_json(const nlohmann::json& j, CellResult& c) {
    c.pipeline = j.at("pipeline").get<std::string>();
    c.level = j.at("level").get<double>();
    c.scope = j.at("scope").get<std::string>();
    c.accuracy = j.at("accuracy").get<double>();
    c.f1 = j.at("f1").get<double>();
}

inline void to_json(nlohmann::json& j, const ExperimentReport& r) {
    j = {{"pipelines", r.pipelines},
         {"levels", r.levels},
         {"per_cell", r.per_cell},
         {"overall", r.overall},
         {"by_level", r.by_level},
         {"by_scope", r.by_scope},
         {"baseline", r.baseline},
         {"baseline_f1", r.baseline_f1},
         {"metadata",
          {{"seed", r.seed},
           {"train_name", r.train_name},
           {"test_name", r.test_name},
           {"n_test", r.n_test},
           {"kept_features", r.kept_features}}}};
}

inline void from_json(const nlohmann::json& j, ExperimentReport& r) {
    r.pipelines = j.at("pipelines").get<std::vector<std::string>>();
    r.levels = j.at("levels").get<std::vector<double>>();
    r.per_cell = j.at("per_cell").get<std::vector<CellResult>>();
    r.overall = j.at("overall").get<std::map<std::string, double>>();
    r.by_level = j.at("by_level").get<std::map<std::string, std::map<double, double>>>();
    r.by_scope = j.at("by_scope").get<std::map<std::string, std::map<std::string, double>>>();
    r.baseline = j.at("baseline").get<std::map<std::string, double>>();
    r.baseline_f1 = j.value("baseline_f1", std::map<std::string, double>{});
    const auto& m = j.at("metadata");
    r.seed = m.at("seed").get<std::uint64_t>();
    r.train_name = m.at("train_name").get<std::string>();
    r.test_name = m.at("test_name").get<std::string>();
    r.n_test = m.at("n_test").get<std::size_t>();
    r.kept_features = m.at("kept_features").get<std::map<std::string, std::size_t>>();
}

enum class ReportFormat { csv, json };

inline void write_report(const ExperimentReport& report, const std::string& path, ReportFormat format) {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open report file '" + path + "' for writing");
    if (format == ReportFormat::csv)
        write_report_csv(out, report);
    else
        out << nlohmann::json(report).dump(2) << '\n';
    out.flush();
    if (!out)
        throw DataError("failed writing report file '" + path + "'");
}

inline ExperimentReport read_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open report file '" + path + "'");
    try {
        return nlohmann::json::parse(in).get<ExperimentReport>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed report '" + path + "': " + e.what());
    }
}

} // namespace ripsel
