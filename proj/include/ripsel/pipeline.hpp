#pragma once

// The three classifiers compared by the benchmark: plain Ripper, Ripper on the
// Kaiser-selected principal components (PCA-Rip), and Ripper on the attributes an
// ARD network keeps (ARD-Rip).

#include <algorithm>
#include <future>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ripsel/ard.hpp"
#include "ripsel/dataset.hpp"
#include "ripsel/error.hpp"
#include "ripsel/pca.hpp"
#include "ripsel/ripper.hpp"

namespace ripsel {

enum class PipelineKind { ripper, pca_rip, ard_rip };

inline const char* to_string(PipelineKind k) {
    switch (k) {
    case PipelineKind::ripper: return "ripper";
    case PipelineKind::pca_rip: return "pca_rip";
    case PipelineKind::ard_rip: return "ard_rip";
    }
    return "?";
}

inline PipelineKind parse_pipeline_kind(std::string_view s) {
    if (s == "ripper")
        return PipelineKind::ripper;
    if (s == "pca_rip")
        return PipelineKind::pca_rip;
    if (s == "ard_rip")
        return PipelineKind::ard_rip;
    throw ConfigError("unknown pipeline '" + std::string(s) + "' (expected ripper|pca_rip|ard_rip)");
}

struct PcaConfig {
    bool standardize = true;
};

struct ArdConfig {
    std::size_t n_hidden = 8;
    std::size_t n_groups = 1;
    double threshold = 0.01;
    TrainConfig train;
};

struct Pipeline {
    PipelineKind kind = PipelineKind::ripper;
    RipperConfig ripper;
    std::optional<PcaConfig> pca;
    std::optional<ArdConfig> ard;

    static Pipeline make(PipelineKind kind, RipperConfig ripper = {}) {
        Pipeline p{kind, ripper, std::nullopt, std::nullopt};
        if (kind == PipelineKind::pca_rip)
            p.pca = PcaConfig{};
        if (kind == PipelineKind::ard_rip)
            p.ard = ArdConfig{};
        return p;
    }

    std::string name() const { return to_string(kind); }

    void validate() const {
        ripper.validate();
        if (pca.has_value() != (kind == PipelineKind::pca_rip))
            throw ConfigError("PCA settings are required for, and only for, pca_rip");
        if (ard.has_value() != (kind == PipelineKind::ard_rip))
            throw ConfigError("ARD settings are required for, and only for, ard_rip");
        if (ard) {
            ard->train.validate();
            if (ard->n_hidden < 1 || ard->n_groups < 1)
                throw ConfigError("ARD needs n_hidden >= 1 and n_groups >= 1");
            if (!(ard->threshold >= 0.0))
                throw ConfigError("ARD threshold must be non-negative");
        }
    }
};

struct FittedPipeline {
    Pipeline pipeline;
    RuleSet rules;
    std::optional<PcaModel> pca;
    std::vector<ArdModel> ard_models;
    /// Surviving input columns for ard_rip (all columns for ripper, none for pca_rip).
    std::vector<std::size_t> kept_attributes;

    std::vector<AttributeSpec> input_schema;
    std::vector<std::string> class_labels;
    std::string class_name;
    /// Attributes the rule set refers to.
    std::vector<AttributeSpec> rule_schema;

    std::size_t kept_features() const { return rule_schema.size(); }
};

namespace detail {

inline std::vector<AttributeSpec> component_schema(std::size_t k) {
    std::vector<AttributeSpec> schema;
    for (std::size_t i = 0; i < k; ++i)
        schema.push_back({"PC" + std::to_string(i + 1), AttributeKind::continuous, i});
    return schema;
}

inline Dataset component_dataset(const PcaModel& model, const Dataset& data) {
    Eigen::MatrixXd t = transform(model, data);
    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(t.size()));
    for (Eigen::Index r = 0; r < t.rows(); ++r)
        for (Eigen::Index c = 0; c < t.cols(); ++c)
            cells.emplace_back(t(r, c));
    return {component_schema(model.kept), data.class_labels(), std::move(cells), data.classes(), data.class_name()};
}

} // namespace detail

/// The dataset the fitted rule set classifies: raw, component-space, or column-selected.
inline Dataset rule_view(const FittedPipeline& fp, const Dataset& data) {
    switch (fp.pipeline.kind) {
    case PipelineKind::ripper: return data;
    case PipelineKind::pca_rip: return detail::component_dataset(*fp.pca, data);
    case PipelineKind::ard_rip: return data.select_columns(fp.kept_attributes);
    }
    return data;
}

inline FittedPipeline fit_pipeline(const Pipeline& pipeline, const Dataset& train) {
    pipeline.validate();
    FittedPipeline fp;
    fp.pipeline = pipeline;
    fp.input_schema = train.schema();
    fp.class_labels = train.class_labels();
    fp.class_name = train.class_name();

    switch (pipeline.kind) {
    case PipelineKind::ripper:
        fp.kept_attributes.resize(train.cols());
        std::iota(fp.kept_attributes.begin(), fp.kept_attributes.end(), std::size_t{0});
        break;
    case PipelineKind::pca_rip:
        fp.pca = fit_pca(mean_filled_matrix(train), pipeline.pca->standardize);
        break;
    case PipelineKind::ard_rip: {
        const auto& cfg = *pipeline.ard;
        const std::size_t positive = class_prevalence_order(train).front();
        auto groups = split_attribute_groups(train.cols(), cfg.n_groups);
        // Groups train independently; results are collected in group order.
        std::vector<std::future<ArdModel>> jobs;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            TrainConfig tc = cfg.train;
            tc.seed = mix_seed(cfg.train.seed, g);
            jobs.push_back(std::async(std::launch::async, [&train, &groups, &cfg, positive, tc, g] {
                return train_ard(train, groups[g], cfg.n_hidden, positive, tc);
            }));
        }
        for (auto& job : jobs) {
            fp.ard_models.push_back(job.get());
            auto& model = fp.ard_models.back();
            model.kept = select_attributes(model, cfg.threshold);
            fp.kept_attributes.insert(fp.kept_attributes.end(), model.kept.begin(), model.kept.end());
        }
        std::sort(fp.kept_attributes.begin(), fp.kept_attributes.end());
        break;
    }
    }
    Dataset view = rule_view(fp, train);
    fp.rule_schema = view.schema();
    fp.rules = induce(view, pipeline.ripper);
    return fp;
}

inline std::vector<std::size_t> predict(const FittedPipeline& fp, const Dataset& data) {
    Dataset aligned = data.aligned_to(fp.input_schema, fp.class_labels, fp.class_name);
    return classify(fp.rules, rule_view(fp, aligned));
}

/// Fraction of rows whose predicted class equals the true class.
inline double evaluate(const FittedPipeline& fp, const Dataset& test) {
    Dataset aligned = test.aligned_to(fp.input_schema, fp.class_labels, fp.class_name);
    if (aligned.empty())
        throw DataError("cannot evaluate on an empty test set");
    auto pred = classify(fp.rules, rule_view(fp, aligned));
    std::size_t hits = 0;
    for (std::size_t r = 0; r < aligned.rows(); ++r)
        hits += pred[r] == aligned.class_of(r) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(aligned.rows());
}

inline std::string rules_text(const FittedPipeline& fp) {
    return to_text(fp.rules, fp.rule_schema, fp.class_labels);
}

inline void to_json(nlohmann::json& j, const AttributeSpec& a) {
    j = {{"name", a.name}, {"kind", to_string(a.kind)}, {"index", a.index}};
}

inline void from_json(const nlohmann::json& j, AttributeSpec& a) {
    a.name = j.at("name").get<std::string>();
    a.kind = j.at("kind").get<std::string>() == "categorical" ? AttributeKind::categorical_numeric
                                                              : AttributeKind::continuous;
    a.index = j.at("index").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const RipperConfig& c) {
    j = {{"grow_ratio", c.grow_ratio},
         {"mdl_slack_bits", c.mdl_slack_bits},
         {"rule_error_threshold", c.rule_error_threshold},
         {"seed", c.seed},
         {"optimize", c.optimize}};
}

inline void from_json(const nlohmann::json& j, RipperConfig& c) {
    RipperConfig d;
    c.grow_ratio = j.value("grow_ratio", d.grow_ratio);
    c.mdl_slack_bits = j.value("mdl_slack_bits", d.mdl_slack_bits);
    c.rule_error_threshold = j.value("rule_error_threshold", d.rule_error_threshold);
    c.seed = j.value("seed", d.seed);
    c.optimize = j.value("optimize", d.optimize);
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"epochs", c.epochs},         {"learning_rate", c.learning_rate}, {"momentum", c.momentum},
         {"evidence_period", c.evidence_period}, {"seed", c.seed},        {"init_scale", c.init_scale},
         {"alpha_init", c.alpha_init}, {"alpha_clip", {c.alpha_min, c.alpha_max}}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    TrainConfig d;
    c.epochs = j.value("epochs", d.epochs);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.momentum = j.value("momentum", d.momentum);
    c.evidence_period = j.value("evidence_period", d.evidence_period);
    c.seed = j.value("seed", d.seed);
    c.init_scale = j.value("init_scale", d.init_scale);
    c.alpha_init = j.value("alpha_init", d.alpha_init);
    c.alpha_min = j.value("alpha_min", d.alpha_min);
    c.alpha_max = j.value("alpha_max", d.alpha_max);
    if (j.contains("alpha_clip")) {
        const auto& clip = j.at("alpha_clip");
        if (!clip.is_array() || clip.size() != 2)
            throw ConfigError("alpha_clip must be [alpha_min, alpha_max]");
        c.alpha_min = clip[0].get<double>();
        c.alpha_max = clip[1].get<double>();
    }
}

inline void to_json(nlohmann::json& j, const Pipeline& p) {
    j = {{"kind", p.name()}, {"ripper", p.ripper}};
    if (p.pca)
        j["pca"] = {{"standardize", p.pca->standardize}};
    if (p.ard)
        j["ard"] = {{"n_hidden", p.ard->n_hidden},
                    {"n_groups", p.ard->n_groups},
                    {"threshold", p.ard->threshold},
                    {"train", p.ard->train}};
}

inline void from_json(const nlohmann::json& j, Pipeline& p) {
    p = Pipeline::make(parse_pipeline_kind(j.at("kind").get<std::string>()));
    if (j.contains("ripper"))
        p.ripper = j.at("ripper").get<RipperConfig>();
    if (p.pca && j.contains("pca"))
        p.pca->standardize = j.at("pca").value("standardize", true);
    if (p.ard && j.contains("ard")) {
        const auto& a = j.at("ard");
        p.ard->n_hidden = a.value("n_hidden", p.ard->n_hidden);
        p.ard->n_groups = a.value("n_groups", p.ard->n_groups);
        p.ard->threshold = a.value("threshold", p.ard->threshold);
        if (a.contains("train"))
            p.ard->train = a.at("train").get<TrainConfig>();
    }
}

inline void to_json(nlohmann::json& j, const FittedPipeline& fp) {
    j = {{"pipeline", fp.pipeline},
         {"rules", fp.rules},
         {"kept_attributes", fp.kept_attributes},
         {"input_schema", fp.input_schema},
         {"rule_schema", fp.rule_schema},
         {"class_labels", fp.class_labels},
         {"class_name", fp.class_name}};
    if (fp.pca)
        j["pca"] = *fp.pca;
    if (!fp.ard_models.empty())
        j["ard"] = fp.ard_models;
}

inline void from_json(const nlohmann::json& j, FittedPipeline& fp) {
    fp.pipeline = j.at("pipeline").get<Pipeline>();
    fp.rules = j.at("rules").get<RuleSet>();
    fp.kept_attributes = j.at("kept_attributes").get<std::vector<std::size_t>>();
    fp.input_schema = j.at("input_schema").get<std::vector<AttributeSpec>>();
    fp.rule_schema = j.at("rule_schema").get<std::vector<AttributeSpec>>();
    fp.class_labels = j.at("class_labels").get<std::vector<std::string>>();
    fp.class_name = j.at("class_name").get<std::string>();
    if (j.contains("pca"))
        fp.pca = j.at("pca").get<PcaModel>();
    if (j.contains("ard"))
        fp.ard_models = j.at("ard").get<std::vector<ArdModel>>();
    if (fp.pipeline.kind == PipelineKind::pca_rip && !fp.pca)
        throw DataError("pca_rip model file lacks its PCA model");
}

} // namespace ripsel
