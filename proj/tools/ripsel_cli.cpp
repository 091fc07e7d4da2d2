#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ripsel/ripsel.hpp"

using namespace ripsel;
using nlohmann::json;

namespace {

constexpr int exit_config = 1;
constexpr int exit_data = 2;
constexpr int exit_numeric = 3;

struct Settings {
    std::uint64_t seed = 1;
    CsvOptions csv;
    RipperConfig ripper;
    PcaConfig pca;
    ArdConfig ard;
    std::vector<std::string> pipelines{"ripper", "pca_rip", "ard_rip"};
    std::vector<double> levels{standard_levels.begin(), standard_levels.end()};
    synthetic::BenchmarkShape shape;
};

json csv_json(const CsvOptions& c) {
    json j = {{"delimiter", std::string(1, c.delimiter)},
              {"missing_marker", c.missing_marker},
              {"class_column", c.class_column},
              {"drop_columns", c.drop_columns},
              {"categorical_columns", c.categorical_columns},
              {"class_labels", c.class_labels},
              {"skip_rows", c.skip_rows}};
    j["max_rows"] = c.max_rows ? json(*c.max_rows) : json(nullptr);
    return j;
}

void read_csv_json(const json& j, CsvOptions& c) {
    auto delim = j.value("delimiter", std::string(1, c.delimiter));
    if (delim.size() != 1)
        throw ConfigError("csv.delimiter must be a single character");
    c.delimiter = delim[0];
    c.missing_marker = j.value("missing_marker", c.missing_marker);
    c.class_column = j.value("class_column", c.class_column);
    c.drop_columns = j.value("drop_columns", c.drop_columns);
    c.categorical_columns = j.value("categorical_columns", c.categorical_columns);
    c.class_labels = j.value("class_labels", c.class_labels);
    c.skip_rows = j.value("skip_rows", c.skip_rows);
    if (j.contains("max_rows") && !j["max_rows"].is_null())
        c.max_rows = j["max_rows"].get<std::size_t>();
}

json settings_json(const Settings& s) {
    const auto& sh = s.shape;
    return {{"seed", s.seed},
            {"csv", csv_json(s.csv)},
            {"ripper", s.ripper},
            {"pca", {{"standardize", s.pca.standardize}}},
            {"ard",
             {{"n_hidden", s.ard.n_hidden},
              {"n_groups", s.ard.n_groups},
              {"threshold", s.ard.threshold},
              {"train", s.ard.train}}},
            {"pipelines", s.pipelines},
            {"levels", s.levels},
            {"synthetic",
             {{"n_train", sh.n_train},
              {"n_test", sh.n_test},
              {"n_features", sh.n_features},
              {"n_informative", sh.n_informative},
              {"n_factors", sh.n_factors},
              {"feature_noise", sh.feature_noise},
              {"label_noise", sh.label_noise},
              {"cutoff", sh.cutoff}}}};
}

void load_config(const std::string& path, Settings& s) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed config '" + path + "': " + e.what());
    }
    try {
        s.seed = j.value("seed", s.seed);
        if (j.contains("csv"))
            read_csv_json(j["csv"], s.csv);
        if (j.contains("ripper"))
            s.ripper = j["ripper"].get<RipperConfig>();
        if (j.contains("pca"))
            s.pca.standardize = j["pca"].value("standardize", s.pca.standardize);
        if (j.contains("ard")) {
            const auto& a = j["ard"];
            s.ard.n_hidden = a.value("n_hidden", s.ard.n_hidden);
            s.ard.n_groups = a.value("n_groups", s.ard.n_groups);
            s.ard.threshold = a.value("threshold", s.ard.threshold);
            if (a.contains("train"))
                s.ard.train = a["train"].get<TrainConfig>();
        }
        s.pipelines = j.value("pipelines", s.pipelines);
        s.levels = j.value("levels", s.levels);
        if (j.contains("synthetic")) {
            const auto& y = j["synthetic"];
            auto& sh = s.shape;
            sh.n_train = y.value("n_train", sh.n_train);
            sh.n_test = y.value("n_test", sh.n_test);
            sh.n_features = y.value("n_features", sh.n_features);
            sh.n_informative = y.value("n_informative", sh.n_informative);
            sh.n_factors = y.value("n_factors", sh.n_factors);
            sh.feature_noise = y.value("feature_noise", sh.feature_noise);
            sh.label_noise = y.value("label_noise", sh.label_noise);
            sh.cutoff = y.value("cutoff", sh.cutoff);
        }
    } catch (const json::exception& e) {
        throw ConfigError("bad value in config '" + path + "': " + e.what());
    }
}

Pipeline make_pipeline(const std::string& kind, const Settings& s) {
    Pipeline p = Pipeline::make(parse_pipeline_kind(kind), s.ripper);
    if (p.pca)
        p.pca = s.pca;
    if (p.ard)
        p.ard = s.ard;
    return p;
}

Dataset load(const std::string& path, const CsvOptions& opt) { return load_csv(path, opt); }

FittedPipeline read_model(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open model '" + path + "'");
    try {
        return json::parse(in).get<FittedPipeline>();
    } catch (const json::exception& e) {
        throw DataError("malformed model '" + path + "': " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out)
        throw DataError("failed writing '" + path + "'");
}

void print_relevance(const std::vector<AttributeSpec>& schema, const std::vector<ArdModel>& models) {
    std::cout << "attribute,relevance,alpha,kept\n";
    for (const auto& m : models)
        for (std::size_t k = 0; k < m.attributes.size(); ++k) {
            const auto col = m.attributes[k];
            const bool kept = std::find(m.kept.begin(), m.kept.end(), col) != m.kept.end();
            const auto name = col < schema.size() ? schema[col].name : std::to_string(col);
            std::cout << name << ',' << format_double(m.relevance(static_cast<Eigen::Index>(k))) << ','
                      << format_double(m.alphas(static_cast<Eigen::Index>(k))) << ',' << (kept ? 1 : 0) << '\n';
        }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rule induction with PCA and ARD feature selection under test-time missingness"};
    app.require_subcommand(1);
    app.fallthrough();

    Settings s;
    std::string config_path;
    std::optional<std::uint64_t> seed_flag;
    app.add_option("--config", config_path, "JSON config; keys mirror `ripsel defaults`");
    app.add_option("--seed", seed_flag, "Master seed for splits, injection, training and synthetic data");

    std::optional<std::string> class_column, missing_marker;
    std::optional<char> delimiter;
    std::vector<std::string> categorical, dropped;
    auto add_csv_flags = [&](CLI::App* sub) {
        sub->add_option("--class-column", class_column, "Class column name (default: last column)");
        sub->add_option("--missing", missing_marker, "Missing-value marker");
        sub->add_option("--delimiter", delimiter, "Field delimiter");
        sub->add_option("--categorical", categorical, "Columns holding numeric category codes")->delimiter(',');
        sub->add_option("--drop", dropped, "Columns to ignore")->delimiter(',');
    };

    std::string train_path, test_path, model_path, out_path, in_path, pipeline_kind = "ripper";
    std::optional<std::size_t> train_rows, test_skip;

    auto* defaults_cmd = app.add_subcommand("defaults", "Print the full default config as JSON");

    auto* train_cmd = app.add_subcommand("train", "Fit one pipeline and save it as JSON");
    train_cmd->add_option("--pipeline", pipeline_kind, "ripper | pca_rip | ard_rip")->capture_default_str();
    train_cmd->add_option("--train", train_path, "Training CSV")->required();
    train_cmd->add_option("--train-rows", train_rows, "Use only the first N data rows");
    train_cmd->add_option("--model", model_path, "Output model JSON")->required();
    add_csv_flags(train_cmd);

    auto* eval_cmd = app.add_subcommand("evaluate", "Accuracy of a saved model on a CSV");
    eval_cmd->add_option("--model", model_path, "Model JSON")->required();
    eval_cmd->add_option("--test", test_path, "Test CSV")->required();
    eval_cmd->add_option("--test-skip", test_skip, "Skip the first N data rows");
    add_csv_flags(eval_cmd);

    double rate = 0.0;
    std::string scope = "all";
    auto* inject_cmd = app.add_subcommand("inject", "Write a copy of a CSV with MCAR missing cells");
    inject_cmd->add_option("--rate", rate, "Missing fraction in [0, 0.95]")->required();
    inject_cmd->add_option("--scope", scope, "all | half")->capture_default_str();
    inject_cmd->add_option("--in", in_path, "Input CSV")->required();
    inject_cmd->add_option("--out", out_path, "Output CSV")->required();
    add_csv_flags(inject_cmd);

    std::string format = "csv";
    std::vector<std::string> pipelines_flag;
    std::vector<double> levels_flag;
    bool baseline = false;
    auto* bench_cmd = app.add_subcommand("bench", "Missingness grid benchmark; synthetic data without --train");
    bench_cmd->add_option("--train", train_path, "Training CSV");
    bench_cmd->add_option("--test", test_path, "Test CSV (defaults to the training file with --test-skip)");
    bench_cmd->add_option("--train-rows", train_rows, "Use only the first N training rows");
    bench_cmd->add_option("--test-skip", test_skip, "Skip the first N test rows");
    bench_cmd->add_option("--pipelines", pipelines_flag, "Subset of ripper,pca_rip,ard_rip")->delimiter(',');
    bench_cmd->add_option("--levels", levels_flag, "Missing rates")->delimiter(',');
    bench_cmd->add_option("--out", out_path, "Report path (stdout if absent)");
    bench_cmd->add_option("--format", format, "csv | json")->capture_default_str();
    bench_cmd->add_flag("--baseline", baseline, "Also report clean-test accuracy");
    add_csv_flags(bench_cmd);

    bool as_json = false;
    auto* rules_cmd = app.add_subcommand("inspect-rules", "Print the rule set of a saved model");
    rules_cmd->add_option("--model", model_path, "Model JSON")->required();
    rules_cmd->add_flag("--json", as_json, "Emit JSON instead of text");

    auto* rel_cmd = app.add_subcommand("inspect-relevance", "Per-attribute ARD relevance of a saved model");
    rel_cmd->add_option("--model", model_path, "ard_rip model or `ard` output JSON")->required();

    std::optional<std::size_t> hidden, epochs, groups;
    std::optional<double> threshold;
    auto* ard_cmd = app.add_subcommand("ard", "Train ARD networks and report relevance");
    ard_cmd->add_option("--train", train_path, "Training CSV")->required();
    ard_cmd->add_option("--train-rows", train_rows, "Use only the first N data rows");
    ard_cmd->add_option("--hidden", hidden, "Hidden units");
    ard_cmd->add_option("--epochs", epochs, "Training epochs");
    ard_cmd->add_option("--groups", groups, "Attribute groups, one network each");
    ard_cmd->add_option("--threshold", threshold, "Relevance threshold");
    ard_cmd->add_option("--out", out_path, "Save models as JSON");
    add_csv_flags(ard_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (!config_path.empty())
            load_config(config_path, s);
        if (seed_flag)
            s.seed = *seed_flag;
        s.ripper.seed = s.seed;
        s.ard.train.seed = s.seed;
        if (class_column)
            s.csv.class_column = *class_column;
        if (missing_marker)
            s.csv.missing_marker = *missing_marker;
        if (delimiter)
            s.csv.delimiter = *delimiter;
        if (!categorical.empty())
            s.csv.categorical_columns = categorical;
        if (!dropped.empty())
            s.csv.drop_columns = dropped;
        if (hidden)
            s.ard.n_hidden = *hidden;
        if (epochs)
            s.ard.train.epochs = *epochs;
        if (groups)
            s.ard.n_groups = *groups;
        if (threshold)
            s.ard.threshold = *threshold;
        if (!pipelines_flag.empty())
            s.pipelines = pipelines_flag;
        if (!levels_flag.empty())
            s.levels = levels_flag;

        CsvOptions train_csv = s.csv;
        if (train_rows)
            train_csv.max_rows = *train_rows;
        CsvOptions test_csv = s.csv;
        if (test_skip)
            test_csv.skip_rows = *test_skip;

        if (*defaults_cmd) {
            std::cout << settings_json(s).dump(2) << '\n';
        } else if (*train_cmd) {
            auto fp = fit_pipeline(make_pipeline(pipeline_kind, s), load(train_path, train_csv));
            write_text(model_path, json(fp).dump(2) + "\n");
            std::cerr << fp.pipeline.name() << ": " << fp.rules.rules.size() << " rules over "
                      << fp.kept_features() << " features\n";
        } else if (*eval_cmd) {
            auto fp = read_model(model_path);
            test_csv.class_labels = fp.class_labels;
            const double acc = evaluate(fp, load(test_path, test_csv));
            std::cout << "accuracy," << format_double(acc) << '\n';
        } else if (*inject_cmd) {
            auto data = load(in_path, s.csv);
            InjectionPlan plan;
            plan.rate = rate;
            plan.scope = parse_scope(scope);
            plan.seed = s.seed;
            auto out = inject_mcar(data, plan);
            std::ostringstream text;
            write_csv(text, out, s.csv.delimiter, s.csv.missing_marker);
            write_text(out_path, text.str());
            std::cerr << "realized rate " << format_double(measure_missing_rate(out, eligible_columns(out.cols(), plan)))
                      << '\n';
        } else if (*bench_cmd) {
            std::vector<Pipeline> pipelines;
            for (const auto& k : s.pipelines)
                pipelines.push_back(make_pipeline(k, s));
            BenchOptions opt;
            opt.include_baseline = baseline;
            Dataset train, test;
            if (train_path.empty()) {
                if (!test_path.empty())
                    throw ConfigError("--test needs --train");
                std::tie(train, test) = synthetic::benchmark_split(s.shape, s.seed);
                opt.train_name = "synthetic-train";
                opt.test_name = "synthetic-test";
            } else {
                train = load(train_path, train_csv);
                test_csv.class_labels = train.class_labels();
                test = load(test_path.empty() ? train_path : test_path, test_csv);
                opt.train_name = train_path;
                opt.test_name = test_path.empty() ? train_path : test_path;
            }
            if (format != "csv" && format != "json")
                throw ConfigError("--format must be csv or json");
            auto report = run_benchmark(train, test, pipelines, s.levels, s.seed, opt);
            std::ostringstream text;
            if (format == "csv")
                write_report_csv(text, report);
            else
                text << json(report).dump(2) << '\n';
            write_text(out_path, text.str());
        } else if (*rules_cmd) {
            auto fp = read_model(model_path);
            if (as_json)
                std::cout << json(fp.rules).dump(2) << '\n';
            else
                std::cout << rules_text(fp);
        } else if (*rel_cmd) {
            std::ifstream in(model_path);
            if (!in)
                throw DataError("cannot open model '" + model_path + "'");
            json j;
            try {
                j = json::parse(in);
                if (j.contains("pipeline")) {
                    auto fp = j.get<FittedPipeline>();
                    if (fp.ard_models.empty())
                        throw DataError("model '" + model_path + "' has no ARD networks");
                    print_relevance(fp.input_schema, fp.ard_models);
                } else {
                    print_relevance(j.at("schema").get<std::vector<AttributeSpec>>(),
                                    j.at("models").get<std::vector<ArdModel>>());
                }
            } catch (const json::exception& e) {
                throw DataError("malformed model '" + model_path + "': " + e.what());
            }
        } else if (*ard_cmd) {
            auto fp = fit_pipeline(make_pipeline("ard_rip", s), load(train_path, train_csv));
            print_relevance(fp.input_schema, fp.ard_models);
            std::cerr << "kept " << fp.kept_attributes.size() << " of " << fp.input_schema.size() << " attributes\n";
            if (!out_path.empty())
                write_text(out_path, json{{"schema", fp.input_schema},
                                          {"models", fp.ard_models},
                                          {"kept_attributes", fp.kept_attributes}}
                                             .dump(2) + "\n");
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    return EXIT_SUCCESS;
}
