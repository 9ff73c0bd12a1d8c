// Command-line front end. Talks to the shared library strictly through the
// C API in rockmass.h; all domain logic lives behind it.
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rockmass.h"

namespace {

// Minimal JSON emission for the merged flag config. Values arriving via
// --config are passed through verbatim; flags are spliced in on top.
std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

struct ConfigBuilder {
    std::string file_json;  // raw --config contents, object expected
    std::vector<std::pair<std::string, std::string>> overrides;  // key -> raw JSON value

    void set_string(const std::string& key, const std::string& value) {
        // inline JSON objects pass through (model specs), plain strings get quoted
        if (!value.empty() && (value.front() == '{' || value.front() == '['))
            overrides.emplace_back(key, value);
        else
            overrides.emplace_back(key, "\"" + json_escape(value) + "\"");
    }
    void set_raw(const std::string& key, const std::string& raw) {
        overrides.emplace_back(key, raw);
    }

    std::string build() const {
        std::string body = file_json;
        // strip the braces of the file object so overrides can be appended
        auto first = body.find('{');
        auto last = body.rfind('}');
        std::string inner;
        if (first != std::string::npos && last != std::string::npos && last > first)
            inner = body.substr(first + 1, last - first - 1);
        // trim whitespace
        while (!inner.empty() && (inner.back() == ' ' || inner.back() == '\n' ||
                                  inner.back() == '\t' || inner.back() == '\r'))
            inner.pop_back();
        std::string out = "{";
        out += inner;
        for (const auto& [key, value] : overrides) {
            if (out.size() > 1 && out.back() != '{' && out.back() != ',') out += ',';
            out += "\"" + json_escape(key) + "\":" + value;
        }
        out += "}";
        return out;
    }
};

int fail_usage(const std::string& message) {
    std::fprintf(stderr, "{\"kind\":\"BadConfig\",\"message\":\"%s\"}\n",
                 json_escape(message).c_str());
    return 2;
}

int run(const char* command, const ConfigBuilder& cb, const std::string& out_dir) {
    if (out_dir.empty()) return fail_usage("--out is required");
    std::string config = cb.build();
    rm_status rc = rm_run_command(command, config.c_str(), out_dir.c_str());
    if (rc != RM_OK) {
        std::string msg = rm_last_error();
        std::string kind = "Runtime";
        auto colon = msg.find(": ");
        if (colon != std::string::npos) {
            kind = msg.substr(0, colon);
            msg = msg.substr(colon + 2);
        }
        std::fprintf(stderr, "{\"kind\":\"%s\",\"message\":\"%s\"}\n",
                     json_escape(kind).c_str(), json_escape(msg).c_str());
    }
    return static_cast<int>(rc);
}

bool load_config_file(const std::string& path, ConfigBuilder& cb, std::string& err) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        err = "cannot read config file " + path;
        return false;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    cb.file_json = buf.str();
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MWD section features, Q-system labels and rock-class models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rm_version()));

    struct Common {
        std::string config_path, out_dir;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> grouping, feature_set, model, scaler, balance, outliers, task;
        std::optional<int> cv_folds;
        std::optional<double> test_fraction;
    };

    auto add_common = [](CLI::App* cmd, Common& c, bool with_pipeline) {
        cmd->add_option("--config", c.config_path, "JSON config file; flags override it");
        cmd->add_option("--out", c.out_dir, "output directory")->required();
        cmd->add_option("--seed", c.seed, "random seed");
        if (with_pipeline) {
            cmd->add_option("--grouping", c.grouping, "class grouping scheme name");
            cmd->add_option("--feature-set", c.feature_set,
                            "all51|domain35|automated21|dependent39|mwdonly48|mwdmedian8");
            cmd->add_option("--model", c.model, "model kind or inline JSON spec");
            cmd->add_option("--scaler", c.scaler, "none|minmax|standard");
            cmd->add_option("--balance", c.balance, "none|smote");
            cmd->add_option("--outliers", c.outliers, "none|mad|isolation_forest|both");
            cmd->add_option("--cv-folds", c.cv_folds, "folds for cross-validation");
            cmd->add_option("--test-fraction", c.test_fraction, "holdout fraction");
            cmd->add_option("--task", c.task, "classification|regression");
        }
    };

    auto apply_common = [](const Common& c, ConfigBuilder& cb) -> std::optional<std::string> {
        if (!c.config_path.empty()) {
            std::string err;
            if (!load_config_file(c.config_path, cb, err)) return err;
        }
        if (c.seed) cb.set_raw("seed", std::to_string(*c.seed));
        if (c.grouping) cb.set_string("grouping", *c.grouping);
        if (c.feature_set) cb.set_string("feature_set", *c.feature_set);
        if (c.model) cb.set_string("model", *c.model);
        if (c.scaler) cb.set_string("scaler", *c.scaler);
        if (c.balance) cb.set_string("balance", *c.balance);
        if (c.outliers) cb.set_string("outliers", *c.outliers);
        if (c.task) cb.set_string("task", *c.task);
        if (c.cv_folds) cb.set_raw("cv_folds", std::to_string(*c.cv_folds));
        if (c.test_fraction) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", *c.test_fraction);
            cb.set_raw("test_fraction", buf);
        }
        return std::nullopt;
    };

    // synth
    Common synth_c;
    std::optional<int> synth_rounds, holes, readings;
    std::optional<double> p_stay, noise, smoothing;
    auto* synth = app.add_subcommand("synth", "generate a synthetic tunnel dataset");
    add_common(synth, synth_c, false);
    synth->add_option("--rounds", synth_rounds, "number of blasting rounds");
    synth->add_option("--p-stay", p_stay, "class self-transition probability");
    synth->add_option("--noise-scale", noise, "per-class parameter spread multiplier");
    synth->add_option("--smoothing-width", smoothing, "boundary blend width in metres");
    synth->add_option("--holes-per-round", holes, "drillholes per round");
    synth->add_option("--readings-per-metre", readings, "MWD readings per metre");

    // ingest / aggregate
    Common ingest_c, agg_c;
    std::string ingest_drill, ingest_rounds, agg_drill, agg_rounds;
    auto* ingest = app.add_subcommand("ingest", "validate and normalize raw CSVs");
    add_common(ingest, ingest_c, false);
    ingest->add_option("--drillholes", ingest_drill, "drillholes.csv path");
    ingest->add_option("--rounds", ingest_rounds, "rounds.csv path");
    auto* aggregate = app.add_subcommand("aggregate", "build 1 m section features");
    add_common(aggregate, agg_c, false);
    aggregate->add_option("--drillholes", agg_drill, "drillholes.csv path");
    aggregate->add_option("--rounds", agg_rounds, "rounds.csv path");

    // train / cv / tune
    Common train_c, cv_c, tune_c;
    std::string train_sections, cv_sections, tune_sections;
    std::optional<int> tune_trials;
    std::optional<std::string> tune_sampler, tune_objective;
    auto* train = app.add_subcommand("train", "fit a pipeline and score the holdout");
    add_common(train, train_c, true);
    train->add_option("--sections", train_sections, "sections.csv path");
    auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
    add_common(cv, cv_c, true);
    cv->add_option("--sections", cv_sections, "sections.csv path");
    auto* tune = app.add_subcommand("tune", "hyperparameter search");
    add_common(tune, tune_c, true);
    tune->add_option("--sections", tune_sections, "sections.csv path");
    tune->add_option("--trials", tune_trials, "number of trials");
    tune->add_option("--sampler", tune_sampler, "random|tpe_lite");
    tune->add_option("--objective", tune_objective, "balanced_accuracy|precision_macro|r2");

    // predict / report
    Common pred_c, report_c;
    std::string pred_model, pred_sections;
    std::string rep_sections, rep_metrics, rep_predictions, rep_parallel;
    auto* predict = app.add_subcommand("predict", "predict sections with a saved model");
    add_common(predict, pred_c, false);
    predict->add_option("--model", pred_model, "model.json path");
    predict->add_option("--sections", pred_sections, "sections.csv path (labels ignored)");
    auto* report = app.add_subcommand("report", "render plots and CSV twins");
    add_common(report, report_c, false);
    report->add_option("--sections", rep_sections, "sections.csv for the Q histogram");
    report->add_option("--metrics", rep_metrics, "metrics.json for the confusion triptych");
    report->add_option("--predictions", rep_predictions, "predictions.csv for scatter/QQ");
    report->add_option("--parallel-coordinates", rep_parallel, "parallel_coordinates.json");

    CLI11_PARSE(app, argc, argv);

    auto finish = [&](const char* name, Common& c,
                      const std::vector<std::pair<std::string, std::string>>& strings,
                      const std::vector<std::pair<std::string, std::string>>& raws) {
        ConfigBuilder cb;
        if (auto err = apply_common(c, cb)) return fail_usage(*err);
        for (const auto& [k, v] : strings)
            if (!v.empty()) cb.set_string(k, v);
        for (const auto& [k, v] : raws)
            if (!v.empty()) cb.set_raw(k, v);
        return run(name, cb, c.out_dir);
    };

    if (synth->parsed()) {
        std::vector<std::pair<std::string, std::string>> raws;
        auto raw = [&](const char* k, auto& opt) {
            if (opt) raws.emplace_back(k, [&] {
                std::ostringstream s;
                s << *opt;
                return s.str();
            }());
        };
        raw("rounds", synth_rounds);
        raw("p_stay", p_stay);
        raw("noise_scale", noise);
        raw("smoothing_width_m", smoothing);
        raw("holes_per_round", holes);
        raw("readings_per_metre", readings);
        return finish("synth", synth_c, {}, raws);
    }
    if (ingest->parsed())
        return finish("ingest", ingest_c,
                      {{"drillholes", ingest_drill}, {"rounds", ingest_rounds}}, {});
    if (aggregate->parsed())
        return finish("aggregate", agg_c, {{"drillholes", agg_drill}, {"rounds", agg_rounds}},
                      {});
    if (train->parsed()) return finish("train", train_c, {{"sections", train_sections}}, {});
    if (cv->parsed()) return finish("cv", cv_c, {{"sections", cv_sections}}, {});
    if (tune->parsed()) {
        std::vector<std::pair<std::string, std::string>> strings = {{"sections", tune_sections}};
        if (tune_sampler) strings.emplace_back("sampler", *tune_sampler);
        if (tune_objective) strings.emplace_back("objective", *tune_objective);
        std::vector<std::pair<std::string, std::string>> raws;
        if (tune_trials) raws.emplace_back("trials", std::to_string(*tune_trials));
        return finish("tune", tune_c, strings, raws);
    }
    if (predict->parsed())
        return finish("predict", pred_c, {{"model", pred_model}, {"sections", pred_sections}},
                      {});
    if (report->parsed())
        return finish("report", report_c,
                      {{"sections", rep_sections},
                       {"metrics", rep_metrics},
                       {"predictions", rep_predictions},
                       {"parallel_coordinates", rep_parallel}},
                      {});
    return fail_usage("no command given");
}
