#include "rockmass.h"

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "rockmass/preprocess.hpp"
#include "rockmass/workflows.hpp"
#include "csv_util.hpp"

using rockmass::Error;

namespace {

thread_local std::string g_last_error;

rm_status to_status(int exit_code) {
    switch (exit_code) {
        case 2: return RM_ERR_CONFIG;
        case 3: return RM_ERR_DATA;
        default: return RM_ERR_RUNTIME;
    }
}

template <typename Fn>
rm_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return RM_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return to_status(rockmass::workflows::exit_code_for(e.kind()));
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RM_ERR_RUNTIME;
    }
}

}  // namespace

struct rm_model {
    rockmass::preprocess::Pipeline pipeline;
    std::string document;
};

extern "C" {

const char* rm_version(void) { return "1.0.0"; }

const char* rm_last_error(void) { return g_last_error.c_str(); }

rm_status rm_run_command(const char* command, const char* config_json, const char* out_dir) {
    return guarded([&] {
        if (!command || !out_dir) throw Error("BadConfig", "null argument");
        nlohmann::json config = nlohmann::json::object();
        if (config_json && *config_json) {
            try {
                config = nlohmann::json::parse(config_json);
            } catch (const nlohmann::json::exception& e) {
                throw Error("BadConfig", std::string("invalid configuration JSON: ") + e.what());
            }
        }
        rockmass::workflows::run_command(command, config, out_dir);
    });
}

rm_status rm_model_from_json(const char* json, rm_model** out) {
    return guarded([&] {
        if (!json || !out) throw Error("BadConfig", "null argument");
        auto model = new rm_model;
        try {
            model->pipeline = rockmass::preprocess::Pipeline::deserialize(json);
        } catch (...) {
            delete model;
            throw;
        }
        model->document = model->pipeline.serialize();
        *out = model;
    });
}

rm_status rm_model_load(const char* path, rm_model** out) {
    return guarded([&] {
        if (!path || !out) throw Error("BadConfig", "null argument");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("IoFailure", std::string("cannot read ") + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        auto bytes = buf.str();
        rm_status rc = rm_model_from_json(bytes.c_str(), out);
        if (rc != RM_OK) throw Error("CorruptDocument", g_last_error);
    });
}

void rm_model_free(rm_model* model) { delete model; }

const char* rm_model_json(const rm_model* model) {
    return model ? model->document.c_str() : "";
}

rm_status rm_model_predict_csv(const rm_model* model, const char* sections_csv,
                               const char* predictions_csv) {
    return guarded([&] {
        if (!model || !sections_csv || !predictions_csv)
            throw Error("BadConfig", "null argument");
        std::ifstream in(sections_csv, std::ios::binary);
        if (!in) throw Error("IoFailure", std::string("cannot read ") + sections_csv);
        auto t = rockmass::csv::read_table(in);

        const auto& pipe = model->pipeline;
        const auto& names = pipe.model().feature_names();
        rockmass::DataMatrix x(names, t.rows.size());
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            for (std::size_t c = 0; c < names.size(); ++c)
                x.at(r, c) = rockmass::csv::parse_double(t.cell(r, names[c]), r + 1, names[c]);

        std::ostringstream out;
        bool regression =
            pipe.config().model.task == rockmass::models::Task::Regression;
        if (regression) {
            out << "predicted_log10_q\n";
            for (double v : pipe.predict_value(x)) out << rockmass::format_double(v) << "\n";
        } else {
            const auto& roster = pipe.model().roster();
            out << "predicted_label";
            for (const auto& c : roster) out << ",p_" << c;
            out << "\n";
            auto labels = pipe.predict(x);
            auto proba = pipe.predict_proba(x);
            for (std::size_t r = 0; r < x.n_rows; ++r) {
                out << roster[static_cast<std::size_t>(labels[r])];
                for (double p : proba[r]) out << ',' << rockmass::format_double(p);
                out << "\n";
            }
        }
        std::ofstream dst(predictions_csv, std::ios::binary);
        if (!dst) throw Error("IoFailure", std::string("cannot write ") + predictions_csv);
        dst << out.str();
    });
}

}  // extern "C"
