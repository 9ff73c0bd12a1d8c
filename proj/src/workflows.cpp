#include "rockmass/workflows.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "rockmass/dataset.hpp"
#include "rockmass/eval.hpp"
#include "rockmass/features.hpp"
#include "rockmass/preprocess.hpp"
#include "rockmass/synth.hpp"
#include "rockmass/tuning.hpp"
#include "csv_util.hpp"

namespace rockmass::workflows {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoFailure", "cannot write " + path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoFailure", "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string require_string(const json& config, const char* key) {
    if (!config.contains(key))
        throw Error("BadConfig", std::string("missing required key: ") + key);
    return config.at(key).get<std::string>();
}

// Resolved configuration echoed into the output directory; replaying it
// reproduces every artifact byte for byte (out_dir itself stays outside).
void write_run_config(const std::string& command, const json& config,
                      const std::string& out_dir) {
    json doc = {{"command", command}, {"config", config}};
    write_file((fs::path(out_dir) / "run_config.json").string(), doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// shared pieces

models::ModelSpec model_spec_from_config(const json& config, models::Task task) {
    models::ModelSpec spec;
    if (config.contains("model")) {
        const auto& m = config.at("model");
        if (m.is_string())
            spec.kind = models::kind_from_name(m.get<std::string>());
        else
            spec = models::ModelSpec::from_json(m);
    }
    spec.task = task;
    return spec;
}

preprocess::PipelineConfig pipeline_from_config(const json& config, models::Task task) {
    preprocess::PipelineConfig pc;
    if (config.contains("outliers")) {
        const auto& o = config.at("outliers");
        pc.outliers = o.is_string() ? preprocess::OutlierConfig::from_json(json{{"kind", o}})
                                    : preprocess::OutlierConfig::from_json(o);
    }
    pc.scaler = preprocess::scaler_from_name(config.value("scaler", "none"));
    std::string balance = config.value("balance", "none");
    if (balance == "smote")
        pc.balance = preprocess::BalanceKind::Smote;
    else if (balance != "none")
        throw Error("BadConfig", "unknown balance mode: " + balance);
    pc.smote_k = config.value("smote_k", 5);
    pc.model = model_spec_from_config(config, task);
    pc.seed = config.value("seed", std::uint64_t{0});
    return pc;
}

qsystem::GroupingScheme grouping_from_config(const json& config) {
    std::string name = config.value("grouping", "A,B,C,D,E1,E2");
    if (config.contains("grouping_file")) {
        auto schemes =
            qsystem::schemes_from_json(read_file(config.at("grouping_file").get<std::string>()));
        for (const auto& s : schemes)
            if (s.name == name) return s;
        throw Error("UnknownScheme", name + " not found in grouping file");
    }
    return qsystem::scheme_by_name(name);
}

struct LabeledTable {
    DataMatrix x;
    std::vector<int> y;                 // classification
    std::vector<double> y_log;          // regression target log10(Q)
    std::vector<std::string> roster;
    std::vector<std::size_t> rows;      // indices into the source table
};

// Sections to a modeling table: feature-set selection, grouped labels (DROP
// rows excluded) and the log-space regression target.
LabeledTable build_table(const features::SectionTable& sections, const json& config) {
    auto scheme = grouping_from_config(config);
    auto kind = features::feature_set_from_name(config.value("feature_set", "all51"));

    LabeledTable t;
    t.roster = scheme.output_labels();
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < t.roster.size(); ++i)
        index[t.roster[i]] = static_cast<int>(i);

    for (std::size_t i = 0; i < sections.size(); ++i) {
        auto grouped = qsystem::apply_grouping(sections.info[i].label_class, scheme);
        if (!grouped) continue;
        t.rows.push_back(i);
        t.y.push_back(index.at(*grouped));
        t.y_log.push_back(std::log10(sections.info[i].label_q));
    }
    if (t.rows.empty()) throw Error("EmptyInput", "grouping dropped every section");
    t.x = features::select_features(sections.features.select_rows(t.rows), kind);
    return t;
}

std::string predictions_csv_classification(const features::SectionTable& sections,
                                           const LabeledTable& t,
                                           const std::vector<std::size_t>& test_rows,
                                           const std::vector<int>& y_pred,
                                           const std::vector<std::vector<double>>& proba) {
    std::ostringstream out;
    out << "tunnel_id,round_id,section_start_m,true_label,predicted_label";
    for (const auto& r : t.roster) out << ",p_" << r;
    out << "\n";
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
        const auto& info = sections.info[t.rows[test_rows[i]]];
        out << info.tunnel_id << ',' << info.round_id << ','
            << format_double(info.section_start_m) << ',' << t.roster[static_cast<std::size_t>(
                   t.y[test_rows[i]])]
            << ',' << t.roster[static_cast<std::size_t>(y_pred[i])];
        for (double p : proba[i]) out << ',' << format_double(p);
        out << "\n";
    }
    return out.str();
}

std::string predictions_csv_regression(const features::SectionTable& sections,
                                       const LabeledTable& t,
                                       const std::vector<std::size_t>& test_rows,
                                       const std::vector<double>& y_pred_log) {
    std::ostringstream out;
    out << "tunnel_id,round_id,section_start_m,y_true_log10,y_pred_log10\n";
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
        const auto& info = sections.info[t.rows[test_rows[i]]];
        out << info.tunnel_id << ',' << info.round_id << ','
            << format_double(info.section_start_m) << ','
            << format_double(t.y_log[test_rows[i]]) << ',' << format_double(y_pred_log[i])
            << "\n";
    }
    return out.str();
}

std::string confusion_csv(const eval::ConfusionMatrix& cm, const std::vector<double>* normalized) {
    std::ostringstream out;
    out << "true\\pred";
    for (const auto& r : cm.roster) out << ',' << r;
    out << "\n";
    for (std::size_t t = 0; t < cm.C(); ++t) {
        out << cm.roster[t];
        for (std::size_t p = 0; p < cm.C(); ++p) {
            out << ',';
            if (normalized)
                out << format_double((*normalized)[t * cm.C() + p]);
            else
                out << cm.at(t, p);
        }
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// SVG rendering (static markup; every plot ships a CSV twin)

std::string svg_open(int w, int h) {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    return s.str();
}

std::string svg_text(double x, double y, const std::string& text, int size = 11,
                     const std::string& anchor = "start") {
    std::ostringstream s;
    s << "<text x=\"" << format_double(x) << "\" y=\"" << format_double(y) << "\" font-size=\""
      << size << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << text
      << "</text>\n";
    return s.str();
}

std::string heatmap_panel(const eval::ConfusionMatrix& cm, const std::vector<double>& values,
                          double max_value, double x0, double y0, double cell,
                          const std::string& title, bool integer_labels) {
    std::ostringstream s;
    std::size_t c = cm.C();
    s << svg_text(x0, y0 - 8, title, 12);
    for (std::size_t t = 0; t < c; ++t)
        for (std::size_t p = 0; p < c; ++p) {
            double v = values[t * c + p];
            double frac = max_value > 0.0 ? v / max_value : 0.0;
            int shade = static_cast<int>(255.0 - 155.0 * frac);
            s << "<rect x=\"" << format_double(x0 + static_cast<double>(p) * cell) << "\" y=\""
              << format_double(y0 + static_cast<double>(t) * cell) << "\" width=\""
              << format_double(cell) << "\" height=\"" << format_double(cell) << "\" fill=\"rgb("
              << shade << "," << shade << ",255)\" stroke=\"white\"/>\n";
            std::string label = integer_labels
                                    ? std::to_string(static_cast<long long>(v))
                                    : format_double(std::round(v * 100.0) / 100.0);
            s << svg_text(x0 + (static_cast<double>(p) + 0.5) * cell,
                          y0 + (static_cast<double>(t) + 0.5) * cell + 4, label, 10, "middle");
        }
    for (std::size_t t = 0; t < c; ++t) {
        s << svg_text(x0 - 6, y0 + (static_cast<double>(t) + 0.5) * cell + 4, cm.roster[t], 10,
                      "end");
        s << svg_text(x0 + (static_cast<double>(t) + 0.5) * cell,
                      y0 + static_cast<double>(c) * cell + 14, cm.roster[t], 10, "middle");
    }
    return s.str();
}

std::string confusion_triptych_svg(const eval::ConfusionMatrix& cm) {
    std::size_t c = cm.C();
    double cell = 36.0;
    double panel = static_cast<double>(c) * cell;
    int width = static_cast<int>(3.0 * panel + 200.0);
    int height = static_cast<int>(panel + 80.0);

    auto recall = eval::normalize(cm, eval::Axis::Row);
    auto precision = eval::normalize(cm, eval::Axis::Column);
    std::vector<double> counts(cm.counts.begin(), cm.counts.end());
    double max_count = *std::max_element(counts.begin(), counts.end());

    std::string svg = svg_open(width, height);
    svg += heatmap_panel(cm, recall, 1.0, 50, 40, cell, "recall (row-normalized)", false);
    svg += heatmap_panel(cm, precision, 1.0, 50 + panel + 60, 40, cell,
                         "precision (column-normalized)", false);
    svg += heatmap_panel(cm, counts, max_count, 50 + 2.0 * (panel + 60), 40, cell, "counts", true);
    svg += "</svg>\n";
    return svg;
}

struct Histogram {
    double lo = 0.0, width = 0.0;
    std::vector<std::size_t> a, b;
};

Histogram histogram_pair(const std::vector<double>& xa, const std::vector<double>& xb, int bins) {
    Histogram h;
    double lo = xa[0], hi = xa[0];
    for (double v : xa) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : xb) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) hi = lo + 1.0;
    h.lo = lo;
    h.width = (hi - lo) / static_cast<double>(bins);
    h.a.assign(static_cast<std::size_t>(bins), 0);
    h.b.assign(static_cast<std::size_t>(bins), 0);
    auto bin_of = [&](double v) {
        auto b = static_cast<std::size_t>((v - lo) / h.width);
        return std::min(b, h.a.size() - 1);
    };
    for (double v : xa) ++h.a[bin_of(v)];
    for (double v : xb) ++h.b[bin_of(v)];
    return h;
}

std::string histogram_svg(const Histogram& h, const std::string& label_a,
                          const std::string& label_b, const std::string& x_label) {
    int width = 640, height = 360;
    double plot_w = 560, plot_h = 280, x0 = 60, y0 = 310;
    std::size_t n = h.a.size();
    std::size_t max_count = 1;
    for (std::size_t i = 0; i < n; ++i)
        max_count = std::max({max_count, h.a[i], h.b[i]});

    std::string svg = svg_open(width, height);
    double bw = plot_w / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double ha = plot_h * static_cast<double>(h.a[i]) / static_cast<double>(max_count);
        double hb = plot_h * static_cast<double>(h.b[i]) / static_cast<double>(max_count);
        std::ostringstream s;
        s << "<rect x=\"" << format_double(x0 + static_cast<double>(i) * bw) << "\" y=\""
          << format_double(y0 - ha) << "\" width=\"" << format_double(bw * 0.45) << "\" height=\""
          << format_double(ha) << "\" fill=\"steelblue\"/>\n";
        s << "<rect x=\"" << format_double(x0 + static_cast<double>(i) * bw + bw * 0.5)
          << "\" y=\"" << format_double(y0 - hb) << "\" width=\"" << format_double(bw * 0.45)
          << "\" height=\"" << format_double(hb) << "\" fill=\"darkorange\"/>\n";
        svg += s.str();
    }
    svg += svg_text(x0, 20, label_a + " (blue) vs " + label_b + " (orange)", 12);
    svg += svg_text(x0 + plot_w / 2, 345, x_label, 11, "middle");
    svg += svg_text(x0 - 6, y0 - plot_h, std::to_string(max_count), 10, "end");
    svg += "</svg>\n";
    return svg;
}

std::string scatter_qq_svg(const std::vector<double>& y_true, const std::vector<double>& y_pred,
                           const std::vector<bool>& flags,
                           const std::vector<std::pair<double, double>>& qq, double band) {
    int width = 840, height = 420;
    double panel = 320, x0 = 60, y0 = 380;

    double lo = y_true[0], hi = y_true[0];
    for (double v : y_true) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : y_pred) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) hi = lo + 1.0;
    auto sx = [&](double v) { return x0 + panel * (v - lo) / (hi - lo); };
    auto sy = [&](double v) { return y0 - panel * (v - lo) / (hi - lo); };

    std::string svg = svg_open(width, height);
    std::ostringstream s;
    // identity line and the log-band margins
    s << "<line x1=\"" << format_double(sx(lo)) << "\" y1=\"" << format_double(sy(lo))
      << "\" x2=\"" << format_double(sx(hi)) << "\" y2=\"" << format_double(sy(hi))
      << "\" stroke=\"black\"/>\n";
    for (double off : {-band, band})
        s << "<line x1=\"" << format_double(sx(lo)) << "\" y1=\"" << format_double(sy(lo + off))
          << "\" x2=\"" << format_double(sx(hi)) << "\" y2=\"" << format_double(sy(hi + off))
          << "\" stroke=\"red\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t i = 0; i < y_true.size(); ++i)
        s << "<circle cx=\"" << format_double(sx(y_true[i])) << "\" cy=\""
          << format_double(sy(y_pred[i])) << "\" r=\"2.5\" fill=\""
          << (flags[i] ? "red" : "steelblue") << "\"/>\n";
    svg += s.str();
    svg += svg_text(x0 + panel / 2, 405, "true log10(Q)", 11, "middle");
    svg += svg_text(x0, 30, "predicted vs true (red = outside the log-band)", 12);

    // QQ panel
    double qx0 = x0 + panel + 120;
    double qlo = qq.front().first, qhi = qq.back().first;
    for (const auto& [t, o] : qq) {
        qlo = std::min({qlo, t, o});
        qhi = std::max({qhi, t, o});
    }
    if (!(qhi > qlo)) qhi = qlo + 1.0;
    auto qsx = [&](double v) { return qx0 + panel * (v - qlo) / (qhi - qlo); };
    auto qsy = [&](double v) { return y0 - panel * (v - qlo) / (qhi - qlo); };
    std::ostringstream q;
    q << "<line x1=\"" << format_double(qsx(qlo)) << "\" y1=\"" << format_double(qsy(qlo))
      << "\" x2=\"" << format_double(qsx(qhi)) << "\" y2=\"" << format_double(qsy(qhi))
      << "\" stroke=\"black\"/>\n";
    for (const auto& [t, o] : qq)
        q << "<circle cx=\"" << format_double(qsx(t)) << "\" cy=\"" << format_double(qsy(o))
          << "\" r=\"2\" fill=\"steelblue\"/>\n";
    svg += q.str();
    svg += svg_text(qx0 + panel / 2, 405, "theoretical quantile", 11, "middle");
    svg += svg_text(qx0, 30, "residual QQ", 12);
    svg += "</svg>\n";
    return svg;
}

std::string parallel_coordinates_svg(const json& pc) {
    const auto& axes = pc.at("axes");
    const auto& trials = pc.at("trials");
    std::size_t n_axes = axes.size() + 1;  // + objective
    int width = static_cast<int>(120 * n_axes + 80);
    int height = 360;
    double y_top = 50, y_bot = 320;

    // axis ranges from the trial values
    std::vector<double> lo(n_axes, 1e300), hi(n_axes, -1e300);
    std::vector<std::vector<std::string>> cats(axes.size());
    auto axis_value = [&](std::size_t a, const json& trial) -> double {
        if (a == n_axes - 1) return trial.value("objective", 0.0);
        const auto& ax = axes[a];
        const auto& v = trial.at("values").at(ax.at("name").get<std::string>());
        if (ax.at("kind") == "categorical") {
            std::string s = v.dump();
            auto& seen = cats[a];
            auto it = std::find(seen.begin(), seen.end(), s);
            if (it == seen.end()) {
                seen.push_back(s);
                return static_cast<double>(seen.size() - 1);
            }
            return static_cast<double>(it - seen.begin());
        }
        double x = v.get<double>();
        return ax.at("kind") == "log_real" ? std::log10(x) : x;
    };
    for (const auto& t : trials)
        for (std::size_t a = 0; a < n_axes; ++a) {
            if (a == n_axes - 1 && !t.contains("objective")) continue;
            double v = axis_value(a, t);
            lo[a] = std::min(lo[a], v);
            hi[a] = std::max(hi[a], v);
        }
    for (std::size_t a = 0; a < n_axes; ++a)
        if (!(hi[a] > lo[a])) hi[a] = lo[a] + 1.0;

    std::string svg = svg_open(width, height);
    for (std::size_t a = 0; a < n_axes; ++a) {
        double x = 60.0 + 120.0 * static_cast<double>(a);
        std::ostringstream s;
        s << "<line x1=\"" << format_double(x) << "\" y1=\"" << format_double(y_top)
          << "\" x2=\"" << format_double(x) << "\" y2=\"" << format_double(y_bot)
          << "\" stroke=\"black\"/>\n";
        svg += s.str();
        std::string name =
            a == n_axes - 1 ? "objective" : axes[a].at("name").get<std::string>();
        svg += svg_text(x, 30, name, 11, "middle");
    }
    for (const auto& t : trials) {
        if (!t.contains("objective")) continue;
        std::ostringstream s;
        s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-opacity=\"0.5\" points=\"";
        for (std::size_t a = 0; a < n_axes; ++a) {
            double x = 60.0 + 120.0 * static_cast<double>(a);
            double v = axis_value(a, t);
            double y = y_bot - (y_bot - y_top) * (v - lo[a]) / (hi[a] - lo[a]);
            s << format_double(x) << "," << format_double(y) << " ";
        }
        s << "\"/>\n";
        svg += s.str();
    }
    svg += "</svg>\n";
    return svg;
}

// ---------------------------------------------------------------------------
// commands

void cmd_synth(const json& config, const std::string& out_dir) {
    synth::SynthSpec spec;
    spec.n_rounds = config.value("rounds", 2000);
    spec.round_length_min_m = config.value("round_length_min_m", 3.0);
    spec.round_length_max_m = config.value("round_length_max_m", 7.0);
    spec.p_stay = config.value("p_stay", 0.6);
    spec.noise_scale = config.value("noise_scale", 1.0);
    spec.smoothing_width_m = config.value("smoothing_width_m", 0.0);
    spec.holes_per_round = config.value("holes_per_round", 6);
    spec.readings_per_metre = config.value("readings_per_metre", 5);
    spec.seed = config.value("seed", std::uint64_t{0});

    auto result = synth::generate(spec);
    dataset::save_dataset(result.data, (fs::path(out_dir) / "drillholes.csv").string(),
                          (fs::path(out_dir) / "rounds.csv").string());
    synth::save_ground_truth(result, (fs::path(out_dir) / "ground_truth.csv").string());
}

void cmd_ingest(const json& config, const std::string& out_dir) {
    auto d = dataset::load_dataset(require_string(config, "drillholes"),
                                   require_string(config, "rounds"));
    auto report = dataset::validate(d);
    json findings = json::array();
    for (const auto& f : report.findings)
        findings.push_back({{"check", f.check}, {"detail", f.detail}});
    json doc = {{"clean", report.clean()},
                {"findings", findings},
                {"rounds", d.rounds.size()},
                {"holes", d.hole_count()},
                {"readings", d.record_count()}};
    write_file((fs::path(out_dir) / "validation.json").string(), doc.dump(2) + "\n");
    dataset::save_dataset(d, (fs::path(out_dir) / "drillholes.csv").string(),
                          (fs::path(out_dir) / "rounds.csv").string());
}

void cmd_aggregate(const json& config, const std::string& out_dir) {
    auto d = dataset::load_dataset(require_string(config, "drillholes"),
                                   require_string(config, "rounds"));
    auto sections = features::aggregate_dataset(d, config.value("section_length_m", 1.0),
                                                config.value("transition_window_m", 10.0));
    features::save_sections(sections, (fs::path(out_dir) / "sections.csv").string());
}

void cmd_train(const json& config, const std::string& out_dir) {
    auto sections = features::load_sections(require_string(config, "sections"));
    bool regression = config.value("task", "classification") == "regression";
    auto task = regression ? models::Task::Regression : models::Task::Classification;
    auto table = build_table(sections, config);
    auto pc = pipeline_from_config(config, task);
    double test_fraction = config.value("test_fraction", 0.25);
    std::uint64_t seed = config.value("seed", std::uint64_t{0});

    preprocess::Pipeline pipe(pc);
    json metrics;

    if (!regression) {
        auto [train_idx, test_idx] = eval::stratified_split(table.y, test_fraction, seed);
        std::vector<int> y_train, y_test;
        for (auto i : train_idx) y_train.push_back(table.y[i]);
        for (auto i : test_idx) y_test.push_back(table.y[i]);
        pipe.fit(table.x.select_rows(train_idx), y_train, table.roster);

        metrics = {{"n_train", train_idx.size()}, {"n_test", test_idx.size()}};
        if (!test_idx.empty()) {
            auto test = table.x.select_rows(test_idx);
            auto y_pred = pipe.predict(test);
            auto proba = pipe.predict_proba(test);
            auto cm = eval::confusion_matrix(y_test, y_pred, table.roster);
            auto report = eval::classification_metrics(cm);
            try {
                report.roc_auc_macro = eval::roc_auc_macro(y_test, proba);
            } catch (const Error&) {
            }
            metrics["holdout"] = report.to_json();
            metrics["confusion"] = cm.to_json();
            auto recall = eval::normalize(cm, eval::Axis::Row);
            auto precision = eval::normalize(cm, eval::Axis::Column);
            write_file((fs::path(out_dir) / "confusion_counts.csv").string(),
                       confusion_csv(cm, nullptr));
            write_file((fs::path(out_dir) / "confusion_recall.csv").string(),
                       confusion_csv(cm, &recall));
            write_file((fs::path(out_dir) / "confusion_precision.csv").string(),
                       confusion_csv(cm, &precision));
            write_file((fs::path(out_dir) / "predictions.csv").string(),
                       predictions_csv_classification(sections, table, test_idx, y_pred, proba));
        }
    } else {
        // regression targets are log10(Q); MSE/R2 are reported in log space
        std::vector<std::size_t> order(table.y_log.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(seed);
        rng.shuffle(order);
        auto n_test = static_cast<std::size_t>(
            std::floor(static_cast<double>(order.size()) * test_fraction + 0.5));
        std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<long>(n_test));
        std::vector<std::size_t> train_idx(order.begin() + static_cast<long>(n_test), order.end());
        std::sort(test_idx.begin(), test_idx.end());
        std::sort(train_idx.begin(), train_idx.end());

        std::vector<double> y_train, y_test;
        for (auto i : train_idx) y_train.push_back(table.y_log[i]);
        for (auto i : test_idx) y_test.push_back(table.y_log[i]);
        pipe.fit_regression(table.x.select_rows(train_idx), y_train);

        metrics = {{"n_train", train_idx.size()}, {"n_test", test_idx.size()}};
        if (!test_idx.empty()) {
            auto y_pred = pipe.predict_value(table.x.select_rows(test_idx));
            auto report = eval::regression_metrics(y_test, y_pred);
            metrics["holdout"] = report.to_json();
            if (y_test.size() >= 3) {
                auto corrected = eval::residual_linear_correction(y_test, y_pred);
                metrics["linear_correction"] = {{"a", corrected.a}, {"b", corrected.b}};
                metrics["holdout_corrected"] =
                    eval::regression_metrics(y_test, corrected.corrected).to_json();
            }
            write_file((fs::path(out_dir) / "predictions.csv").string(),
                       predictions_csv_regression(sections, table, test_idx, y_pred));
        }
    }

    write_file((fs::path(out_dir) / "model.json").string(), pipe.serialize() + "\n");
    write_file((fs::path(out_dir) / "metrics.json").string(), metrics.dump(2) + "\n");
}

void cmd_cv(const json& config, const std::string& out_dir) {
    auto sections = features::load_sections(require_string(config, "sections"));
    bool regression = config.value("task", "classification") == "regression";
    auto task = regression ? models::Task::Regression : models::Task::Classification;
    auto table = build_table(sections, config);
    auto pc = pipeline_from_config(config, task);
    int k = config.value("cv_folds", 5);
    std::uint64_t seed = config.value("seed", std::uint64_t{0});

    auto result = regression ? eval::kfold_cv_regression(pc, table.x, table.y_log, k, seed)
                             : eval::kfold_cv(pc, table.x, table.y, table.roster, k, seed);
    write_file((fs::path(out_dir) / "cv.json").string(), result.to_json().dump(2) + "\n");
}

void cmd_tune(const json& config, const std::string& out_dir) {
    auto sections = features::load_sections(require_string(config, "sections"));
    bool regression = config.value("task", "classification") == "regression";
    auto task = regression ? models::Task::Regression : models::Task::Classification;
    auto table = build_table(sections, config);
    auto base = pipeline_from_config(config, task);
    int k = config.value("cv_folds", 3);
    std::uint64_t seed = config.value("seed", std::uint64_t{0});
    int n_trials = config.value("trials", 20);
    auto sampler = tuning::sampler_from_name(config.value("sampler", "tpe_lite"));
    std::string objective = config.value(
        "objective", regression ? std::string("r2") : std::string("balanced_accuracy"));
    if (objective != "balanced_accuracy" && objective != "precision_macro" && objective != "r2")
        throw Error("BadConfig", "unknown objective: " + objective);

    tuning::SearchSpace space;
    if (!config.contains("space")) throw Error("BadConfig", "tune needs a search space");
    for (const auto& p : config.at("space")) space.params.push_back(tuning::Param::from_json(p));

    tuning::Evaluator evaluate = [&](const json& trial_config,
                                     std::vector<double>& folds) -> double {
        auto pc = base;
        for (auto& [key, value] : trial_config.items()) pc.model.hyper[key] = value;
        double score;
        if (regression) {
            auto cv = eval::kfold_cv_regression(pc, table.x, table.y_log, k, seed);
            for (const auto& r : cv.fold_regression) folds.push_back(r.r2);
            score = cv.mean;
        } else {
            auto cv = eval::kfold_cv(pc, table.x, table.y, table.roster, k, seed);
            double sum = 0.0;
            for (const auto& m : cv.fold_metrics) {
                double v = objective == "precision_macro" ? m.precision_macro
                                                          : m.balanced_accuracy;
                folds.push_back(v);
                sum += v;
            }
            score = sum / static_cast<double>(cv.fold_metrics.size());
        }
        return score;
    };

    json default_config = json::object();
    auto defaults = base.model.resolved_hyper();
    for (const auto& p : space.params) {
        if (!defaults.contains(p.name))
            throw Error("BadConfig", "space parameter outside the model: " + p.name);
        default_config[p.name] = defaults.at(p.name);
    }
    if (!space.contains(default_config))
        throw Error("BadConfig", "model defaults fall outside the search space");

    auto result = tuning::search(space, default_config, evaluate, n_trials, sampler, seed);
    write_file((fs::path(out_dir) / "trials.csv").string(),
               tuning::export_history_csv(result.history));
    write_file((fs::path(out_dir) / "parallel_coordinates.json").string(),
               tuning::export_parallel_coordinates(space, result.history).dump(2) + "\n");
    json best = {{"index", result.best.index},
                 {"config", result.best.config},
                 {"objective", *result.best.objective}};
    write_file((fs::path(out_dir) / "best_config.json").string(), best.dump(2) + "\n");
}

void cmd_predict(const json& config, const std::string& out_dir) {
    auto pipe = preprocess::Pipeline::deserialize(read_file(require_string(config, "model")));
    std::ifstream in(require_string(config, "sections"), std::ios::binary);
    if (!in) throw Error("IoFailure", "cannot read sections file");
    auto t = csv::read_table(in);

    const auto& names = pipe.model().feature_names();
    DataMatrix x(names, t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t c = 0; c < names.size(); ++c)
            x.at(r, c) = csv::parse_double(t.cell(r, names[c]), r + 1, names[c]);

    bool has_ids = t.index.count("tunnel_id") && t.index.count("round_id") &&
                   t.index.count("section_start_m");
    bool regression = pipe.config().model.task == models::Task::Regression;

    std::ostringstream out;
    if (has_ids) out << "tunnel_id,round_id,section_start_m,";
    if (regression) {
        out << "predicted_log10_q,predicted_q\n";
        auto y = pipe.predict_value(x);
        for (std::size_t r = 0; r < x.n_rows; ++r) {
            if (has_ids)
                out << t.cell(r, "tunnel_id") << ',' << t.cell(r, "round_id") << ','
                    << t.cell(r, "section_start_m") << ',';
            out << format_double(y[r]) << ',' << format_double(std::pow(10.0, y[r])) << "\n";
        }
    } else {
        const auto& roster = pipe.model().roster();
        out << "predicted_label";
        for (const auto& c : roster) out << ",p_" << c;
        out << "\n";
        auto labels = pipe.predict(x);
        auto proba = pipe.predict_proba(x);
        for (std::size_t r = 0; r < x.n_rows; ++r) {
            if (has_ids)
                out << t.cell(r, "tunnel_id") << ',' << t.cell(r, "round_id") << ','
                    << t.cell(r, "section_start_m") << ',';
            out << roster[static_cast<std::size_t>(labels[r])];
            for (double p : proba[r]) out << ',' << format_double(p);
            out << "\n";
        }
    }
    write_file((fs::path(out_dir) / "predictions.csv").string(), out.str());
}

void cmd_report(const json& config, const std::string& out_dir) {
    bool produced = false;

    if (config.contains("sections")) {
        auto sections = features::load_sections(config.at("sections").get<std::string>());
        std::vector<double> q, q_base;
        for (const auto& info : sections.info) {
            q.push_back(std::log10(info.label_q));
            q_base.push_back(std::log10(info.label_q_base));
        }
        if (q.empty()) throw Error("EmptyInput", "no sections");
        auto h = histogram_pair(q, q_base, 30);
        std::ostringstream csv_twin;
        csv_twin << "bin_lo_log10,bin_hi_log10,count_q,count_q_base\n";
        for (std::size_t i = 0; i < h.a.size(); ++i)
            csv_twin << format_double(h.lo + static_cast<double>(i) * h.width) << ','
                     << format_double(h.lo + static_cast<double>(i + 1) * h.width) << ','
                     << h.a[i] << ',' << h.b[i] << "\n";
        write_file((fs::path(out_dir) / "q_histogram.csv").string(), csv_twin.str());
        write_file((fs::path(out_dir) / "q_histogram.svg").string(),
                   histogram_svg(h, "Q", "Q-base", "log10(Q)"));
        produced = true;
    }

    if (config.contains("metrics")) {
        auto doc = json::parse(read_file(config.at("metrics").get<std::string>()));
        if (doc.contains("confusion")) {
            eval::ConfusionMatrix cm;
            cm.roster = doc.at("confusion").at("roster").get<std::vector<std::string>>();
            for (const auto& row : doc.at("confusion").at("counts"))
                for (const auto& v : row) cm.counts.push_back(v.get<std::size_t>());
            write_file((fs::path(out_dir) / "confusion_triptych.svg").string(),
                       confusion_triptych_svg(cm));
            auto recall = eval::normalize(cm, eval::Axis::Row);
            write_file((fs::path(out_dir) / "confusion_recall.csv").string(),
                       confusion_csv(cm, &recall));
            produced = true;
        }
    }

    if (config.contains("predictions")) {
        std::ifstream in(config.at("predictions").get<std::string>(), std::ios::binary);
        if (!in) throw Error("IoFailure", "cannot read predictions file");
        auto t = csv::read_table(in);
        if (t.index.count("y_true_log10")) {
            std::vector<double> y_true, y_pred;
            for (std::size_t r = 0; r < t.rows.size(); ++r) {
                y_true.push_back(csv::parse_double(t.cell(r, "y_true_log10"), r + 1, "y_true_log10"));
                y_pred.push_back(csv::parse_double(t.cell(r, "y_pred_log10"), r + 1, "y_pred_log10"));
            }
            if (y_true.size() < 3) throw Error("EmptyInput", "too few predictions to plot");
            double band = config.value("log_band", 0.3010299956639812);
            auto flags = eval::log_band_outliers(y_true, y_pred, band);
            std::vector<double> residuals(y_true.size());
            for (std::size_t i = 0; i < y_true.size(); ++i) residuals[i] = y_pred[i] - y_true[i];
            auto qq = eval::qq_points(residuals);
            std::ostringstream csv_twin;
            csv_twin << "y_true_log10,y_pred_log10,outlier,qq_theoretical,qq_observed\n";
            for (std::size_t i = 0; i < y_true.size(); ++i)
                csv_twin << format_double(y_true[i]) << ',' << format_double(y_pred[i]) << ','
                         << (flags[i] ? 1 : 0) << ',' << format_double(qq[i].first) << ','
                         << format_double(qq[i].second) << "\n";
            write_file((fs::path(out_dir) / "scatter_qq.csv").string(), csv_twin.str());
            write_file((fs::path(out_dir) / "scatter_qq.svg").string(),
                       scatter_qq_svg(y_true, y_pred, flags, qq, band));
            produced = true;
        }
    }

    if (config.contains("parallel_coordinates")) {
        auto doc = json::parse(read_file(config.at("parallel_coordinates").get<std::string>()));
        write_file((fs::path(out_dir) / "parallel_coordinates.svg").string(),
                   parallel_coordinates_svg(doc));
        produced = true;
    }

    if (!produced)
        throw Error("BadConfig",
                    "report needs at least one of: sections, metrics, predictions, "
                    "parallel_coordinates");
}

}  // namespace

void run_command(const std::string& command, const json& config, const std::string& out_dir) {
    if (out_dir.empty()) throw Error("BadConfig", "output directory required");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("IoFailure", "cannot create " + out_dir);
    if (!config.is_object()) throw Error("BadConfig", "configuration must be a JSON object");

    if (command == "synth")
        cmd_synth(config, out_dir);
    else if (command == "ingest")
        cmd_ingest(config, out_dir);
    else if (command == "aggregate")
        cmd_aggregate(config, out_dir);
    else if (command == "train")
        cmd_train(config, out_dir);
    else if (command == "cv")
        cmd_cv(config, out_dir);
    else if (command == "tune")
        cmd_tune(config, out_dir);
    else if (command == "predict")
        cmd_predict(config, out_dir);
    else if (command == "report")
        cmd_report(config, out_dir);
    else
        throw Error("UnknownCommand", command);

    write_run_config(command, config, out_dir);
}

int exit_code_for(const std::string& error_kind) {
    static const std::set<std::string> config_kinds = {
        "BadConfig",      "BadHyperparameter", "BadSpec",        "UnknownScheme",
        "UnknownCommand", "UnknownKind",       "EmptyEnsemble",  "BadContamination"};
    static const std::set<std::string> data_kinds = {
        "MissingColumn",      "BadValue",          "OrphanHole",
        "UnknownLabel",       "OutOfRange",        "NonPositiveComponent",
        "EmptyInput",         "EmptySection",      "EmptySubset",
        "EmptyMatrix",        "UnsortedInput",     "CorruptDocument",
        "VersionMismatch",    "NotSynthetic",      "ClassTooSmall",
        "SingleClassTruth",   "DegenerateVariance", "DegeneratePredictions",
        "DegenerateTraining", "WindowTooLarge",    "IoFailure",
        "FeatureContractMismatch", "TooFewSamples"};
    if (config_kinds.count(error_kind)) return 2;
    if (data_kinds.count(error_kind)) return 3;
    return 4;
}

}  // namespace rockmass::workflows
