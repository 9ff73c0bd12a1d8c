#include "rockmass/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "csv_util.hpp"
#include "rockmass/models.hpp"

namespace rockmass::features {

namespace {

const std::vector<std::string> kStatNames = {"Mean",     "Median",   "StandardDeviation",
                                             "Variance", "Skewness", "Kurtosis"};

std::vector<std::string> build_names() {
    std::vector<std::string> names;
    for (const auto& p : dataset::mwd_param_names())
        for (const auto& s : kStatNames) names.push_back(p + s);
    names.push_back("Overburden");
    names.push_back("TunnelWidth");
    names.push_back("JnMult");
    return names;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// The Featurewiz-reduced set, with source-system names ContourWidth and
// TerrainHeight aliased to TunnelWidth and Overburden.
const std::vector<std::string> kAutomated21 = {
    "TunnelWidth",      "Overburden",       "JnMult",
    "FeedPressNormMedian",  "FeedPressNormVariance", "HammerPressNormMedian",
    "HammerPressNormKurtosis", "PenetrNormMedian",  "PenetrNormStandardDeviation",
    "PenetrRMSMean",    "PenetrRMSKurtosis", "PenetrRMSVariance",
    "RotaPressNormMedian", "RotaPressRMSMean", "RotaPressNormStandardDeviation",
    "RotaPressRMSKurtosis", "RotaPressRMSVariance", "WaterFlowNormMedian",
    "WaterFlowNormSkewness", "WaterFlowRMSKurtosis", "WaterFlowRMSStandardDeviation"};

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace

const std::vector<std::string>& canonical_feature_names() {
    static const std::vector<std::string> names = build_names();
    return names;
}

SectionTable SectionTable::select(const std::vector<std::size_t>& idx) const {
    SectionTable out;
    out.features = features.select_rows(idx);
    out.info.reserve(idx.size());
    for (auto i : idx) out.info.push_back(info[i]);
    return out;
}

std::vector<double> aggregate_section(
    const std::array<std::vector<double>, dataset::kNumMwdParams>& values, double overburden_m,
    double tunnel_width_m, double jn_mult) {
    std::vector<double> out;
    out.reserve(kNumFeatures);
    for (const auto& v : values) {
        if (v.empty()) throw Error("EmptyInput", "no readings for a parameter");
        double n = static_cast<double>(v.size());
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= n;
        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (double x : v) {
            double d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        double variance = v.size() > 1 ? m2 * n / (n - 1.0) : 0.0;
        double stddev = std::sqrt(variance);
        double skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
        double kurt = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
        out.push_back(mean);
        out.push_back(median_of(v));
        out.push_back(stddev);
        out.push_back(variance);
        out.push_back(skew);
        out.push_back(kurt);
    }
    out.push_back(overburden_m);
    out.push_back(tunnel_width_m);
    out.push_back(jn_mult);
    return out;
}

SectionTable section_samples(const dataset::BlastingRound& round,
                             const std::vector<dataset::DrillholeRecord>& holes,
                             double section_length_m) {
    if (section_length_m <= 0.0) throw Error("EmptyInput", "section_length_m must be > 0");
    auto n_sections = static_cast<std::size_t>(std::floor(round.length_m / section_length_m));
    std::vector<std::array<std::vector<double>, dataset::kNumMwdParams>> buckets(n_sections);
    for (const auto& rec : holes) {
        auto s = static_cast<std::size_t>(std::floor(rec.depth_m / section_length_m));
        if (s >= n_sections) continue;  // reading beyond the section grid
        for (int p = 0; p < dataset::kNumMwdParams; ++p)
            buckets[s][static_cast<std::size_t>(p)].push_back(rec.params[p]);
    }

    double q = round.resolved_q();
    double q_base = round.resolved_q_base();
    auto cls = qsystem::q_to_class(q);

    SectionTable table;
    for (std::size_t s = 0; s < n_sections; ++s) {
        if (buckets[s][0].empty())
            throw Error("EmptySection", "round " + round.round_id + " section " + std::to_string(s));
        table.features.push_row(
            aggregate_section(buckets[s], round.overburden_m, round.tunnel_width_m, round.jn_mult));
        SectionInfo info;
        info.tunnel_id = round.tunnel_id;
        info.round_id = round.round_id;
        info.section_start_m = round.start_chainage_m + static_cast<double>(s) * section_length_m;
        info.label_q = q;
        info.label_q_base = q_base;
        info.label_class = cls;
        table.info.push_back(std::move(info));
    }
    return table;
}

SectionTable aggregate_dataset(const dataset::TunnelDataset& d, double section_length_m,
                               double transition_window_m) {
    SectionTable table;
    static const std::vector<dataset::DrillholeRecord> kNoHoles;
    for (const auto& round : d.rounds) {
        auto it = d.holes_by_round.find(round.round_id);
        const auto& holes = it == d.holes_by_round.end() ? kNoHoles : it->second;
        auto part = section_samples(round, holes, section_length_m);
        for (std::size_t i = 0; i < part.size(); ++i) {
            table.features.push_row(part.features.row_vec(i));
            table.info.push_back(part.info[i]);
        }
    }
    // zone tags per tunnel, in chainage order (rounds arrive pre-sorted)
    std::size_t begin = 0;
    while (begin < table.size()) {
        std::size_t end = begin;
        while (end < table.size() && table.info[end].tunnel_id == table.info[begin].tunnel_id) ++end;
        std::vector<std::pair<double, qsystem::QClass>> seq;
        for (std::size_t i = begin; i < end; ++i)
            seq.emplace_back(table.info[i].section_start_m, table.info[i].label_class);
        auto tags = qsystem::tag_transition_zones(seq, transition_window_m);
        for (std::size_t i = begin; i < end; ++i) table.info[i].zone = tags[i - begin];
        begin = end;
    }
    return table;
}

FeatureSetKind feature_set_from_name(const std::string& name) {
    if (name == "all51" || name == "all") return FeatureSetKind::All51;
    if (name == "domain35" || name == "domain") return FeatureSetKind::Domain35;
    if (name == "automated21" || name == "automated") return FeatureSetKind::Automated21;
    if (name == "dependent39" || name == "dependent") return FeatureSetKind::Dependent39;
    if (name == "mwd_only48" || name == "mwd_only") return FeatureSetKind::MwdOnly48;
    if (name == "mwd_median8" || name == "mwd_median") return FeatureSetKind::MwdMedian8;
    throw Error("UnknownKind", "feature set: " + name);
}

const std::string& feature_set_name(FeatureSetKind kind) {
    static const std::vector<std::string> names = {"all51",       "domain35",   "automated21",
                                                   "dependent39", "mwd_only48", "mwd_median8"};
    return names[static_cast<std::size_t>(kind)];
}

std::vector<std::string> feature_set_names(FeatureSetKind kind) {
    const auto& all = canonical_feature_names();
    std::vector<std::string> out;
    switch (kind) {
        case FeatureSetKind::All51:
            return all;
        case FeatureSetKind::Domain35:
            for (const auto& n : all)
                if (!contains(n, "Mean") && !contains(n, "StandardDeviation")) out.push_back(n);
            return out;
        case FeatureSetKind::Automated21:
            for (const auto& n : all)  // canonical order
                if (std::find(kAutomated21.begin(), kAutomated21.end(), n) != kAutomated21.end())
                    out.push_back(n);
            return out;
        case FeatureSetKind::Dependent39:
            for (const auto& n : all)
                if (!contains(n, "FeedPressNorm") && !contains(n, "HammerPressNorm"))
                    out.push_back(n);
            return out;
        case FeatureSetKind::MwdOnly48:
            for (const auto& n : all)
                if (n != "Overburden" && n != "TunnelWidth" && n != "JnMult") out.push_back(n);
            return out;
        case FeatureSetKind::MwdMedian8:
            for (const auto& p : dataset::mwd_param_names()) out.push_back(p + "Median");
            return out;
    }
    throw Error("UnknownKind", "feature set");
}

DataMatrix select_features(const DataMatrix& samples, FeatureSetKind kind) {
    auto keep = feature_set_names(kind);
    std::vector<std::size_t> idx;
    for (const auto& n : keep) {
        auto it = std::find(samples.names.begin(), samples.names.end(), n);
        if (it == samples.names.end()) throw Error("UnknownKind", "missing canonical slot " + n);
        idx.push_back(static_cast<std::size_t>(it - samples.names.begin()));
    }
    return samples.select_cols(idx);
}

namespace {

double pearson(const DataMatrix& x, std::size_t a, std::size_t b) {
    std::size_t n = x.n_rows;
    double ma = 0.0, mb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        ma += x.at(r, a);
        mb += x.at(r, b);
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double da = x.at(r, a) - ma, db = x.at(r, b) - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

// Mutual information between a quantile-binned feature and a discrete label.
double mutual_information(const DataMatrix& x, std::size_t col, const std::vector<int>& labels,
                          int bins = 10) {
    std::size_t n = x.n_rows;
    std::vector<double> vals(n);
    for (std::size_t r = 0; r < n; ++r) vals[r] = x.at(r, col);
    std::vector<double> sorted = vals;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (int b = 1; b < bins; ++b)
        edges.push_back(sorted[static_cast<std::size_t>(
            static_cast<double>(n) * static_cast<double>(b) / bins)]);

    int n_labels = *std::max_element(labels.begin(), labels.end()) + 1;
    std::map<std::pair<int, int>, double> joint;
    std::vector<double> pb(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> pl(static_cast<std::size_t>(n_labels), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        int b = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), vals[r]) - edges.begin());
        joint[{b, labels[r]}] += 1.0;
        pb[static_cast<std::size_t>(b)] += 1.0;
        pl[static_cast<std::size_t>(labels[r])] += 1.0;
    }
    double mi = 0.0;
    double dn = static_cast<double>(n);
    for (const auto& [key, c] : joint) {
        double pxy = c / dn;
        double px = pb[static_cast<std::size_t>(key.first)] / dn;
        double py = pl[static_cast<std::size_t>(key.second)] / dn;
        mi += pxy * std::log(pxy / (px * py));
    }
    return mi;
}

}  // namespace

SulovResult sulov_reduce(const DataMatrix& samples, const std::vector<int>& labels,
                         double correlation_threshold, std::uint64_t seed) {
    if (samples.n_cols < 2) throw Error("EmptyInput", "need at least 2 features");
    if (labels.size() != samples.n_rows) throw Error("EmptyInput", "labels misaligned");

    SulovResult result;
    std::vector<std::size_t> live;
    for (std::size_t c = 0; c < samples.n_cols; ++c) {
        double first = samples.at(0, c);
        bool constant = true;
        for (std::size_t r = 1; r < samples.n_rows && constant; ++r)
            constant = samples.at(r, c) == first;
        if (constant)
            result.degenerate.push_back(samples.names[c]);
        else
            live.push_back(c);
    }

    std::vector<double> mi(samples.n_cols, 0.0);
    for (auto c : live) mi[c] = mutual_information(samples, c, labels);

    // drop the lower-MI member of every over-correlated pair
    std::set<std::size_t> dropped;
    for (std::size_t i = 0; i < live.size(); ++i) {
        if (dropped.count(live[i])) continue;
        for (std::size_t j = i + 1; j < live.size(); ++j) {
            if (dropped.count(live[j])) continue;
            if (std::abs(pearson(samples, live[i], live[j])) > correlation_threshold) {
                if (mi[live[i]] >= mi[live[j]])
                    dropped.insert(live[j]);
                else {
                    dropped.insert(live[i]);
                    break;
                }
            }
        }
    }
    std::vector<std::size_t> survivors;
    for (auto c : live)
        if (!dropped.count(c)) survivors.push_back(c);
    if (survivors.empty()) return result;

    // importance ranking with this artifact's own boosted trees
    auto sub = samples.select_cols(survivors);
    models::ModelSpec spec;
    spec.kind = models::ModelKind::GradientBoostedTrees;
    spec.task = models::Task::Classification;
    spec.hyper = {{"n_rounds", 20}, {"max_depth", 3}, {"learning_rate", 0.2}};
    spec.seed = seed;
    int n_labels = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::string> roster;
    for (int i = 0; i < n_labels; ++i) roster.push_back("c" + std::to_string(i));
    auto model = models::fit(spec, sub, labels, roster);
    auto importances = model.feature_importances();

    std::vector<std::size_t> order(survivors.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return importances[a] > importances[b]; });
    double cumulative = 0.0;
    for (auto i : order) {
        result.selected.push_back(sub.names[i]);
        cumulative += importances[i];
        if (cumulative >= 0.95) break;
    }
    return result;
}

std::vector<double> rms_filter(const std::vector<double>& signal, std::size_t window) {
    if (window == 0 || window > signal.size())
        throw Error("WindowTooLarge", "window must be in [1, signal length]");
    std::size_t n = signal.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        // centered window of exact size, clamped inside the signal
        std::size_t start = i >= (window - 1) / 2 ? i - (window - 1) / 2 : 0;
        start = std::min(start, n - window);
        double mean = 0.0;
        for (std::size_t j = start; j < start + window; ++j) mean += signal[j];
        mean /= static_cast<double>(window);
        double ss = 0.0;
        for (std::size_t j = start; j < start + window; ++j) {
            double d = signal[j] - mean;
            ss += d * d;
        }
        out[i] = std::sqrt(ss / static_cast<double>(window));
    }
    return out;
}

void serialize_sections(const SectionTable& t, std::ostream& out) {
    out << "tunnel_id,round_id,section_start_m";
    for (const auto& n : t.features.names) out << ',' << n;
    out << ",label_q,label_q_base,label_class,zone\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& info = t.info[i];
        out << info.tunnel_id << ',' << info.round_id << ',' << format_double(info.section_start_m);
        for (std::size_t c = 0; c < t.features.n_cols; ++c)
            out << ',' << format_double(t.features.at(i, c));
        out << ',' << format_double(info.label_q) << ',' << format_double(info.label_q_base) << ','
            << qsystem::class_name(info.label_class) << ','
            << (info.zone == qsystem::ZoneTag::Transition ? "transition" : "regular") << '\n';
    }
}

SectionTable parse_sections(std::istream& in) {
    auto t = csv::read_table(in);
    SectionTable table;
    for (const auto& n : canonical_feature_names()) t.col(n);  // contract check
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        SectionInfo info;
        info.tunnel_id = t.cell(i, "tunnel_id");
        info.round_id = t.cell(i, "round_id");
        info.section_start_m = csv::parse_double(t.cell(i, "section_start_m"), i + 1, "section_start_m");
        info.label_q = csv::parse_double(t.cell(i, "label_q"), i + 1, "label_q");
        info.label_q_base = csv::parse_double(t.cell(i, "label_q_base"), i + 1, "label_q_base");
        info.label_class = qsystem::class_from_name(t.cell(i, "label_class"));
        info.zone = t.cell(i, "zone") == "transition" ? qsystem::ZoneTag::Transition
                                                      : qsystem::ZoneTag::Regular;
        std::vector<double> row;
        row.reserve(kNumFeatures);
        for (const auto& n : canonical_feature_names())
            row.push_back(csv::parse_double(t.cell(i, n), i + 1, n));
        table.features.push_row(row);
        table.info.push_back(std::move(info));
    }
    return table;
}

SectionTable load_sections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("BadValue", "cannot open " + path);
    return parse_sections(in);
}

void save_sections(const SectionTable& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("BadValue", "cannot write " + path);
    serialize_sections(t, out);
}

}  // namespace rockmass::features
