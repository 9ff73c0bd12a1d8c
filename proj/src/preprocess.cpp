#include "rockmass/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rockmass::preprocess {

using nlohmann::json;

namespace {

const char* outlier_kind_name(OutlierConfig::Kind k) {
    switch (k) {
        case OutlierConfig::Kind::None: return "none";
        case OutlierConfig::Kind::Mad: return "mad";
        case OutlierConfig::Kind::IsolationForest: return "isolation_forest";
        case OutlierConfig::Kind::Both: return "both";
    }
    return "none";
}

OutlierConfig::Kind outlier_kind_from_name(const std::string& s) {
    if (s == "none") return OutlierConfig::Kind::None;
    if (s == "mad") return OutlierConfig::Kind::Mad;
    if (s == "isolation_forest") return OutlierConfig::Kind::IsolationForest;
    if (s == "both") return OutlierConfig::Kind::Both;
    throw Error("BadHyperparameter", "unknown outlier kind: " + s);
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

json OutlierConfig::to_json() const {
    return {{"kind", outlier_kind_name(kind)},
            {"mad_threshold", mad_threshold},
            {"trees", trees},
            {"subsample", subsample},
            {"contamination", contamination}};
}

OutlierConfig OutlierConfig::from_json(const json& j) {
    OutlierConfig c;
    c.kind = outlier_kind_from_name(j.value("kind", "none"));
    c.mad_threshold = j.value("mad_threshold", 3.5);
    c.trees = j.value("trees", 100);
    c.subsample = j.value("subsample", 256);
    c.contamination = j.value("contamination", 0.05);
    if (c.mad_threshold <= 0.0 || c.trees < 1 || c.subsample < 2 || c.contamination < 0.0 ||
        c.contamination >= 1.0)
        throw Error("BadHyperparameter", "invalid outlier configuration");
    return c;
}

std::vector<bool> mad_outlier_mask(const DataMatrix& x, double threshold,
                                   std::vector<std::string>* warnings) {
    if (x.n_rows == 0) throw Error("EmptyInput", "no rows");
    std::vector<bool> keep(x.n_rows, true);
    std::vector<double> col(x.n_rows);
    for (std::size_t c = 0; c < x.n_cols; ++c) {
        for (std::size_t r = 0; r < x.n_rows; ++r) col[r] = x.at(r, c);
        double med = median_of(col);
        std::vector<double> dev(x.n_rows);
        for (std::size_t r = 0; r < x.n_rows; ++r) dev[r] = std::abs(col[r] - med);
        double mad = median_of(dev);
        if (mad == 0.0) {
            if (warnings) {
                std::string name = c < x.names.size() ? x.names[c] : std::to_string(c);
                warnings->push_back("zero MAD, column " + name + " skipped");
            }
            continue;
        }
        for (std::size_t r = 0; r < x.n_rows; ++r)
            if (0.6745 * dev[r] / mad > threshold) keep[r] = false;
    }
    return keep;
}

// ---------------------------------------------------------------------------
// isolation forest

namespace {

struct IsoNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    std::size_t size = 0;  // external node only
};

double avg_path_length(double n) {
    if (n <= 1.0) return 0.0;
    if (n == 2.0) return 1.0;
    double h = std::log(n - 1.0) + 0.5772156649015329;
    return 2.0 * h - 2.0 * (n - 1.0) / n;
}

int grow_iso(std::vector<IsoNode>& nodes, const DataMatrix& x,
             const std::vector<std::size_t>& idx, int depth, int depth_limit, Rng& rng) {
    int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (depth >= depth_limit || idx.size() <= 1) {
        nodes[static_cast<std::size_t>(id)].size = idx.size();
        return id;
    }
    // random feature with spread, random cut inside the spread
    std::vector<std::size_t> feats(x.n_cols);
    std::iota(feats.begin(), feats.end(), 0);
    rng.shuffle(feats);
    for (auto f : feats) {
        double lo = x.at(idx[0], f), hi = lo;
        for (auto i : idx) {
            lo = std::min(lo, x.at(i, f));
            hi = std::max(hi, x.at(i, f));
        }
        if (!(hi > lo)) continue;
        double cut = rng.uniform_range(lo, hi);
        std::vector<std::size_t> left, right;
        for (auto i : idx) (x.at(i, f) < cut ? left : right).push_back(i);
        if (left.empty() || right.empty()) continue;
        int l = grow_iso(nodes, x, left, depth + 1, depth_limit, rng);
        int r = grow_iso(nodes, x, right, depth + 1, depth_limit, rng);
        auto& node = nodes[static_cast<std::size_t>(id)];
        node.feature = static_cast<int>(f);
        node.threshold = cut;
        node.left = l;
        node.right = r;
        return id;
    }
    nodes[static_cast<std::size_t>(id)].size = idx.size();
    return id;
}

double iso_path(const std::vector<IsoNode>& nodes, const double* row) {
    int i = 0;
    double depth = 0.0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        i = row[n.feature] < n.threshold ? n.left : n.right;
        depth += 1.0;
    }
    return depth + avg_path_length(static_cast<double>(nodes[static_cast<std::size_t>(i)].size));
}

}  // namespace

std::vector<bool> isolation_forest_mask(const DataMatrix& x, int trees, int subsample,
                                        double contamination, std::uint64_t seed) {
    if (x.n_rows == 0) throw Error("EmptyInput", "no rows");
    if (trees < 1 || subsample < 2) throw Error("BadHyperparameter", "invalid forest parameters");
    if (contamination < 0.0 || contamination >= 0.5)
        throw Error("BadContamination", "contamination must be in [0, 0.5)");
    if (contamination == 0.0) return std::vector<bool>(x.n_rows, true);

    std::size_t psi = std::min<std::size_t>(static_cast<std::size_t>(subsample), x.n_rows);
    int depth_limit =
        static_cast<int>(std::ceil(std::log2(std::max<double>(2.0, static_cast<double>(psi)))));

    std::vector<double> mean_path(x.n_rows, 0.0);
    for (int t = 0; t < trees; ++t) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> pool(x.n_rows);
        std::iota(pool.begin(), pool.end(), 0);
        for (std::size_t i = 0; i < psi; ++i)
            std::swap(pool[i], pool[i + rng.uniform_int(x.n_rows - i)]);
        pool.resize(psi);
        std::vector<IsoNode> nodes;
        grow_iso(nodes, x, pool, 0, depth_limit, rng);
        for (std::size_t r = 0; r < x.n_rows; ++r) mean_path[r] += iso_path(nodes, x.row(r));
    }
    double c = avg_path_length(static_cast<double>(psi));
    std::vector<double> score(x.n_rows);
    for (std::size_t r = 0; r < x.n_rows; ++r)
        score[r] = std::pow(2.0, -(mean_path[r] / static_cast<double>(trees)) / c);

    // nearest-rank quantile; everything strictly above it is dropped
    std::vector<double> sorted = score;
    std::sort(sorted.begin(), sorted.end());
    std::size_t rank = static_cast<std::size_t>(
        std::ceil((1.0 - contamination) * static_cast<double>(x.n_rows)));
    rank = std::min(std::max<std::size_t>(rank, 1), x.n_rows);
    double cutoff = sorted[rank - 1];

    std::vector<bool> keep(x.n_rows, true);
    for (std::size_t r = 0; r < x.n_rows; ++r)
        if (score[r] > cutoff) keep[r] = false;
    return keep;
}

// ---------------------------------------------------------------------------
// SMOTE

SmoteResult smote_oversample(const DataMatrix& x, const std::vector<int>& y, int k_neighbors,
                             const std::map<int, std::size_t>& target_counts,
                             std::uint64_t seed) {
    if (x.n_rows == 0 || y.size() != x.n_rows)
        throw Error("EmptyInput", "no rows or misaligned labels");
    if (k_neighbors < 1) throw Error("BadHyperparameter", "k_neighbors must be >= 1");

    SmoteResult out;
    out.x = x;
    out.y = y;

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);

    Rng rng(seed);
    for (auto& [cls, members] : by_class) {
        auto it = target_counts.find(cls);
        if (it == target_counts.end() || it->second <= members.size()) continue;
        if (members.size() < 2)
            throw Error("TooFewSamples",
                        "class " + std::to_string(cls) + " needs >= 2 samples for SMOTE");
        std::size_t deficit = it->second - members.size();

        // neighbour lists inside the class, Euclidean
        std::size_t m = members.size();
        std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_neighbors), m - 1);
        std::vector<std::vector<std::size_t>> nn(m);
        if (k > 0) {
            for (std::size_t a = 0; a < m; ++a) {
                std::vector<std::pair<double, std::size_t>> d;
                d.reserve(m - 1);
                for (std::size_t b = 0; b < m; ++b) {
                    if (a == b) continue;
                    double acc = 0.0;
                    const double* ra = x.row(members[a]);
                    const double* rb = x.row(members[b]);
                    for (std::size_t c = 0; c < x.n_cols; ++c) {
                        double diff = ra[c] - rb[c];
                        acc += diff * diff;
                    }
                    d.emplace_back(acc, members[b]);
                }
                std::partial_sort(d.begin(), d.begin() + static_cast<long>(k), d.end());
                for (std::size_t i = 0; i < k; ++i) nn[a].push_back(d[i].second);
            }
        }

        for (std::size_t s = 0; s < deficit; ++s) {
            std::size_t a = rng.uniform_int(m);
            std::size_t base = members[a];
            std::size_t other = k > 0 ? nn[a][rng.uniform_int(k)] : base;
            double lambda = rng.uniform();
            std::vector<double> row(x.n_cols);
            const double* rb = x.row(base);
            const double* ro = x.row(other);
            for (std::size_t c = 0; c < x.n_cols; ++c)
                row[c] = rb[c] + lambda * (ro[c] - rb[c]);
            out.x.push_row(row);
            out.y.push_back(cls);
            out.parents.emplace_back(base, other);
        }
    }
    return out;
}

SmoteResult smote_oversample(const DataMatrix& x, const std::vector<int>& y, int k_neighbors,
                             std::uint64_t seed) {
    std::map<int, std::size_t> counts;
    for (int v : y) ++counts[v];
    std::size_t majority = 0;
    for (const auto& [cls, n] : counts) majority = std::max(majority, n);
    std::map<int, std::size_t> targets;
    for (const auto& [cls, n] : counts) targets[cls] = majority;
    return smote_oversample(x, y, k_neighbors, targets, seed);
}

ResampleResult regression_resample(const DataMatrix& x, const std::vector<double>& y, int n_bins,
                                   std::size_t per_bin_target, std::uint64_t seed) {
    if (x.n_rows == 0 || y.size() != x.n_rows)
        throw Error("EmptyInput", "no rows or misaligned labels");
    if (n_bins < 1) throw Error("BadHyperparameter", "n_bins must be >= 1");

    ResampleResult out;
    out.x = x;
    out.y = y;

    double lo = *std::min_element(y.begin(), y.end());
    double hi = *std::max_element(y.begin(), y.end());
    if (!(hi > lo)) {
        out.warnings.push_back("constant labels, nothing to balance");
        return out;
    }
    double width = (hi - lo) / static_cast<double>(n_bins);
    std::vector<std::vector<std::size_t>> bins(static_cast<std::size_t>(n_bins));
    for (std::size_t i = 0; i < y.size(); ++i) {
        auto b = static_cast<std::size_t>((y[i] - lo) / width);
        if (b >= bins.size()) b = bins.size() - 1;  // top edge
        bins[b].push_back(i);
    }

    Rng rng(seed);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        const auto& members = bins[b];
        if (members.empty()) continue;
        if (members.size() >= per_bin_target) continue;
        if (members.size() < 2) {
            out.warnings.push_back("bin " + std::to_string(b) + " has a single sample, skipped");
            continue;
        }
        std::size_t m = members.size();
        std::size_t k = std::min<std::size_t>(5, m - 1);
        for (std::size_t s = members.size(); s < per_bin_target; ++s) {
            std::size_t a = rng.uniform_int(m);
            // nearest neighbours inside the bin
            std::vector<std::pair<double, std::size_t>> d;
            for (std::size_t o = 0; o < m; ++o) {
                if (o == a) continue;
                double acc = 0.0;
                const double* ra = x.row(members[a]);
                const double* ro = x.row(members[o]);
                for (std::size_t c = 0; c < x.n_cols; ++c) {
                    double diff = ra[c] - ro[c];
                    acc += diff * diff;
                }
                d.emplace_back(acc, members[o]);
            }
            std::partial_sort(d.begin(), d.begin() + static_cast<long>(k), d.end());
            std::size_t other = d[rng.uniform_int(k)].second;
            double lambda = rng.uniform();
            std::vector<double> row(x.n_cols);
            const double* rb = x.row(members[a]);
            const double* ro = x.row(other);
            for (std::size_t c = 0; c < x.n_cols; ++c)
                row[c] = rb[c] + lambda * (ro[c] - rb[c]);
            out.x.push_row(row);
            // the label interpolates with the same lambda as the features
            out.y.push_back(y[members[a]] + lambda * (y[other] - y[members[a]]));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// pipeline

json PipelineConfig::to_json() const {
    return {{"outliers", outliers.to_json()},
            {"scaler", scaler_name(scaler)},
            {"balance", balance == BalanceKind::Smote ? "smote" : "none"},
            {"smote_k", smote_k},
            {"model", model.to_json()},
            {"seed", seed}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    if (j.contains("outliers")) c.outliers = OutlierConfig::from_json(j.at("outliers"));
    c.scaler = scaler_from_name(j.value("scaler", "none"));
    std::string balance = j.value("balance", "none");
    if (balance == "smote")
        c.balance = BalanceKind::Smote;
    else if (balance != "none")
        throw Error("BadHyperparameter", "unknown balance mode: " + balance);
    c.smote_k = j.value("smote_k", 5);
    if (j.contains("model")) c.model = models::ModelSpec::from_json(j.at("model"));
    c.seed = j.value("seed", std::uint64_t{0});
    return c;
}

DataMatrix Pipeline::prepare_train(const DataMatrix& train, std::vector<std::size_t>& kept) {
    std::vector<bool> keep(train.n_rows, true);
    auto apply = [&](const std::vector<bool>& mask) {
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (!mask[i]) keep[i] = false;
    };
    using K = OutlierConfig::Kind;
    if (config_.outliers.kind == K::Mad || config_.outliers.kind == K::Both)
        apply(mad_outlier_mask(train, config_.outliers.mad_threshold));
    if (config_.outliers.kind == K::IsolationForest || config_.outliers.kind == K::Both)
        apply(isolation_forest_mask(train, config_.outliers.trees, config_.outliers.subsample,
                                    config_.outliers.contamination,
                                    Rng::derive(config_.seed, 101)));
    kept.clear();
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) kept.push_back(i);
    if (kept.empty()) throw Error("EmptyInput", "outlier filtering removed every training row");
    return train.select_rows(kept);
}

void Pipeline::fit(const DataMatrix& train, const std::vector<int>& labels,
                   const std::vector<std::string>& roster) {
    if (train.n_rows == 0 || labels.size() != train.n_rows)
        throw Error("EmptyInput", "no rows or misaligned labels");
    std::vector<std::size_t> kept;
    DataMatrix x = prepare_train(train, kept);
    std::vector<int> y;
    y.reserve(kept.size());
    for (auto i : kept) y.push_back(labels[i]);

    scaler_ = Scaler(config_.scaler);
    scaler_.fit(x);
    DataMatrix scaled = scaler_.transform(x);

    if (config_.balance == BalanceKind::Smote) {
        auto res = smote_oversample(scaled, y, config_.smote_k, Rng::derive(config_.seed, 102));
        scaled = std::move(res.x);
        y = std::move(res.y);
    }

    auto spec = config_.model;
    spec.task = models::Task::Classification;
    if (spec.seed == 0) spec.seed = Rng::derive(config_.seed, 103);
    model_ = models::fit(spec, scaled, y, roster);
    fitted_ = true;
}

void Pipeline::fit_regression(const DataMatrix& train, const std::vector<double>& labels) {
    if (train.n_rows == 0 || labels.size() != train.n_rows)
        throw Error("EmptyInput", "no rows or misaligned labels");
    std::vector<std::size_t> kept;
    DataMatrix x = prepare_train(train, kept);
    std::vector<double> y;
    y.reserve(kept.size());
    for (auto i : kept) y.push_back(labels[i]);

    scaler_ = Scaler(config_.scaler);
    scaler_.fit(x);
    DataMatrix scaled = scaler_.transform(x);

    auto spec = config_.model;
    spec.task = models::Task::Regression;
    if (spec.seed == 0) spec.seed = Rng::derive(config_.seed, 103);
    model_ = models::fit_regression(spec, scaled, y);
    fitted_ = true;
}

const models::TrainedModel& Pipeline::model() const {
    if (!fitted_) throw Error("NotFitted", "pipeline not fitted");
    return model_;
}

std::vector<int> Pipeline::predict(const DataMatrix& rows) const {
    return model().predict(scaler_.transform(rows));
}

std::vector<std::vector<double>> Pipeline::predict_proba(const DataMatrix& rows) const {
    return model().predict_proba(scaler_.transform(rows));
}

std::vector<double> Pipeline::predict_value(const DataMatrix& rows) const {
    return model().predict_value(scaler_.transform(rows));
}

std::string Pipeline::fingerprint() const { return serialize(); }

std::string Pipeline::serialize() const {
    if (!fitted_) throw Error("NotFitted", "pipeline not fitted");
    json doc = {{"schema_version", 1},
                {"config", config_.to_json()},
                {"scaler",
                 {{"kind", scaler_name(scaler_.kind())},
                  {"offsets", scaler_.offsets()},
                  {"scales", scaler_.scales()}}},
                {"model", json::parse(model_.serialize())}};
    return doc.dump();
}

Pipeline Pipeline::deserialize(const std::string& bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::exception& e) {
        throw Error("CorruptDocument", e.what());
    }
    if (!doc.contains("schema_version")) throw Error("CorruptDocument", "missing schema_version");
    if (doc.at("schema_version").get<int>() != 1)
        throw Error("VersionMismatch", "unsupported pipeline schema_version");
    Pipeline p;
    try {
        p.config_ = PipelineConfig::from_json(doc.at("config"));
        const auto& sc = doc.at("scaler");
        p.scaler_ = Scaler::restore(scaler_from_name(sc.at("kind").get<std::string>()),
                                    sc.at("offsets").get<std::vector<double>>(),
                                    sc.at("scales").get<std::vector<double>>());
        p.model_ = models::TrainedModel::deserialize(doc.at("model").dump());
    } catch (const json::exception& e) {
        throw Error("CorruptDocument", e.what());
    }
    p.fitted_ = true;
    return p;
}

}  // namespace rockmass::preprocess
