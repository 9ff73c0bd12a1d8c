#include "rockmass/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace rockmass::eval {

using nlohmann::json;

std::size_t ConfusionMatrix::n() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

json ConfusionMatrix::to_json() const {
    json rows = json::array();
    for (std::size_t t = 0; t < C(); ++t) {
        json row = json::array();
        for (std::size_t p = 0; p < C(); ++p) row.push_back(at(t, p));
        rows.push_back(row);
    }
    return {{"roster", roster}, {"counts", rows}};
}

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 const std::vector<std::string>& roster) {
    if (y_true.size() != y_pred.size()) throw Error("BadValue", "misaligned label vectors");
    ConfusionMatrix cm;
    cm.roster = roster;
    cm.counts.assign(roster.size() * roster.size(), 0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        int t = y_true[i], p = y_pred[i];
        if (t < 0 || p < 0 || t >= static_cast<int>(roster.size()) ||
            p >= static_cast<int>(roster.size()))
            throw Error("UnknownLabel", "label outside roster");
        ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }
    return cm;
}

std::vector<double> normalize(const ConfusionMatrix& cm, Axis axis) {
    std::size_t c = cm.C();
    std::vector<double> out(c * c, 0.0);
    for (std::size_t t = 0; t < c; ++t)
        for (std::size_t p = 0; p < c; ++p) {
            std::size_t denom = 0;
            for (std::size_t k = 0; k < c; ++k)
                denom += axis == Axis::Row ? cm.at(t, k) : cm.at(k, p);
            if (denom > 0)
                out[t * c + p] = static_cast<double>(cm.at(t, p)) / static_cast<double>(denom);
        }
    return out;
}

json MetricsReport::to_json() const {
    json j = {{"accuracy", accuracy},
              {"balanced_accuracy", balanced_accuracy},
              {"precision_macro", precision_macro},
              {"f1_macro", f1_macro},
              {"f1_macro_per_class", f1_macro_per_class},
              {"per_class_recall", per_class_recall},
              {"per_class_precision", per_class_precision},
              {"warnings", warnings}};
    if (roc_auc_macro) j["roc_auc_macro"] = *roc_auc_macro;
    return j;
}

MetricsReport classification_metrics(const ConfusionMatrix& cm) {
    MetricsReport m;
    std::size_t c = cm.C();
    std::size_t total = cm.n();
    if (total == 0) throw Error("EmptyMatrix", "empty confusion matrix");

    std::size_t correct = 0;
    for (std::size_t k = 0; k < c; ++k) correct += cm.at(k, k);
    m.accuracy = static_cast<double>(correct) / static_cast<double>(total);

    m.per_class_recall.assign(c, 0.0);
    m.per_class_precision.assign(c, 0.0);
    double recall_sum = 0.0, precision_sum = 0.0, f1_sum = 0.0;
    std::size_t classes_present = 0, classes_predicted = 0;
    for (std::size_t k = 0; k < c; ++k) {
        std::size_t row = 0, col = 0;
        for (std::size_t j = 0; j < c; ++j) {
            row += cm.at(k, j);
            col += cm.at(j, k);
        }
        if (row > 0) {
            m.per_class_recall[k] = static_cast<double>(cm.at(k, k)) / static_cast<double>(row);
            recall_sum += m.per_class_recall[k];
            ++classes_present;
        } else {
            m.warnings.push_back("class " + cm.roster[k] + " absent from y_true");
        }
        if (col > 0) {
            m.per_class_precision[k] = static_cast<double>(cm.at(k, k)) / static_cast<double>(col);
            precision_sum += m.per_class_precision[k];
            ++classes_predicted;
        }
        double pr = m.per_class_precision[k], rc = m.per_class_recall[k];
        if (pr + rc > 0.0) f1_sum += 2.0 * pr * rc / (pr + rc);
    }
    if (classes_present == 0) throw Error("EmptyMatrix", "no classes present");
    // macro recall skips classes absent from y_true; macro precision averages
    // over all roster classes with never-predicted classes contributing 0
    m.balanced_accuracy = recall_sum / static_cast<double>(classes_present);
    m.precision_macro = precision_sum / static_cast<double>(c);
    double p = m.precision_macro, r = m.balanced_accuracy;
    m.f1_macro = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    m.f1_macro_per_class = f1_sum / static_cast<double>(c);
    if (classes_predicted < c) m.warnings.push_back("some classes never predicted");
    return m;
}

double roc_auc_macro(const std::vector<int>& y_true,
                     const std::vector<std::vector<double>>& proba) {
    if (y_true.empty() || proba.size() != y_true.size())
        throw Error("BadValue", "misaligned inputs");
    std::size_t n = y_true.size();
    std::size_t c = proba[0].size();
    double sum = 0.0;
    std::size_t eligible = 0;
    for (std::size_t cls = 0; cls < c; ++cls) {
        std::size_t n_pos = 0;
        for (int y : y_true)
            if (static_cast<std::size_t>(y) == cls) ++n_pos;
        std::size_t n_neg = n - n_pos;
        if (n_pos == 0 || n_neg == 0) continue;

        // average ranks with tie correction
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return proba[a][cls] < proba[b][cls];
        });
        std::vector<double> rank(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && proba[order[j + 1]][cls] == proba[order[i]][cls]) ++j;
            double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
            i = j + 1;
        }
        double rank_pos = 0.0;
        for (std::size_t s = 0; s < n; ++s)
            if (static_cast<std::size_t>(y_true[s]) == cls) rank_pos += rank[s];
        double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
        sum += (rank_pos - np * (np + 1.0) / 2.0) / (np * nn);
        ++eligible;
    }
    if (eligible == 0)
        throw Error("SingleClassTruth", "no class has both positives and negatives");
    return sum / static_cast<double>(eligible);
}

json RegressionReport::to_json() const {
    return {{"r2", r2}, {"mse", mse}, {"mae", mae}};
}

RegressionReport regression_metrics(const std::vector<double>& y_true,
                                    const std::vector<double>& y_pred) {
    if (y_true.size() < 2 || y_true.size() != y_pred.size())
        throw Error("BadValue", "need at least 2 aligned points");
    RegressionReport r;
    double n = static_cast<double>(y_true.size());
    double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    r.residuals.resize(y_true.size());
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        double e = y_pred[i] - y_true[i];
        r.residuals[i] = e;
        ss_res += e * e;
        r.mae += std::abs(e);
        double d = y_true[i] - mean;
        ss_tot += d * d;
    }
    r.mse = ss_res / n;
    r.mae /= n;
    if (!(ss_tot > 0.0)) throw Error("DegenerateVariance", "constant y_true, R2 undefined");
    r.r2 = 1.0 - ss_res / ss_tot;
    return r;
}

namespace {

// Acklam's rational approximation of the standard normal quantile
double norm_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > phigh) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

std::vector<std::pair<double, double>> qq_points(const std::vector<double>& residuals) {
    if (residuals.empty()) throw Error("EmptyInput", "no residuals");
    double n = static_cast<double>(residuals.size());
    double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / n;
    double ss = 0.0;
    for (double r : residuals) ss += (r - mean) * (r - mean);
    double sd = residuals.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;

    std::vector<double> sorted = residuals;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(residuals.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        double p = (static_cast<double>(i) + 0.5) / n;
        double z = sd > 0.0 ? (sorted[i] - mean) / sd : 0.0;
        out.emplace_back(norm_quantile(p), z);
    }
    return out;
}

std::vector<bool> log_band_outliers(const std::vector<double>& y_true_log,
                                    const std::vector<double>& y_pred_log, double band) {
    if (y_true_log.size() != y_pred_log.size()) throw Error("BadValue", "misaligned inputs");
    std::vector<bool> out(y_true_log.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::abs(y_pred_log[i] - y_true_log[i]) > band;
    return out;
}

LinearCorrection residual_linear_correction(const std::vector<double>& y_true,
                                            const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.size() < 3)
        throw Error("BadValue", "need at least 3 aligned points");
    double n = static_cast<double>(y_true.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        sx += y_pred[i];
        sy += y_true[i];
        sxx += y_pred[i] * y_pred[i];
        sxy += y_pred[i] * y_true[i];
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12)
        throw Error("DegeneratePredictions", "zero-variance predictions");
    LinearCorrection lc;
    lc.a = (n * sxy - sx * sy) / denom;
    lc.b = (sy - lc.a * sx) / n;
    lc.corrected.resize(y_true.size());
    for (std::size_t i = 0; i < y_true.size(); ++i) lc.corrected[i] = lc.a * y_pred[i] + lc.b;
    return lc;
}

// ---------------------------------------------------------------------------
// splits and cross-validation

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, double test_fraction, std::uint64_t seed) {
    if (labels.empty()) throw Error("EmptyInput", "no labels");
    if (test_fraction < 0.0 || test_fraction >= 1.0)
        throw Error("BadValue", "test_fraction must be in [0, 1)");

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    std::vector<std::size_t> train, test;
    Rng rng(seed);
    for (auto& [cls, members] : by_class) {
        if (test_fraction > 0.0 && members.size() < 2)
            throw Error("ClassTooSmall",
                        "class " + std::to_string(cls) + " has fewer than 2 samples");
        rng.shuffle(members);
        // round half up keeps per-class proportions within one sample
        std::size_t n_test = static_cast<std::size_t>(
            std::floor(static_cast<double>(members.size()) * test_fraction + 0.5));
        for (std::size_t i = 0; i < members.size(); ++i)
            (i < n_test ? test : train).push_back(members[i]);
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed) {
    if (k < 2) throw Error("BadValue", "k must be >= 2");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (const auto& [cls, members] : by_class)
        if (members.size() < static_cast<std::size_t>(k))
            throw Error("ClassTooSmall",
                        "class " + std::to_string(cls) + " has fewer members than folds");

    std::vector<int> fold(labels.size(), -1);
    Rng rng(seed);
    for (auto& [cls, members] : by_class) {
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i)
            fold[members[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return fold;
}

json CVResult::to_json() const {
    json folds = json::array();
    for (const auto& m : fold_metrics) folds.push_back(m.to_json());
    for (const auto& r : fold_regression) folds.push_back(r.to_json());

    // per-metric mean/min/max across folds
    json summary = json::object();
    auto add = [&](const std::string& name, const std::vector<double>& vals) {
        if (vals.empty()) return;
        double mn = vals[0], mx = vals[0], sum = 0.0;
        for (double v : vals) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
            sum += v;
        }
        summary[name] = {{"mean", sum / static_cast<double>(vals.size())},
                         {"min", mn},
                         {"max", mx}};
    };
    if (!fold_metrics.empty()) {
        std::vector<double> acc, bal, prec, f1, auc;
        for (const auto& m : fold_metrics) {
            acc.push_back(m.accuracy);
            bal.push_back(m.balanced_accuracy);
            prec.push_back(m.precision_macro);
            f1.push_back(m.f1_macro);
            if (m.roc_auc_macro) auc.push_back(*m.roc_auc_macro);
        }
        add("accuracy", acc);
        add("balanced_accuracy", bal);
        add("precision_macro", prec);
        add("f1_macro", f1);
        add("roc_auc_macro", auc);
    } else {
        std::vector<double> r2, mse, mae;
        for (const auto& r : fold_regression) {
            r2.push_back(r.r2);
            mse.push_back(r.mse);
            mae.push_back(r.mae);
        }
        add("r2", r2);
        add("mse", mse);
        add("mae", mae);
    }
    return {{"folds", folds},
            {"summary", summary},
            {"fold_of_sample", fold_of_sample},
            {"mean", mean},
            {"min", min},
            {"max", max}};
}

CVResult kfold_cv(const preprocess::PipelineConfig& config, const DataMatrix& x,
                  const std::vector<int>& y, const std::vector<std::string>& roster, int k,
                  std::uint64_t seed) {
    if (x.n_rows != y.size()) throw Error("BadValue", "misaligned labels");
    CVResult result;
    result.fold_of_sample = stratified_folds(y, k, seed);

    for (int f = 0; f < k; ++f) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t i = 0; i < y.size(); ++i)
            (result.fold_of_sample[i] == f ? test_idx : train_idx).push_back(i);
        std::vector<int> y_train, y_test;
        for (auto i : train_idx) y_train.push_back(y[i]);
        for (auto i : test_idx) y_test.push_back(y[i]);

        auto fold_config = config;
        fold_config.seed = Rng::derive(seed, static_cast<std::uint64_t>(f) + 1);
        preprocess::Pipeline pipe(fold_config);
        pipe.fit(x.select_rows(train_idx), y_train, roster);

        auto test = x.select_rows(test_idx);
        auto cm = confusion_matrix(y_test, pipe.predict(test), roster);
        auto metrics = classification_metrics(cm);
        try {
            metrics.roc_auc_macro = roc_auc_macro(y_test, pipe.predict_proba(test));
        } catch (const Error&) {
            metrics.warnings.push_back("ROC-AUC undefined for this fold");
        }
        result.fold_metrics.push_back(std::move(metrics));
    }

    result.min = result.max = result.fold_metrics[0].balanced_accuracy;
    for (const auto& m : result.fold_metrics) {
        result.mean += m.balanced_accuracy;
        result.min = std::min(result.min, m.balanced_accuracy);
        result.max = std::max(result.max, m.balanced_accuracy);
    }
    result.mean /= static_cast<double>(k);
    return result;
}

CVResult kfold_cv_regression(const preprocess::PipelineConfig& config, const DataMatrix& x,
                             const std::vector<double>& y, int k, std::uint64_t seed) {
    if (x.n_rows != y.size()) throw Error("BadValue", "misaligned labels");
    if (k < 2) throw Error("BadValue", "k must be >= 2");
    if (x.n_rows < static_cast<std::size_t>(2 * k))
        throw Error("ClassTooSmall", "too few samples for the requested folds");

    CVResult result;
    // regression folds come from a plain shuffled round-robin
    std::vector<std::size_t> order(x.n_rows);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    result.fold_of_sample.assign(x.n_rows, -1);
    for (std::size_t i = 0; i < order.size(); ++i)
        result.fold_of_sample[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));

    for (int f = 0; f < k; ++f) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t i = 0; i < y.size(); ++i)
            (result.fold_of_sample[i] == f ? test_idx : train_idx).push_back(i);
        std::vector<double> y_train, y_test;
        for (auto i : train_idx) y_train.push_back(y[i]);
        for (auto i : test_idx) y_test.push_back(y[i]);

        auto fold_config = config;
        fold_config.seed = Rng::derive(seed, static_cast<std::uint64_t>(f) + 1);
        preprocess::Pipeline pipe(fold_config);
        pipe.fit_regression(x.select_rows(train_idx), y_train);
        result.fold_regression.push_back(
            regression_metrics(y_test, pipe.predict_value(x.select_rows(test_idx))));
    }

    result.min = result.max = result.fold_regression[0].r2;
    for (const auto& r : result.fold_regression) {
        result.mean += r.r2;
        result.min = std::min(result.min, r.r2);
        result.max = std::max(result.max, r.r2);
    }
    result.mean /= static_cast<double>(k);
    return result;
}

MetricsReport zone_filtered_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                    const std::vector<qsystem::ZoneTag>& zones,
                                    qsystem::ZoneTag zone,
                                    const std::vector<std::string>& roster) {
    if (y_true.size() != y_pred.size() || y_true.size() != zones.size())
        throw Error("BadValue", "misaligned inputs");
    std::vector<int> t, p;
    for (std::size_t i = 0; i < zones.size(); ++i) {
        if (zones[i] != zone) continue;
        t.push_back(y_true[i]);
        p.push_back(y_pred[i]);
    }
    if (t.empty()) throw Error("EmptySubset", "no samples in the requested zone");
    return classification_metrics(confusion_matrix(t, p, roster));
}

}  // namespace rockmass::eval
