#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rockmass/eval.hpp"

using namespace rockmass;
using namespace rockmass::eval;

namespace {

const std::vector<std::string> kAB = {"A", "B"};
const std::vector<std::string> kABC = {"A", "B", "C"};

// independent brute-force metrics straight from the label vectors
struct Oracle {
    double accuracy, balanced_accuracy, precision_macro, f1;
};

Oracle brute_force(const std::vector<int>& yt, const std::vector<int>& yp, std::size_t C) {
    std::vector<double> tp(C, 0), fp(C, 0), fn(C, 0), support(C, 0);
    double hits = 0;
    for (std::size_t i = 0; i < yt.size(); ++i) {
        support[static_cast<std::size_t>(yt[i])] += 1;
        if (yt[i] == yp[i]) {
            hits += 1;
            tp[static_cast<std::size_t>(yt[i])] += 1;
        } else {
            fn[static_cast<std::size_t>(yt[i])] += 1;
            fp[static_cast<std::size_t>(yp[i])] += 1;
        }
    }
    double rec_sum = 0, prec_sum = 0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < C; ++c) {
        if (support[c] > 0) {
            rec_sum += tp[c] / support[c];
            ++present;
        }
        prec_sum += tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    }
    Oracle o;
    o.accuracy = hits / static_cast<double>(yt.size());
    o.balanced_accuracy = rec_sum / static_cast<double>(present);
    o.precision_macro = prec_sum / static_cast<double>(C);
    o.f1 = o.precision_macro + o.balanced_accuracy > 0
               ? 2 * o.precision_macro * o.balanced_accuracy /
                     (o.precision_macro + o.balanced_accuracy)
               : 0.0;
    return o;
}

}  // namespace

TEST_CASE("confusion matrix and label checks") {
    auto cm = confusion_matrix({0, 0, 1, 1, 1}, {0, 1, 1, 1, 0}, kAB);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 0) == 1);
    CHECK(cm.at(1, 1) == 2);
    CHECK(cm.n() == 5);

    CHECK_THROWS_WITH_AS(confusion_matrix({0, 2}, {0, 0}, kAB),
                         doctest::Contains("UnknownLabel"), Error);
    CHECK_THROWS_WITH_AS(classification_metrics(confusion_matrix({}, {}, kAB)),
                         doctest::Contains("EmptyMatrix"), Error);
}

TEST_CASE("metrics agree with a brute-force oracle on random predictions") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 30 + rng.uniform_int(200);
        std::vector<int> yt, yp;
        for (std::size_t i = 0; i < n; ++i) {
            yt.push_back(static_cast<int>(rng.uniform_int(3)));
            yp.push_back(static_cast<int>(rng.uniform_int(3)));
        }
        yt[0] = 0;  // ensure at least one A so the roster is sane
        auto rep = classification_metrics(confusion_matrix(yt, yp, kABC));
        auto o = brute_force(yt, yp, 3);
        CHECK(rep.accuracy == doctest::Approx(o.accuracy));
        CHECK(rep.balanced_accuracy == doctest::Approx(o.balanced_accuracy));
        CHECK(rep.precision_macro == doctest::Approx(o.precision_macro));
        CHECK(rep.f1_macro == doctest::Approx(o.f1));
    }
}

TEST_CASE("normalized matrices expose recall and precision") {
    auto cm = confusion_matrix({0, 0, 0, 0, 1, 1}, {0, 0, 0, 1, 1, 0}, kAB);
    auto rows = normalize(cm, Axis::Row);
    CHECK(rows[0] == doctest::Approx(0.75));  // recall of A on the diagonal
    CHECK(rows[3] == doctest::Approx(0.5));
    auto cols = normalize(cm, Axis::Column);
    CHECK(cols[0] == doctest::Approx(0.75));  // precision of A: 3 of 4 predicted A
    CHECK(cols[3] == doctest::Approx(0.5));

    // column normalization equals row normalization of the transpose
    ConfusionMatrix t;
    t.roster = cm.roster;
    t.counts.assign(4, 0);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) t.at(j, i) = cm.at(i, j);
    auto tr = normalize(t, Axis::Row);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(cols[i * 2 + j] == doctest::Approx(tr[j * 2 + i]));

    auto rep = classification_metrics(cm);
    CHECK(rep.per_class_recall[0] == doctest::Approx(0.75));
    CHECK(rep.per_class_precision[1] == doctest::Approx(0.5));
}

TEST_CASE("roc auc hand cases and rank invariance") {
    // classic example: one discordant pair out of four -> 0.75
    std::vector<int> y = {0, 0, 1, 1};
    std::vector<std::vector<double>> p = {{0.9, 0.1}, {0.6, 0.4}, {0.65, 0.35}, {0.2, 0.8}};
    CHECK(roc_auc_macro(y, p) == doctest::Approx(0.75));

    std::vector<std::vector<double>> perfect = {{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}, {0.1, 0.9}};
    CHECK(roc_auc_macro(y, perfect) == doctest::Approx(1.0));

    // all-tied scores give chance level
    std::vector<std::vector<double>> flat(4, {0.5, 0.5});
    CHECK(roc_auc_macro(y, flat) == doctest::Approx(0.5));

    // invariant under a strictly increasing transform of the scores
    auto warped = p;
    for (auto& row : warped)
        for (auto& v : row) v = std::exp(3.0 * v);
    CHECK(roc_auc_macro(y, warped) == doctest::Approx(roc_auc_macro(y, p)));

    CHECK_THROWS_WITH_AS(roc_auc_macro({1, 1, 1}, {{0, 1}, {0, 1}, {0, 1}}),
                         doctest::Contains("SingleClassTruth"), Error);
}

TEST_CASE("regression metrics hand case and degeneracies") {
    auto r = regression_metrics({1, 2, 3}, {1, 2, 4});
    CHECK(r.mse == doctest::Approx(1.0 / 3.0));
    CHECK(r.mae == doctest::Approx(1.0 / 3.0));
    CHECK(r.r2 == doctest::Approx(0.5));
    CHECK(r.residuals == std::vector<double>{0, 0, 1});

    CHECK_THROWS_WITH_AS(regression_metrics({2, 2, 2}, {1, 2, 3}),
                         doctest::Contains("DegenerateVariance"), Error);
    CHECK_THROWS_AS(regression_metrics({}, {}), Error);
}

TEST_CASE("qq points are standardized and ordered") {
    std::vector<double> res = {3.0, -1.0, 1.0, -3.0};
    auto pts = qq_points(res);
    REQUIRE(pts.size() == 4);
    // theoretical quantiles increase and are symmetric about zero
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].first > pts[i - 1].first);
    CHECK(pts[0].first == doctest::Approx(-pts[3].first));
    CHECK(pts[1].first == doctest::Approx(-pts[2].first));
    // observed values are the sorted residuals over the sample std
    double sd = std::sqrt(20.0 / 3.0);
    CHECK(pts[0].second == doctest::Approx(-3.0 / sd));
    CHECK(pts[3].second == doctest::Approx(3.0 / sd));
    // median plotting position maps to quantile ~0
    auto odd = qq_points({-1, 0, 1});
    CHECK(odd[1].first == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("log band flags factor-two misses") {
    std::vector<double> truth = {1.0, 1.0, 1.0};
    std::vector<double> pred = {1.0 + std::log10(2.1), 1.0 + std::log10(1.9),
                                1.0 - std::log10(2.5)};
    auto flags = log_band_outliers(truth, pred);
    CHECK(flags == std::vector<bool>{true, false, true});
}

TEST_CASE("linear correction recovers an affine bias") {
    std::vector<double> yhat = {1, 2, 3, 4};
    std::vector<double> y = {2, 4, 6, 8};  // y = 2*yhat
    auto c = residual_linear_correction(y, yhat);
    CHECK(c.a == doctest::Approx(2.0));
    CHECK(c.b == doctest::Approx(0.0).epsilon(1e-9));
    for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(c.corrected[i] == doctest::Approx(y[i]));

    // least squares never increases the mse
    Rng rng(77);
    std::vector<double> yt, yp;
    for (int i = 0; i < 100; ++i) {
        double t = rng.uniform_range(0, 10);
        yt.push_back(t);
        yp.push_back(0.7 * t + 1.5 + rng.normal());
    }
    auto fix = residual_linear_correction(yt, yp);
    auto before = regression_metrics(yt, yp);
    auto after = regression_metrics(yt, fix.corrected);
    CHECK(after.mse <= before.mse + 1e-12);

    CHECK_THROWS_AS(residual_linear_correction({1, 2}, {1, 2}), Error);
}

TEST_CASE("stratified split keeps per-class proportions") {
    // class counts matching the reference section totals
    const std::vector<std::size_t> counts = {539, 10057, 9208, 2571, 642, 260};
    std::vector<int> labels;
    for (std::size_t c = 0; c < counts.size(); ++c)
        labels.insert(labels.end(), counts[c], static_cast<int>(c));

    auto [train, test] = stratified_split(labels, 0.25, 1);
    CHECK(train.size() == 17457);
    CHECK(test.size() == 5820);

    std::set<std::size_t> seen(train.begin(), train.end());
    seen.insert(test.begin(), test.end());
    CHECK(seen.size() == labels.size());  // exact partition
    CHECK(std::is_sorted(train.begin(), train.end()));

    std::vector<std::size_t> test_per_class(6, 0);
    for (auto i : test) ++test_per_class[static_cast<std::size_t>(labels[i])];
    const std::vector<std::size_t> expected = {135, 2514, 2302, 643, 161, 65};
    CHECK(test_per_class == expected);

    auto [tr2, te2] = stratified_split(labels, 0.25, 1);
    CHECK(te2 == test);  // seeded
    auto [tr0, te0] = stratified_split(labels, 0.0, 1);
    CHECK(te0.empty());
    CHECK(tr0.size() == labels.size());

    CHECK_THROWS_WITH_AS(stratified_split({0, 0, 1}, 0.25, 1),
                         doctest::Contains("ClassTooSmall"), Error);
}

TEST_CASE("stratified folds balance every class") {
    std::vector<int> labels;
    for (int i = 0; i < 47; ++i) labels.push_back(0);
    for (int i = 0; i < 23; ++i) labels.push_back(1);
    auto folds = stratified_folds(labels, 5, 3);
    REQUIRE(folds.size() == labels.size());
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<int> per_fold(5, 0);
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) ++per_fold[static_cast<std::size_t>(folds[i])];
        int lo = *std::min_element(per_fold.begin(), per_fold.end());
        int hi = *std::max_element(per_fold.begin(), per_fold.end());
        CHECK(hi - lo <= 1);
    }
    CHECK(stratified_folds(labels, 5, 3) == folds);
    CHECK_THROWS_WITH_AS(stratified_folds({0, 0, 0, 1, 1}, 3, 1),
                         doctest::Contains("ClassTooSmall"), Error);
}

TEST_CASE("cross validation runs end to end") {
    Rng rng(55);
    DataMatrix x({"a", "b"}, 0);
    std::vector<int> y;
    for (int i = 0; i < 120; ++i) {
        int cls = i % 2;
        x.push_row({cls * 3.0 + rng.normal() * 0.5, rng.normal()});
        y.push_back(cls);
    }
    preprocess::PipelineConfig cfg;
    cfg.model.kind = models::ModelKind::Knn;
    cfg.model.hyper = {{"k", 3}};
    cfg.scaler = preprocess::ScalerKind::Standard;

    auto cv = kfold_cv(cfg, x, y, kAB, 4, 7);
    REQUIRE(cv.fold_metrics.size() == 4);
    CHECK(cv.min <= cv.mean);
    CHECK(cv.mean <= cv.max);
    CHECK(cv.mean > 0.9);
    std::set<int> fold_ids(cv.fold_of_sample.begin(), cv.fold_of_sample.end());
    CHECK(fold_ids.size() == 4);

    auto again = kfold_cv(cfg, x, y, kAB, 4, 7);
    CHECK(again.to_json() == cv.to_json());

    // regression flavour on a clean linear target
    DataMatrix xr({"a"}, 0);
    std::vector<double> yr;
    for (int i = 0; i < 80; ++i) {
        double v = rng.uniform_range(-1, 1);
        xr.push_row({v});
        yr.push_back(3.0 * v + 0.2);
    }
    preprocess::PipelineConfig rcfg;
    rcfg.model.kind = models::ModelKind::LinearRegression;
    rcfg.model.task = models::Task::Regression;
    auto rcv = kfold_cv_regression(rcfg, xr, yr, 4, 2);
    REQUIRE(rcv.fold_regression.size() == 4);
    CHECK(rcv.mean > 0.99);
}

TEST_CASE("zone-filtered metrics select the requested tag") {
    using qsystem::ZoneTag;
    std::vector<int> yt = {0, 0, 1, 1, 1, 0};
    std::vector<int> yp = {0, 1, 1, 1, 0, 0};
    std::vector<ZoneTag> z = {ZoneTag::Regular,    ZoneTag::Transition, ZoneTag::Regular,
                              ZoneTag::Transition, ZoneTag::Regular,    ZoneTag::Regular};
    auto reg = zone_filtered_metrics(yt, yp, z, ZoneTag::Regular, kAB);
    // regular subset: truths {0,1,1,0} vs preds {0,1,0,0}
    CHECK(reg.accuracy == doctest::Approx(0.75));
    auto tra = zone_filtered_metrics(yt, yp, z, ZoneTag::Transition, kAB);
    CHECK(tra.accuracy == doctest::Approx(0.5));

    std::vector<ZoneTag> all_reg(yt.size(), ZoneTag::Regular);
    CHECK_THROWS_WITH_AS(zone_filtered_metrics(yt, yp, all_reg, ZoneTag::Transition, kAB),
                         doctest::Contains("EmptySubset"), Error);
}
