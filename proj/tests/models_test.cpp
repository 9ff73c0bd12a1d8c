#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rockmass/models.hpp"

using namespace rockmass;
using namespace rockmass::models;

namespace {

DataMatrix matrix(const std::vector<std::string>& names,
                  const std::vector<std::vector<double>>& rows) {
    DataMatrix m(names, rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < names.size(); ++c) m.at(r, c) = rows[r][c];
    return m;
}

// two gaussian blobs per class, linearly separable
struct Blobs {
    DataMatrix x{std::vector<std::string>{"f0", "f1"}, 0};
    std::vector<int> y;
    std::vector<std::string> roster = {"lo", "hi"};
};

Blobs blobs(std::size_t n_per_class, double gap, std::uint64_t seed) {
    Blobs b;
    Rng rng(seed);
    for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
        int cls = i % 2;
        double cx = cls ? gap : -gap;
        b.x.push_row({cx + rng.normal() * 0.5, rng.normal() * 0.5});
        b.y.push_back(cls);
    }
    return b;
}

ModelSpec spec_of(ModelKind kind, nlohmann::json hyper = nlohmann::json::object(),
                  std::uint64_t seed = 1) {
    ModelSpec s;
    s.kind = kind;
    s.hyper = std::move(hyper);
    s.seed = seed;
    return s;
}

}  // namespace

TEST_CASE("kind names round trip and unknown keys are rejected") {
    for (const char* n : {"knn", "decision_tree", "random_forest", "extra_trees", "gbt",
                          "logistic_regression", "linear_regression", "dummy", "voting"})
        CHECK(kind_name(kind_from_name(n)) == n);
    CHECK_THROWS_WITH_AS(kind_from_name("svm"), doctest::Contains("UnknownKind"), Error);

    auto s = spec_of(ModelKind::Knn, {{"k", 3}, {"bogus", 1}});
    CHECK_THROWS_WITH_AS(s.resolved_hyper(), doctest::Contains("BadHyperparameter"), Error);
    CHECK(spec_of(ModelKind::Knn).resolved_hyper().at("k") == 5);
}

TEST_CASE("dummy predicts the majority class with its empirical distribution") {
    auto x = matrix({"a"}, {{0}, {1}, {2}, {3}, {4}});
    std::vector<int> y = {1, 1, 1, 0, 0};
    auto m = fit(spec_of(ModelKind::Dummy), x, y, {"A", "B"});
    for (int p : m.predict(x)) CHECK(p == 1);
    auto proba = m.predict_proba(x);
    CHECK(proba[0][0] == doctest::Approx(0.4));
    CHECK(proba[0][1] == doctest::Approx(0.6));
}

TEST_CASE("knn memorizes at k=1 and votes by hand at k=3") {
    auto x = matrix({"a", "b"}, {{0, 0}, {1, 0}, {0, 1}, {5, 5}, {6, 5}, {5, 6}});
    std::vector<int> y = {0, 0, 0, 1, 1, 1};
    auto m1 = fit(spec_of(ModelKind::Knn, {{"k", 1}}), x, y, {"A", "B"});
    CHECK(m1.predict(x) == y);

    // hand case: neighbours of (0,0) in manhattan order are A(0.2), B(1,0), B(0,1)
    auto xs = matrix({"a", "b"}, {{0.2, 0}, {1, 0}, {0, 1}, {5, 5}});
    std::vector<int> ys = {0, 1, 1, 1};
    auto m3 = fit(spec_of(ModelKind::Knn, {{"k", 3}, {"distance_metric", "manhattan"}}), xs, ys,
                  {"A", "B"});
    auto q = matrix({"a", "b"}, {{0, 0}});
    CHECK(m3.predict(q)[0] == 1);  // votes A,B,B
    auto k1 = fit(spec_of(ModelKind::Knn, {{"k", 1}}), xs, ys, {"A", "B"});
    CHECK(k1.predict(q)[0] == 0);

    // k = n degenerates into the majority vote everywhere
    auto kn = fit(spec_of(ModelKind::Knn, {{"k", 4}, {"weights", "uniform"}}), xs, ys, {"A", "B"});
    auto far = matrix({"a", "b"}, {{100, 100}, {-100, -100}});
    auto pf = kn.predict(far);
    CHECK(pf[0] == 1);
    CHECK(pf[1] == 1);
}

TEST_CASE("tree ensembles separate well-separated blobs") {
    auto b = blobs(60, 3.0, 21);
    for (auto kind : {ModelKind::DecisionTree, ModelKind::RandomForest, ModelKind::ExtraTrees,
                      ModelKind::GradientBoostedTrees, ModelKind::LogisticRegression}) {
        auto hyper = nlohmann::json::object();
        if (kind == ModelKind::RandomForest || kind == ModelKind::ExtraTrees)
            hyper["n_trees"] = 30;
        auto m = fit(spec_of(kind, hyper, 7), b.x, b.y, b.roster);
        auto pred = m.predict(b.x);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == b.y[i];
        CHECK(static_cast<double>(hits) / static_cast<double>(pred.size()) >= 0.99);

        auto proba = m.predict_proba(b.x);
        for (const auto& row : proba) {
            double s = 0;
            for (double p : row) {
                s += p;
                CHECK(p >= 0.0);
            }
            CHECK(s == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("tree importances concentrate on the informative feature") {
    Rng rng(4);
    DataMatrix x({"signal", "noise"}, 0);
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
        int cls = i % 2;
        x.push_row({cls * 4.0 + rng.normal() * 0.3, rng.normal()});
        y.push_back(cls);
    }
    auto m = fit(spec_of(ModelKind::RandomForest, {{"n_trees", 20}}, 3), x, y, {"A", "B"});
    auto imp = m.feature_importances();
    REQUIRE(imp.size() == 2);
    CHECK(imp[0] > imp[1]);
    CHECK(imp[0] + imp[1] == doctest::Approx(1.0));
}

TEST_CASE("regression learners recover a linear map") {
    Rng rng(13);
    DataMatrix x({"a", "b"}, 0);
    std::vector<double> y;
    for (int i = 0; i < 150; ++i) {
        double a = rng.uniform_range(-2, 2), b = rng.uniform_range(-2, 2);
        x.push_row({a, b});
        y.push_back(2.0 * a - 0.5 * b + 1.0);
    }
    ModelSpec lin = spec_of(ModelKind::LinearRegression);
    lin.task = Task::Regression;
    auto m = fit_regression(lin, x, y);
    auto pred = m.predict_value(x);
    for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(pred[i] == doctest::Approx(y[i]).epsilon(1e-6));

    ModelSpec gbt = spec_of(ModelKind::GradientBoostedTrees, {{"n_rounds", 80}}, 2);
    gbt.task = Task::Regression;
    auto g = fit_regression(gbt, x, y);
    auto gp = g.predict_value(x);
    double sse = 0, sst = 0, mean = 0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        sse += (gp[i] - y[i]) * (gp[i] - y[i]);
        sst += (y[i] - mean) * (y[i] - mean);
    }
    CHECK(1.0 - sse / sst > 0.9);

    // a single-class training set cannot support a discriminative fit
    DataMatrix bad({"a", "b"}, 0);
    std::vector<int> by;
    for (int i = 0; i < 10; ++i) {
        bad.push_row({static_cast<double>(i), 1.0});
        by.push_back(0);
    }
    CHECK_THROWS_WITH_AS(
        fit(spec_of(ModelKind::LogisticRegression), bad, by, {"A", "B"}),
        doctest::Contains("DegenerateTraining"), Error);
}

TEST_CASE("voting blends members and enforces ensemble rules") {
    auto b = blobs(40, 3.0, 8);
    nlohmann::json members = nlohmann::json::array();
    members.push_back({{"model", {{"kind", "knn"}, {"hyper", {{"k", 3}}}}}});
    members.push_back({{"model", {{"kind", "decision_tree"}}}});
    members.push_back({{"model", {{"kind", "logistic_regression"}}}});

    for (const char* mode : {"soft", "hard"}) {
        auto m = fit(spec_of(ModelKind::Voting, {{"members", members}, {"vote_mode", mode}}, 5),
                     b.x, b.y, b.roster);
        auto pred = m.predict(b.x);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == b.y[i];
        CHECK(static_cast<double>(hits) / static_cast<double>(pred.size()) >= 0.98);
    }

    nlohmann::json one = nlohmann::json::array({members[0]});
    CHECK_THROWS_WITH_AS(
        fit(spec_of(ModelKind::Voting, {{"members", one}}), b.x, b.y, b.roster),
        doctest::Contains("EmptyEnsemble"), Error);
}

TEST_CASE("serialization round trips and rejects corrupt documents") {
    auto b = blobs(50, 2.5, 33);
    nlohmann::json members = nlohmann::json::array();
    members.push_back(
        {{"model", {{"kind", "knn"}, {"hyper", {{"k", 3}}}}}, {"scaler", "standard"}});
    members.push_back({{"model", {{"kind", "extra_trees"}, {"hyper", {{"n_trees", 15}}}}}});
    auto m = fit(spec_of(ModelKind::Voting, {{"members", members}}, 11), b.x, b.y, b.roster);

    auto doc = m.serialize();
    auto back = TrainedModel::deserialize(doc);
    CHECK(back.roster() == m.roster());
    CHECK(back.feature_names() == m.feature_names());
    CHECK(back.predict(b.x) == m.predict(b.x));
    auto pa = m.predict_proba(b.x);
    auto pb = back.predict_proba(b.x);
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t c = 0; c < pa[i].size(); ++c) CHECK(pa[i][c] == pb[i][c]);
    CHECK(back.serialize() == doc);

    CHECK_THROWS_WITH_AS(TrainedModel::deserialize(doc.substr(0, doc.size() / 2)),
                         doctest::Contains("CorruptDocument"), Error);
    auto j = nlohmann::json::parse(doc);
    j["schema_version"] = 99;
    CHECK_THROWS_WITH_AS(TrainedModel::deserialize(j.dump()),
                         doctest::Contains("VersionMismatch"), Error);
}

TEST_CASE("same seed gives identical models, feature contract is enforced") {
    auto b = blobs(50, 1.0, 9);
    auto s = spec_of(ModelKind::RandomForest, {{"n_trees", 10}}, 77);
    auto m1 = fit(s, b.x, b.y, b.roster);
    auto m2 = fit(s, b.x, b.y, b.roster);
    CHECK(m1.serialize() == m2.serialize());
    s.seed = 78;
    auto m3 = fit(s, b.x, b.y, b.roster);
    CHECK(m3.serialize() != m1.serialize());

    DataMatrix wrong({"f1", "f0"}, 1);
    CHECK_THROWS_WITH_AS(m1.predict(wrong), doctest::Contains("FeatureContractMismatch"), Error);

    DataMatrix empty({"f0", "f1"}, 0);
    std::vector<int> none;
    CHECK_THROWS_AS(fit(s, empty, none, b.roster), Error);
}
