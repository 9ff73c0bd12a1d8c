#include <doctest.h>

#include <cmath>

#include "rockmass/tuning.hpp"

using namespace rockmass;
using namespace rockmass::tuning;

namespace {

SearchSpace quadratic_space() {
    SearchSpace space;
    Param x;
    x.name = "x";
    x.kind = Param::Kind::RealRange;
    x.lo = -5;
    x.hi = 5;
    Param y = x;
    y.name = "y";
    space.params = {x, y};
    return space;
}

// peak at (2, -1), value 0
double quadratic(const nlohmann::json& c) {
    double x = c.at("x").get<double>(), y = c.at("y").get<double>();
    return -((x - 2) * (x - 2) + (y + 1) * (y + 1));
}

}  // namespace

TEST_CASE("samples respect the declared space") {
    SearchSpace space;
    Param k;
    k.name = "k";
    k.kind = Param::Kind::IntRange;
    k.lo = 1;
    k.hi = 15;
    Param lr;
    lr.name = "lr";
    lr.kind = Param::Kind::LogRealRange;
    lr.lo = 1e-4;
    lr.hi = 1.0;
    Param m;
    m.name = "metric";
    m.kind = Param::Kind::Categorical;
    m.choices = {"euclidean", "manhattan"};
    space.params = {k, lr, m};

    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        auto c = space.sample(rng);
        CHECK(space.contains(c));
        CHECK(c.at("k").is_number_integer());
        int kv = c.at("k").get<int>();
        CHECK(kv >= 1);
        CHECK(kv <= 15);
        double lv = c.at("lr").get<double>();
        CHECK(lv >= 1e-4);
        CHECK(lv <= 1.0);
        std::string mv = c.at("metric").get<std::string>();
        CHECK((mv == "euclidean" || mv == "manhattan"));
    }
    CHECK(!space.contains({{"k", 99}, {"lr", 0.1}, {"metric", "manhattan"}}));
    CHECK(!space.contains({{"k", 3}, {"lr", 0.1}}));

    // spaces survive a json round trip
    for (const auto& p : space.params) {
        auto back = Param::from_json(p.to_json());
        CHECK(back.to_json() == p.to_json());
    }
}

TEST_CASE("trial zero is always the default configuration") {
    auto space = quadratic_space();
    nlohmann::json defaults = {{"x", 0.0}, {"y", 0.0}};
    auto res = search(
        space, defaults, [](const nlohmann::json& c, std::vector<double>&) { return quadratic(c); },
        1, Sampler::TpeLite, 7);
    REQUIRE(res.history.size() == 1);
    CHECK(res.history[0].config == defaults);
    CHECK(res.best.config == defaults);
    CHECK(*res.best.objective == doctest::Approx(-5.0));
}

TEST_CASE("guided search closes in on a quadratic optimum") {
    auto space = quadratic_space();
    nlohmann::json defaults = {{"x", -4.0}, {"y", 4.0}};
    auto eval = [](const nlohmann::json& c, std::vector<double>&) { return quadratic(c); };

    auto tpe = search(space, defaults, eval, 60, Sampler::TpeLite, 11);
    CHECK(*tpe.best.objective > -2.0);
    CHECK(*tpe.best.objective >= *tpe.history[0].objective);

    // more trials never make the best worse (same seed, prefix property)
    auto shorter = search(space, defaults, eval, 20, Sampler::TpeLite, 11);
    CHECK(*tpe.best.objective >= *shorter.best.objective);

    auto rnd = search(space, defaults, eval, 60, Sampler::Random, 11);
    CHECK(*rnd.best.objective >= *rnd.history[0].objective);

    CHECK(sampler_from_name("tpe_lite") == Sampler::TpeLite);
    CHECK(sampler_from_name("random") == Sampler::Random);
    CHECK_THROWS_AS(sampler_from_name("grid"), Error);
}

TEST_CASE("search is deterministic including its exports") {
    auto space = quadratic_space();
    nlohmann::json defaults = {{"x", 0.0}, {"y", 0.0}};
    auto eval = [](const nlohmann::json& c, std::vector<double>& folds) {
        double v = quadratic(c);
        folds = {v - 0.1, v + 0.1};
        return v;
    };
    auto a = search(space, defaults, eval, 25, Sampler::TpeLite, 99);
    auto b = search(space, defaults, eval, 25, Sampler::TpeLite, 99);
    CHECK(export_history_csv(a.history) == export_history_csv(b.history));
    CHECK(export_parallel_coordinates(space, a.history).dump() ==
          export_parallel_coordinates(space, b.history).dump());
    CHECK(a.best.config == b.best.config);

    auto c = search(space, defaults, eval, 25, Sampler::TpeLite, 100);
    CHECK(export_history_csv(c.history) != export_history_csv(a.history));
}

TEST_CASE("failing trials are recorded, total failure raises") {
    auto space = quadratic_space();
    nlohmann::json defaults = {{"x", 4.0}, {"y", 4.0}};
    auto flaky = [](const nlohmann::json& c, std::vector<double>&) {
        if (c.at("x").get<double>() < 0) throw Error("DegenerateTraining", "left half fails");
        return quadratic(c);
    };
    auto res = search(space, defaults, flaky, 40, Sampler::Random, 5);
    bool saw_failed = false, saw_ok = false;
    for (const auto& t : res.history) {
        if (t.status == "failed") {
            saw_failed = true;
            CHECK(!t.objective);
        } else {
            saw_ok = true;
        }
    }
    CHECK(saw_failed);
    CHECK(saw_ok);
    CHECK(res.best.status == "ok");

    auto csv = export_history_csv(res.history);
    CHECK(csv.find("failed") != std::string::npos);
    CHECK(csv.rfind("trial,", 0) == 0);

    auto hopeless = [](const nlohmann::json&, std::vector<double>&) -> double {
        throw Error("DegenerateTraining", "always");
    };
    CHECK_THROWS_WITH_AS(search(space, defaults, hopeless, 5, Sampler::Random, 1),
                         doctest::Contains("EvaluatorFailure"), Error);
}
