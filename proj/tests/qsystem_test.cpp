#include <doctest.h>

#include <map>

#include "rockmass/qsystem.hpp"

using namespace rockmass;
using namespace rockmass::qsystem;

namespace {

QComponents make(double rqd, double jn, double jr, double ja, double jw, double srf) {
    QComponents c;
    c.rqd = rqd;
    c.jn = jn;
    c.jr = jr;
    c.ja = ja;
    c.jw = jw;
    c.srf = srf;
    return c;
}

// Reference 1 m class counts used across grouping tests.
const std::map<QClass, std::size_t> kCounts = {{QClass::A, 539},  {QClass::B, 10057},
                                               {QClass::C, 9208}, {QClass::D, 2571},
                                               {QClass::E1, 642}, {QClass::E2, 260}};

std::map<std::string, std::size_t> group_counts(const GroupingScheme& scheme) {
    std::map<std::string, std::size_t> out;
    for (const auto& [cls, n] : kCounts) {
        auto g = apply_grouping(cls, scheme);
        if (g) out[*g] += n;
    }
    return out;
}

}  // namespace

TEST_CASE("q value arithmetic") {
    CHECK(compute_q(make(90, 9, 2, 1, 1, 1)) == doctest::Approx(20.0));
    CHECK(compute_q(make(100, 1, 1, 1, 1, 1)) == doctest::Approx(100.0));
    CHECK(compute_q(make(50, 15, 1, 4, 0.66, 5)) == doctest::Approx(0.11).epsilon(0.1));

    CHECK(compute_q_base(make(90, 9, 2, 1, 1, 1)) == doctest::Approx(20.0));

    // last term unity makes both agree
    auto c = make(73, 6, 1.5, 2, 1, 1);
    CHECK(compute_q(c) == doctest::Approx(compute_q_base(c)));

    // algebraic identity q = q_base * jw/srf
    auto d = make(80, 12, 3, 2, 0.66, 5);
    CHECK(compute_q(d) == doctest::Approx(compute_q_base(d) * 0.66 / 5));

    CHECK_THROWS_WITH_AS(compute_q(make(0, 9, 2, 1, 1, 1)), doctest::Contains("NonPositive"),
                         Error);
    CHECK_THROWS_AS(compute_q(make(101, 9, 2, 1, 1, 1)), Error);
    CHECK_THROWS_AS(compute_q(make(90, 9, 2, 1, 1, -1)), Error);
}

TEST_CASE("class boundaries, lower inclusive") {
    CHECK(q_to_class(0.4) == QClass::E1);
    CHECK(q_to_class(0.2) == QClass::E2);
    CHECK(q_to_class(20) == QClass::B);
    CHECK(q_to_class(5) == QClass::C);
    CHECK(q_to_class(2) == QClass::D);
    CHECK(q_to_class(50) == QClass::A);
    CHECK(q_to_class(0.01) == QClass::E2);
    CHECK(q_to_class(1.0) == QClass::D);
    CHECK(q_to_class(4.0) == QClass::C);
    CHECK(q_to_class(10.0) == QClass::B);
    CHECK(q_to_class(40.0) == QClass::A);
    CHECK_THROWS_WITH_AS(q_to_class(0.009), doctest::Contains("OutOfRange"), Error);
}

TEST_CASE("q_to_class is monotone in q") {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        double a = 0.01 + rng.uniform() * 100.0;
        double b = 0.01 + rng.uniform() * 100.0;
        if (a > b) std::swap(a, b);
        CHECK(static_cast<int>(q_to_class(a)) >= static_cast<int>(q_to_class(b)));
    }
}

TEST_CASE("grouping schemes reproduce the reference grouped counts") {
    auto abcde = group_counts(scheme_by_name("AB,CD,E"));
    CHECK(abcde.at("AB") == 10596);
    CHECK(abcde.at("CD") == 11779);
    CHECK(abcde.at("E") == 902);

    auto abde = group_counts(scheme_by_name("AB,DE"));
    CHECK(abde.at("AB") == 10596);
    CHECK(abde.at("DE") == 3473);
    std::size_t total = 0;
    for (const auto& [label, n] : abde) total += n;
    CHECK(total == 14069);

    // identity scheme keeps every label
    const auto& identity = scheme_by_name("A,B,C,D,E1,E2");
    for (const auto& [cls, n] : kCounts)
        CHECK(*apply_grouping(cls, identity) == class_name(cls));

    CHECK_THROWS_WITH_AS(scheme_by_name("nope"), doctest::Contains("UnknownScheme"), Error);
}

TEST_CASE("grouping conserves counts for every builtin scheme") {
    for (const auto& scheme : builtin_schemes()) {
        std::size_t grouped = 0, dropped = 0;
        for (const auto& [cls, n] : kCounts) {
            if (apply_grouping(cls, scheme))
                grouped += n;
            else
                dropped += n;
        }
        CHECK(grouped + dropped == 23277);
    }
    CHECK(builtin_schemes().size() == 8);
}

TEST_CASE("grouping schemes parse from JSON") {
    auto schemes = schemes_from_json(R"({"coarse": {"A":"AB","B":"AB","C":"DROP","D":"DE","E1":"DE","E2":"DE"}})");
    REQUIRE(schemes.size() == 1);
    CHECK(schemes[0].name == "coarse");
    CHECK(*apply_grouping(QClass::A, schemes[0]) == "AB");
    CHECK(!apply_grouping(QClass::C, schemes[0]));

    // a scheme collapsing everything to one label is rejected
    CHECK_THROWS_AS(schemes_from_json(R"({"one": {"A":"X","B":"X","C":"X","D":"X","E1":"X","E2":"X"}})"),
                    Error);
}

TEST_CASE("transition tagging") {
    using P = std::pair<double, QClass>;

    SUBCASE("constant class stays regular") {
        std::vector<P> s;
        for (int i = 0; i < 50; ++i) s.emplace_back(i, QClass::B);
        for (auto t : tag_transition_zones(s)) CHECK(t == ZoneTag::Regular);
    }

    SUBCASE("change at 10 opens a 10 m window") {
        std::vector<P> s;
        for (int i = 0; i < 10; ++i) s.emplace_back(i, QClass::B);
        for (int i = 10; i < 30; ++i) s.emplace_back(i, QClass::D);
        auto tags = tag_transition_zones(s, 10.0);
        for (int i = 0; i < 10; ++i) CHECK(tags[static_cast<std::size_t>(i)] == ZoneTag::Regular);
        for (int i = 10; i < 20; ++i)
            CHECK(tags[static_cast<std::size_t>(i)] == ZoneTag::Transition);
        for (int i = 20; i < 30; ++i) CHECK(tags[static_cast<std::size_t>(i)] == ZoneTag::Regular);
    }

    SUBCASE("overlapping windows union, against a brute-force oracle") {
        std::vector<P> s;
        for (int i = 0; i < 8; ++i) s.emplace_back(i, QClass::B);
        for (int i = 8; i < 12; ++i) s.emplace_back(i, QClass::C);  // change at 8
        for (int i = 12; i < 40; ++i) s.emplace_back(i, QClass::D); // change at 12
        auto tags = tag_transition_zones(s, 10.0);
        std::vector<double> boundaries = {8.0, 12.0};
        for (std::size_t i = 0; i < s.size(); ++i) {
            bool expect = false;
            for (double b : boundaries)
                if (s[i].first >= b && s[i].first - b < 10.0) expect = true;
            CHECK((tags[i] == ZoneTag::Transition) == expect);
        }
    }

    SUBCASE("window zero tags only boundary samples") {
        std::vector<P> s = {{0, QClass::B}, {1, QClass::B}, {2, QClass::C}, {3, QClass::C}};
        auto tags = tag_transition_zones(s, 0.0);
        CHECK(tags[0] == ZoneTag::Regular);
        CHECK(tags[1] == ZoneTag::Regular);
        CHECK(tags[2] == ZoneTag::Transition);
        CHECK(tags[3] == ZoneTag::Regular);
    }

    SUBCASE("unsorted input rejected") {
        std::vector<P> s = {{5, QClass::B}, {1, QClass::B}};
        CHECK_THROWS_WITH_AS(tag_transition_zones(s), doctest::Contains("UnsortedInput"), Error);
    }
}
