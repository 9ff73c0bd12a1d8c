#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "rockmass/synth.hpp"

using namespace rockmass;
using namespace rockmass::synth;

TEST_CASE("generation is reproducible byte for byte") {
    SynthSpec spec;
    spec.n_rounds = 60;
    spec.seed = 123;
    auto a = generate(spec);
    auto b = generate(spec);

    std::ostringstream ra, rb, ha, hb;
    dataset::serialize_rounds(a.data, ra);
    dataset::serialize_rounds(b.data, rb);
    dataset::serialize_drillholes(a.data, ha);
    dataset::serialize_drillholes(b.data, hb);
    CHECK(ra.str() == rb.str());
    CHECK(ha.str() == hb.str());
    CHECK(a.section_class == b.section_class);

    spec.seed = 124;
    auto c = generate(spec);
    std::ostringstream rc;
    dataset::serialize_rounds(c.data, rc);
    CHECK(rc.str() != ra.str());
}

TEST_CASE("class frequencies approach the jump distribution") {
    SynthSpec spec;
    spec.n_rounds = 2000;
    spec.holes_per_round = 1;
    spec.readings_per_metre = 1;
    spec.seed = 7;
    auto truth = generate(spec);

    std::array<double, qsystem::kNumClasses> freq{};
    for (auto cls : truth.section_class) freq[static_cast<std::size_t>(cls)] += 1.0;
    for (auto& f : freq) f /= static_cast<double>(truth.section_class.size());
    for (std::size_t i = 0; i < qsystem::kNumClasses; ++i)
        CHECK(std::abs(freq[i] - spec.class_distribution[i]) < 0.03);
}

TEST_CASE("planted labels agree with the q pathway and the oracle") {
    SynthSpec spec;
    spec.n_rounds = 150;
    spec.seed = 21;
    auto truth = generate(spec);

    auto oracle = oracle_labels(truth.data, truth);
    REQUIRE(oracle.size() == truth.section_class.size());
    CHECK(oracle == truth.section_class);

    // the stored q value and the components both land in the planted class
    std::map<std::string, qsystem::QClass> by_round;
    for (std::size_t i = 0; i < truth.section_round_id.size(); ++i)
        by_round[truth.section_round_id[i]] = truth.section_class[i];
    for (const auto& r : truth.data.rounds) {
        CHECK(qsystem::q_to_class(r.resolved_q()) == by_round.at(r.round_id));
        REQUIRE(r.q_components);
        CHECK(qsystem::q_to_class(qsystem::compute_q(*r.q_components)) ==
              by_round.at(r.round_id));
    }

    // corrupting one label is caught by comparing against the oracle
    auto mutated = truth;
    double q = mutated.data.rounds[40].resolved_q();
    mutated.data.rounds[40].q_value = q >= 1.0 ? 0.05 : 50.0;
    auto relabeled = oracle_labels(mutated.data, truth);
    bool diverged = false;
    for (std::size_t i = 0; i < relabeled.size(); ++i) {
        auto planted = relabeled[i];
        const auto& r = mutated.data.round_by_id(truth.section_round_id[i]);
        if (qsystem::q_to_class(r.resolved_q()) != planted) diverged = true;
    }
    CHECK(diverged);

    // a foreign dataset has no provenance marker
    auto foreign = truth.data;
    foreign.source = "csv";
    CHECK_THROWS_WITH_AS(oracle_labels(foreign, truth), doctest::Contains("NotSynthetic"),
                         Error);
}

TEST_CASE("sticky chain degenerates to one class at p_stay = 1") {
    SynthSpec spec;
    spec.n_rounds = 80;
    spec.p_stay = 1.0;
    spec.seed = 4;
    auto truth = generate(spec);
    std::set<qsystem::QClass> seen(truth.section_class.begin(), truth.section_class.end());
    CHECK(seen.size() == 1);
}

TEST_CASE("noise scale widens within-round spread") {
    auto spread = [](double noise) {
        SynthSpec spec;
        spec.n_rounds = 60;
        spec.holes_per_round = 2;
        spec.noise_scale = noise;
        spec.seed = 17;
        auto truth = generate(spec);
        double ss = 0.0;
        std::size_t n = 0;
        for (const auto& [round, holes] : truth.data.holes_by_round) {
            double mean = 0.0;
            for (const auto& h : holes) mean += h.params[0];
            mean /= static_cast<double>(holes.size());
            for (const auto& h : holes) ss += (h.params[0] - mean) * (h.params[0] - mean);
            n += holes.size();
        }
        return ss / static_cast<double>(n);
    };
    CHECK(spread(2.0) > spread(0.5));
}

TEST_CASE("boundary smoothing blends parameter means") {
    SynthSpec spec;
    spec.n_rounds = 200;
    spec.smoothing_width_m = 5.0;
    spec.seed = 33;
    auto truth = generate(spec);  // must stay internally consistent
    CHECK(oracle_labels(truth.data, truth) == truth.section_class);
}

TEST_CASE("bad generator specs are rejected") {
    SynthSpec spec;
    spec.n_rounds = 0;
    CHECK_THROWS_WITH_AS(spec.check(), doctest::Contains("BadSpec"), Error);
    spec = SynthSpec{};
    spec.p_stay = 1.5;
    CHECK_THROWS_AS(spec.check(), Error);
    spec = SynthSpec{};
    spec.class_distribution[1] += 0.2;
    CHECK_THROWS_AS(spec.check(), Error);
    spec = SynthSpec{};
    spec.round_length_min_m = 0.5;
    CHECK_THROWS_AS(spec.check(), Error);
    spec = SynthSpec{};
    CHECK_NOTHROW(spec.check());
}
