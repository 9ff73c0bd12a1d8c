#include "rockmass/qsystem.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace rockmass::qsystem {

namespace {

const std::vector<std::string> kClassNames = {"A", "B", "C", "D", "E1", "E2"};

void check_components(const QComponents& c) {
    auto bad = [](double v) { return !(v > 0.0) || !std::isfinite(v); };
    if (bad(c.rqd) || bad(c.jn) || bad(c.jr) || bad(c.ja) || bad(c.jw) || bad(c.srf) ||
        bad(c.jn_mult))
        throw Error("NonPositiveComponent", "all Q components must be finite and > 0");
    if (c.rqd > 100.0)
        throw Error("NonPositiveComponent", "rqd exceeds 100");
}

GroupingScheme make_scheme(std::string name,
                           std::vector<std::optional<std::string>> labels) {
    GroupingScheme s;
    s.name = std::move(name);
    for (int i = 0; i < kNumClasses; ++i)
        s.mapping[static_cast<QClass>(i)] = labels[static_cast<std::size_t>(i)];
    return s;
}

}  // namespace

const std::string& class_name(QClass c) { return kClassNames[static_cast<std::size_t>(c)]; }

QClass class_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kClassNames.size(); ++i)
        if (kClassNames[i] == name) return static_cast<QClass>(i);
    throw Error("UnknownLabel", "not a Q-class: " + name);
}

double compute_q(const QComponents& c) {
    check_components(c);
    return (c.rqd / c.jn) * (c.jr / c.ja) * (c.jw / c.srf);
}

double compute_q_base(const QComponents& c) {
    check_components(c);
    return (c.rqd / c.jn) * (c.jr / c.ja);
}

QClass q_to_class(double q) {
    if (!(q > 0.0) || !std::isfinite(q))
        throw Error("OutOfRange", "q must be finite and positive");
    if (q < 0.01) throw Error("OutOfRange", "q below the E2 floor of 0.01");
    if (q < 0.4) return QClass::E2;
    if (q < 1.0) return QClass::E1;
    if (q < 4.0) return QClass::D;
    if (q < 10.0) return QClass::C;
    if (q < 40.0) return QClass::B;
    return QClass::A;
}

std::vector<std::string> GroupingScheme::output_labels() const {
    std::vector<std::string> out;
    for (int i = 0; i < kNumClasses; ++i) {
        const auto& lbl = mapping.at(static_cast<QClass>(i));
        if (lbl && std::find(out.begin(), out.end(), *lbl) == out.end()) out.push_back(*lbl);
    }
    return out;
}

std::optional<std::string> apply_grouping(QClass cls, const GroupingScheme& scheme) {
    auto it = scheme.mapping.find(cls);
    if (it == scheme.mapping.end())
        throw Error("UnknownScheme", "scheme " + scheme.name + " misses class " + class_name(cls));
    return it->second;
}

const std::vector<GroupingScheme>& builtin_schemes() {
    static const std::vector<GroupingScheme> schemes = {
        make_scheme("A,B,C,D,E1,E2", {"A", "B", "C", "D", "E1", "E2"}),
        make_scheme("A,B,C,D,E", {"A", "B", "C", "D", "E", "E"}),
        make_scheme("AB,C,D,E", {"AB", "AB", "C", "D", "E", "E"}),
        make_scheme("AB,CD,E", {"AB", "AB", "CD", "CD", "E", "E"}),
        make_scheme("ABCDE1,E2", {"ABCDE1", "ABCDE1", "ABCDE1", "ABCDE1", "ABCDE1", "E2"}),
        make_scheme("AB,CDE", {"AB", "AB", "CDE", "CDE", "CDE", "CDE"}),
        make_scheme("AB,DE", {"AB", "AB", std::nullopt, "DE", "DE", "DE"}),
        make_scheme("A,C,E", {"A", std::nullopt, "C", std::nullopt, "E", "E"}),
    };
    return schemes;
}

const GroupingScheme& scheme_by_name(const std::string& name) {
    for (const auto& s : builtin_schemes())
        if (s.name == name) return s;
    throw Error("UnknownScheme", name);
}

std::vector<GroupingScheme> schemes_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error("UnknownScheme", std::string("bad scheme document: ") + e.what());
    }
    std::vector<GroupingScheme> out;
    for (auto& [name, mapping] : doc.items()) {
        GroupingScheme s;
        s.name = name;
        for (int i = 0; i < kNumClasses; ++i) {
            const auto& cls = kClassNames[static_cast<std::size_t>(i)];
            if (!mapping.contains(cls))
                throw Error("UnknownScheme", "scheme " + name + " misses class " + cls);
            std::string lbl = mapping.at(cls).get<std::string>();
            s.mapping[static_cast<QClass>(i)] =
                lbl == "DROP" ? std::nullopt : std::optional<std::string>(lbl);
        }
        std::size_t distinct = s.output_labels().size();
        if (distinct < 2)
            throw Error("UnknownScheme", "scheme " + name + " has fewer than 2 output labels");
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<ZoneTag> tag_transition_zones(
    const std::vector<std::pair<double, QClass>>& samples, double window_m) {
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (samples[i].first < samples[i - 1].first)
            throw Error("UnsortedInput", "samples must be sorted by chainage");

    std::vector<double> boundaries;
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (samples[i].second != samples[i - 1].second) boundaries.push_back(samples[i].first);

    std::vector<ZoneTag> tags(samples.size(), ZoneTag::Regular);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double x = samples[i].first;
        for (double b : boundaries) {
            if (b > x) break;
            if (x == b || x - b < window_m) {
                tags[i] = ZoneTag::Transition;
                break;
            }
        }
    }
    return tags;
}

}  // namespace rockmass::qsystem
