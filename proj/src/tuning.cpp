#include "rockmass/tuning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace rockmass::tuning {

using nlohmann::json;

namespace {

const char* param_kind_name(Param::Kind k) {
    switch (k) {
        case Param::Kind::IntRange: return "int";
        case Param::Kind::RealRange: return "real";
        case Param::Kind::LogRealRange: return "log_real";
        case Param::Kind::Categorical: return "categorical";
    }
    return "real";
}

Param::Kind param_kind_from_name(const std::string& s) {
    if (s == "int") return Param::Kind::IntRange;
    if (s == "real") return Param::Kind::RealRange;
    if (s == "log_real") return Param::Kind::LogRealRange;
    if (s == "categorical") return Param::Kind::Categorical;
    throw Error("BadHyperparameter", "unknown parameter kind: " + s);
}

}  // namespace

json Param::to_json() const {
    json j = {{"name", name}, {"kind", param_kind_name(kind)}};
    if (kind == Kind::Categorical)
        j["choices"] = choices;
    else {
        j["lo"] = lo;
        j["hi"] = hi;
    }
    return j;
}

Param Param::from_json(const json& j) {
    Param p;
    p.name = j.at("name").get<std::string>();
    p.kind = param_kind_from_name(j.at("kind").get<std::string>());
    if (p.kind == Kind::Categorical) {
        for (const auto& c : j.at("choices")) p.choices.push_back(c);
        if (p.choices.empty()) throw Error("BadHyperparameter", p.name + ": empty choice set");
    } else {
        p.lo = j.at("lo").get<double>();
        p.hi = j.at("hi").get<double>();
        if (!(p.hi >= p.lo)) throw Error("BadHyperparameter", p.name + ": invalid bounds");
        if (p.kind == Kind::LogRealRange && !(p.lo > 0.0))
            throw Error("BadHyperparameter", p.name + ": log range must be positive");
    }
    return p;
}

json SearchSpace::sample(Rng& rng) const {
    json config = json::object();
    for (const auto& p : params) {
        switch (p.kind) {
            case Param::Kind::IntRange: {
                auto span = static_cast<std::size_t>(p.hi - p.lo) + 1;
                config[p.name] = static_cast<int>(p.lo) + static_cast<int>(rng.uniform_int(span));
                break;
            }
            case Param::Kind::RealRange:
                config[p.name] = rng.uniform_range(p.lo, p.hi);
                break;
            case Param::Kind::LogRealRange:
                config[p.name] = std::exp(rng.uniform_range(std::log(p.lo), std::log(p.hi)));
                break;
            case Param::Kind::Categorical:
                config[p.name] = p.choices[rng.uniform_int(p.choices.size())];
                break;
        }
    }
    return config;
}

bool SearchSpace::contains(const json& config) const {
    for (const auto& p : params) {
        if (!config.contains(p.name)) return false;
        const auto& v = config.at(p.name);
        switch (p.kind) {
            case Param::Kind::IntRange: {
                if (!v.is_number_integer()) return false;
                double x = v.get<double>();
                if (x < p.lo || x > p.hi) return false;
                break;
            }
            case Param::Kind::RealRange:
            case Param::Kind::LogRealRange: {
                if (!v.is_number()) return false;
                double x = v.get<double>();
                if (x < p.lo || x > p.hi) return false;
                break;
            }
            case Param::Kind::Categorical: {
                bool found = false;
                for (const auto& c : p.choices)
                    if (c == v) found = true;
                if (!found) return false;
                break;
            }
        }
    }
    return true;
}

Sampler sampler_from_name(const std::string& name) {
    if (name == "random") return Sampler::Random;
    if (name == "tpe_lite") return Sampler::TpeLite;
    throw Error("BadHyperparameter", "unknown sampler: " + name);
}

// ---------------------------------------------------------------------------
// tpe_lite candidate scoring

namespace {

// product-kernel density: Gaussian per numeric parameter (log space for log
// ranges), Laplace-smoothed frequencies for categoricals
double kde_density(const SearchSpace& space, const std::vector<json>& observed,
                   const json& candidate) {
    double density = 1.0;
    for (const auto& p : space.params) {
        if (p.kind == Param::Kind::Categorical) {
            std::size_t match = 0;
            for (const auto& o : observed)
                if (o.at(p.name) == candidate.at(p.name)) ++match;
            density *= static_cast<double>(match + 1) /
                       static_cast<double>(observed.size() + p.choices.size());
            continue;
        }
        auto value_of = [&](const json& cfg) {
            double x = cfg.at(p.name).get<double>();
            return p.kind == Param::Kind::LogRealRange ? std::log(x) : x;
        };
        double x = value_of(candidate);
        std::vector<double> xs;
        xs.reserve(observed.size());
        for (const auto& o : observed) xs.push_back(value_of(o));
        double n = static_cast<double>(xs.size());
        double mean = 0.0;
        for (double v : xs) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : xs) var += (v - mean) * (v - mean);
        var /= n;
        double span = p.kind == Param::Kind::LogRealRange ? std::log(p.hi) - std::log(p.lo)
                                                          : p.hi - p.lo;
        double bw = 1.06 * std::sqrt(var) * std::pow(n, -0.2);
        bw = std::max(bw, 0.05 * std::max(span, 1e-12));
        double sum = 0.0;
        for (double v : xs) {
            double z = (x - v) / bw;
            sum += std::exp(-0.5 * z * z);
        }
        density *= sum / (n * bw * 2.5066282746310002);
    }
    return density;
}

}  // namespace

SearchResult search(const SearchSpace& space, const json& default_config,
                    const Evaluator& evaluate, int n_trials, Sampler sampler,
                    std::uint64_t seed) {
    if (n_trials < 1) throw Error("BadHyperparameter", "n_trials must be >= 1");
    Rng rng(seed);
    SearchResult result;

    const int warmup = 10, candidates = 24;

    for (int i = 0; i < n_trials; ++i) {
        Trial trial;
        trial.index = i;
        if (i == 0) {
            trial.config = default_config;
        } else if (sampler == Sampler::Random || i <= warmup) {
            trial.config = space.sample(rng);
        } else {
            // rank finished trials, split top quarter vs the rest, keep the
            // candidate with the best good/bad density ratio
            std::vector<const Trial*> ok;
            for (const auto& t : result.history)
                if (t.objective) ok.push_back(&t);
            if (ok.size() < 2) {
                trial.config = space.sample(rng);
            } else {
                std::stable_sort(ok.begin(), ok.end(), [](const Trial* a, const Trial* b) {
                    return *a->objective > *b->objective;
                });
                std::size_t n_good = std::max<std::size_t>(1, ok.size() / 4);
                std::vector<json> good, bad;
                for (std::size_t t = 0; t < ok.size(); ++t)
                    (t < n_good ? good : bad).push_back(ok[t]->config);
                double best_score = -1.0;
                for (int c = 0; c < candidates; ++c) {
                    json cand = space.sample(rng);
                    double score = kde_density(space, good, cand) /
                                   (kde_density(space, bad, cand) + 1e-12);
                    if (score > best_score) {
                        best_score = score;
                        trial.config = cand;
                    }
                }
            }
        }

        auto t0 = std::chrono::steady_clock::now();
        try {
            trial.objective = evaluate(trial.config, trial.fold_values);
        } catch (const std::exception& e) {
            trial.status = "failed";
            trial.fold_values.clear();
        }
        trial.duration_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(std::move(trial));
    }

    const Trial* best = nullptr;
    for (const auto& t : result.history)
        if (t.objective && (!best || *t.objective > *best->objective)) best = &t;
    if (!best) throw Error("EvaluatorFailure", "every trial failed");
    result.best = *best;
    return result;
}

std::string export_history_csv(const std::vector<Trial>& history) {
    if (history.empty()) throw Error("EmptyInput", "no trials");
    // parameter columns in first-seen order
    std::vector<std::string> cols;
    for (const auto& t : history)
        for (auto& [key, value] : t.config.items())
            if (std::find(cols.begin(), cols.end(), key) == cols.end()) cols.push_back(key);

    std::ostringstream out;
    out << "trial";
    for (const auto& c : cols) out << "," << c;
    out << ",objective,status\n";
    for (const auto& t : history) {
        out << t.index;
        for (const auto& c : cols) {
            out << ",";
            if (!t.config.contains(c)) continue;
            const auto& v = t.config.at(c);
            out << (v.is_number() ? format_double(v.get<double>())
                                  : v.is_string() ? v.get<std::string>() : v.dump());
        }
        out << ",";
        if (t.objective) out << format_double(*t.objective);
        out << "," << t.status << "\n";
    }
    return out.str();
}

json export_parallel_coordinates(const SearchSpace& space, const std::vector<Trial>& history) {
    if (history.empty()) throw Error("EmptyInput", "no trials");
    json axes = json::array();
    for (const auto& p : space.params) axes.push_back(p.to_json());

    json trials = json::array();
    for (const auto& t : history) {
        json entry = {{"index", t.index}, {"values", t.config}, {"status", t.status}};
        if (t.objective) entry["objective"] = *t.objective;
        trials.push_back(entry);
    }
    return {{"axes", axes}, {"trials", trials}};
}

}  // namespace rockmass::tuning
