#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rockmass/common.hpp"

namespace rockmass::tuning {

struct Param {
    enum class Kind { IntRange, RealRange, LogRealRange, Categorical };
    std::string name;
    Kind kind = Kind::RealRange;
    double lo = 0.0, hi = 1.0;              // ranges
    std::vector<nlohmann::json> choices;    // categorical

    nlohmann::json to_json() const;
    static Param from_json(const nlohmann::json& j);
};

struct SearchSpace {
    std::vector<Param> params;

    nlohmann::json sample(Rng& rng) const;  // one configuration
    bool contains(const nlohmann::json& config) const;
};

struct Trial {
    int index = 0;
    nlohmann::json config;
    std::optional<double> objective;  // empty for failed trials
    std::vector<double> fold_values;
    std::string status = "ok";  // "ok" | "failed"
    double duration_s = 0.0;
};

enum class Sampler { Random, TpeLite };

Sampler sampler_from_name(const std::string& name);

struct SearchResult {
    Trial best;
    std::vector<Trial> history;
};

// Evaluator returns the objective (higher is better) and may fill per-fold
// values; failures are recorded and skipped. Trial 0 always runs the default
// configuration so the default-vs-tuned delta is reported.
using Evaluator = std::function<double(const nlohmann::json& config, std::vector<double>& folds)>;

SearchResult search(const SearchSpace& space, const nlohmann::json& default_config,
                    const Evaluator& evaluate, int n_trials, Sampler sampler, std::uint64_t seed);

// trials.csv: one row per trial (index, parameters, objective, status).
std::string export_history_csv(const std::vector<Trial>& history);

// Axis metadata plus per-trial values for parallel-coordinates plotting.
nlohmann::json export_parallel_coordinates(const SearchSpace& space,
                                           const std::vector<Trial>& history);

}  // namespace rockmass::tuning
