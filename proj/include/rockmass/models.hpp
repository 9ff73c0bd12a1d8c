#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rockmass/common.hpp"
#include "rockmass/scaler.hpp"

namespace rockmass::models {

enum class ModelKind {
    Knn,
    DecisionTree,
    RandomForest,
    ExtraTrees,
    GradientBoostedTrees,
    LogisticRegression,
    LinearRegression,
    Dummy,
    Voting,
};

enum class Task { Classification, Regression };

ModelKind kind_from_name(const std::string& name);  // "knn", "extra_trees", ...
const std::string& kind_name(ModelKind kind);

// Declarative learner configuration. Hyperparameters live in a JSON map and
// are validated against the kind at fit time; unset keys take documented
// defaults. Voting members are nested specs under hyper["members"], each with
// an optional per-member "scaler".
struct ModelSpec {
    ModelKind kind = ModelKind::Dummy;
    Task task = Task::Classification;
    nlohmann::json hyper = nlohmann::json::object();
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static ModelSpec from_json(const nlohmann::json& j);

    // Hyperparameters merged with per-kind defaults, unknown keys rejected.
    nlohmann::json resolved_hyper() const;
};

namespace detail {
struct ModelImpl;
}

// Immutable fitted model. Prediction checks the feature-name contract
// established at fit time.
class TrainedModel {
public:
    TrainedModel() = default;

    std::vector<int> predict(const DataMatrix& rows) const;
    std::vector<std::vector<double>> predict_proba(const DataMatrix& rows) const;
    std::vector<double> predict_value(const DataMatrix& rows) const;

    const ModelSpec& spec() const { return spec_; }
    const std::vector<std::string>& roster() const { return roster_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    bool fitted() const { return impl_ != nullptr; }

    // Per-feature split-gain importances, normalized to sum 1 (tree models).
    std::vector<double> feature_importances() const;

    std::string serialize() const;  // versioned JSON document
    static TrainedModel deserialize(const std::string& bytes);

private:
    friend TrainedModel fit(const ModelSpec&, const DataMatrix&, const std::vector<int>&,
                            const std::vector<std::string>&);
    friend TrainedModel fit_regression(const ModelSpec&, const DataMatrix&,
                                       const std::vector<double>&);

    ModelSpec spec_;
    std::vector<std::string> roster_;
    std::vector<std::string> feature_names_;
    std::shared_ptr<const detail::ModelImpl> impl_;

    void check_contract(const DataMatrix& rows) const;
};

TrainedModel fit(const ModelSpec& spec, const DataMatrix& train, const std::vector<int>& labels,
                 const std::vector<std::string>& roster);

TrainedModel fit_regression(const ModelSpec& spec, const DataMatrix& train,
                            const std::vector<double>& labels);

}  // namespace rockmass::models
