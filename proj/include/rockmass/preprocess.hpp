#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rockmass/common.hpp"
#include "rockmass/models.hpp"
#include "rockmass/scaler.hpp"

namespace rockmass::preprocess {

struct OutlierConfig {
    enum class Kind { None, Mad, IsolationForest, Both };
    Kind kind = Kind::None;
    double mad_threshold = 3.5;
    int trees = 100;
    int subsample = 256;
    double contamination = 0.05;

    nlohmann::json to_json() const;
    static OutlierConfig from_json(const nlohmann::json& j);
};

// Keep-mask over rows; a row is dropped when any feature's modified z-score
// 0.6745*|x - median|/MAD exceeds the threshold. Zero-MAD columns are skipped.
std::vector<bool> mad_outlier_mask(const DataMatrix& x, double threshold = 3.5,
                                   std::vector<std::string>* warnings = nullptr);

// Standard isolation forest; rows above the (1 - contamination) anomaly-score
// quantile are dropped. Seeded-deterministic.
std::vector<bool> isolation_forest_mask(const DataMatrix& x, int trees, int subsample,
                                        double contamination, std::uint64_t seed);

// SMOTE: synthetic minority samples interpolated between a sample and one of
// its k nearest same-class neighbours (Euclidean). Originals are preserved;
// each class is raised to target_counts (default: the majority count).
struct SmoteResult {
    DataMatrix x;
    std::vector<int> y;
    // Parent row indices (into the input) for every synthetic sample.
    std::vector<std::pair<std::size_t, std::size_t>> parents;
};

SmoteResult smote_oversample(const DataMatrix& x, const std::vector<int>& y, int k_neighbors,
                             const std::map<int, std::size_t>& target_counts, std::uint64_t seed);
SmoteResult smote_oversample(const DataMatrix& x, const std::vector<int>& y, int k_neighbors,
                             std::uint64_t seed);  // target = majority count

// SMOTE repurposed for regression: equal-width bins over the label range;
// bins under per_bin_target are augmented (labels interpolated with the same
// lambda as features), bins at or above it are untouched.
struct ResampleResult {
    DataMatrix x;
    std::vector<double> y;
    std::vector<std::string> warnings;  // skipped bins
};

ResampleResult regression_resample(const DataMatrix& x, const std::vector<double>& y, int n_bins,
                                   std::size_t per_bin_target, std::uint64_t seed);

enum class BalanceKind { None, Smote };

// Leakage-safe composition: outlier mask and balancer touch training rows
// only; the scaler is fitted on (masked) training data and applied to both
// sides; predict never refits.
struct PipelineConfig {
    OutlierConfig outliers;
    ScalerKind scaler = ScalerKind::None;
    BalanceKind balance = BalanceKind::None;
    int smote_k = 5;
    models::ModelSpec model;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);
};

class Pipeline {
public:
    Pipeline() = default;
    explicit Pipeline(PipelineConfig config) : config_(std::move(config)) {}

    void fit(const DataMatrix& train, const std::vector<int>& labels,
             const std::vector<std::string>& roster);
    void fit_regression(const DataMatrix& train, const std::vector<double>& labels);

    std::vector<int> predict(const DataMatrix& rows) const;
    std::vector<std::vector<double>> predict_proba(const DataMatrix& rows) const;
    std::vector<double> predict_value(const DataMatrix& rows) const;

    bool fitted() const { return fitted_; }
    const PipelineConfig& config() const { return config_; }
    const Scaler& scaler() const { return scaler_; }
    const models::TrainedModel& model() const;

    // Canonical serialization of every fitted parameter; the leakage sentinel
    // compares these across held-out perturbations.
    std::string fingerprint() const;

    // Versioned JSON document holding the config, scaler state and model.
    std::string serialize() const;
    static Pipeline deserialize(const std::string& bytes);

private:
    PipelineConfig config_;
    Scaler scaler_;
    models::TrainedModel model_;
    bool fitted_ = false;

    DataMatrix prepare_train(const DataMatrix& train, std::vector<std::size_t>& kept) ;
};

}  // namespace rockmass::preprocess
