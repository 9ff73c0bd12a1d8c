#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rockmass/common.hpp"
#include "rockmass/preprocess.hpp"
#include "rockmass/qsystem.hpp"

namespace rockmass::eval {

struct ConfusionMatrix {
    std::vector<std::string> roster;
    std::vector<std::size_t> counts;  // C*C row-major, rows = true label

    std::size_t C() const { return roster.size(); }
    std::size_t n() const;
    std::size_t at(std::size_t t, std::size_t p) const { return counts[t * C() + p]; }
    std::size_t& at(std::size_t t, std::size_t p) { return counts[t * C() + p]; }

    nlohmann::json to_json() const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 const std::vector<std::string>& roster);

enum class Axis { Row, Column };

// Row normalization puts per-class recall on the diagonal, column
// normalization per-class precision. Empty rows/columns stay zero.
std::vector<double> normalize(const ConfusionMatrix& cm, Axis axis);

struct MetricsReport {
    double accuracy = 0.0;
    double balanced_accuracy = 0.0;
    double precision_macro = 0.0;
    double f1_macro = 0.0;                    // harmonic mean of the two macro averages
    double f1_macro_per_class = 0.0;          // mean of per-class F1, for comparison
    std::optional<double> roc_auc_macro;
    std::vector<double> per_class_recall;
    std::vector<double> per_class_precision;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

MetricsReport classification_metrics(const ConfusionMatrix& cm);

// One-vs-rest AUC via the Mann-Whitney rank statistic, macro-averaged over
// classes present in y_true.
double roc_auc_macro(const std::vector<int>& y_true,
                     const std::vector<std::vector<double>>& proba);

struct RegressionReport {
    double r2 = 0.0;
    double mse = 0.0;
    double mae = 0.0;
    std::vector<double> residuals;  // y_pred - y_true

    nlohmann::json to_json() const;
};

RegressionReport regression_metrics(const std::vector<double>& y_true,
                                    const std::vector<double>& y_pred);

// (theoretical standard-normal quantile, standardized observed residual)
// pairs at plotting positions (i - 0.5)/n.
std::vector<std::pair<double, double>> qq_points(const std::vector<double>& residuals);

// Flags |y_pred - y_true| > band in log space; default band log10(2).
std::vector<bool> log_band_outliers(const std::vector<double>& y_true_log,
                                    const std::vector<double>& y_pred_log,
                                    double band = 0.3010299956639812);

struct LinearCorrection {
    double a = 1.0;
    double b = 0.0;
    std::vector<double> corrected;
};

// Least squares of y on y_hat; corrected predictions a*y_hat + b.
LinearCorrection residual_linear_correction(const std::vector<double>& y_true,
                                            const std::vector<double>& y_pred);

// 75/25 by default; per-class proportions within +-1 sample (round half up).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, double test_fraction, std::uint64_t seed);

// Stratified fold index per sample, folds balanced within +-1 per class.
std::vector<int> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed);

struct CVResult {
    std::vector<MetricsReport> fold_metrics;
    std::vector<RegressionReport> fold_regression;
    std::vector<int> fold_of_sample;
    double mean = 0.0, min = 0.0, max = 0.0;  // primary metric per task

    nlohmann::json to_json() const;
};

CVResult kfold_cv(const preprocess::PipelineConfig& config, const DataMatrix& x,
                  const std::vector<int>& y, const std::vector<std::string>& roster, int k,
                  std::uint64_t seed);

CVResult kfold_cv_regression(const preprocess::PipelineConfig& config, const DataMatrix& x,
                             const std::vector<double>& y, int k, std::uint64_t seed);

// Metrics over the samples carrying one zone tag only.
MetricsReport zone_filtered_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                    const std::vector<qsystem::ZoneTag>& zones,
                                    qsystem::ZoneTag zone, const std::vector<std::string>& roster);

}  // namespace rockmass::eval
