#pragma once

#include <string>
#include <vector>

#include "rockmass/common.hpp"

namespace rockmass::preprocess {

enum class ScalerKind { None, MinMax, Standard };

ScalerKind scaler_from_name(const std::string& name);  // "none" | "minmax" | "standard"
const std::string& scaler_name(ScalerKind kind);

// Per-feature scaling fitted on training data only. MinMax maps train min->0
// and max->1; out-of-range values extrapolate. Constant columns map to 0
// uniformly and are listed in warnings.
class Scaler {
public:
    Scaler() = default;
    explicit Scaler(ScalerKind kind) : kind_(kind) {}

    void fit(const DataMatrix& train);
    DataMatrix transform(const DataMatrix& x) const;

    ScalerKind kind() const { return kind_; }
    bool fitted() const { return fitted_; }
    const std::vector<double>& offsets() const { return offset_; }
    const std::vector<double>& scales() const { return scale_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    static Scaler restore(ScalerKind kind, std::vector<double> offsets,
                          std::vector<double> scales);

private:
    ScalerKind kind_ = ScalerKind::None;
    bool fitted_ = false;
    std::vector<double> offset_;  // min or mean
    std::vector<double> scale_;   // max-min or std; 0 marks a constant column
    std::vector<std::string> warnings_;
};

}  // namespace rockmass::preprocess
