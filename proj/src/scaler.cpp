#include "rockmass/scaler.hpp"

#include <algorithm>
#include <cmath>

namespace rockmass::preprocess {

ScalerKind scaler_from_name(const std::string& name) {
    if (name == "none") return ScalerKind::None;
    if (name == "minmax") return ScalerKind::MinMax;
    if (name == "standard") return ScalerKind::Standard;
    throw Error("BadHyperparameter", "unknown scaler: " + name);
}

const std::string& scaler_name(ScalerKind kind) {
    static const std::string names[] = {"none", "minmax", "standard"};
    return names[static_cast<std::size_t>(kind)];
}

void Scaler::fit(const DataMatrix& train) {
    if (train.n_rows == 0) throw Error("EmptyInput", "cannot fit a scaler on zero rows");
    offset_.assign(train.n_cols, 0.0);
    scale_.assign(train.n_cols, 1.0);
    warnings_.clear();
    if (kind_ == ScalerKind::None) {
        fitted_ = true;
        return;
    }
    for (std::size_t c = 0; c < train.n_cols; ++c) {
        if (kind_ == ScalerKind::MinMax) {
            double lo = train.at(0, c), hi = lo;
            for (std::size_t r = 1; r < train.n_rows; ++r) {
                lo = std::min(lo, train.at(r, c));
                hi = std::max(hi, train.at(r, c));
            }
            offset_[c] = lo;
            scale_[c] = hi - lo;
        } else {
            double n = static_cast<double>(train.n_rows);
            double mean = 0.0;
            for (std::size_t r = 0; r < train.n_rows; ++r) mean += train.at(r, c);
            mean /= n;
            double ss = 0.0;
            for (std::size_t r = 0; r < train.n_rows; ++r) {
                double d = train.at(r, c) - mean;
                ss += d * d;
            }
            offset_[c] = mean;
            scale_[c] = train.n_rows > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        }
        if (scale_[c] == 0.0) {
            std::string name = c < train.names.size() ? train.names[c] : std::to_string(c);
            warnings_.push_back("constant column " + name + " maps to 0");
        }
    }
    fitted_ = true;
}

DataMatrix Scaler::transform(const DataMatrix& x) const {
    if (kind_ == ScalerKind::None) return x;
    if (!fitted_) throw Error("NotFitted", "scaler not fitted");
    if (x.n_cols != offset_.size())
        throw Error("FeatureContractMismatch", "column count differs from the fitted scaler");
    DataMatrix out = x;
    for (std::size_t r = 0; r < out.n_rows; ++r)
        for (std::size_t c = 0; c < out.n_cols; ++c) {
            double v = out.at(r, c) - offset_[c];
            out.at(r, c) = scale_[c] == 0.0 ? 0.0 : v / scale_[c];
        }
    return out;
}

Scaler Scaler::restore(ScalerKind kind, std::vector<double> offsets, std::vector<double> scales) {
    Scaler s(kind);
    s.offset_ = std::move(offsets);
    s.scale_ = std::move(scales);
    s.fitted_ = true;
    return s;
}

}  // namespace rockmass::preprocess
