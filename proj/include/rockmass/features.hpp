#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "rockmass/common.hpp"
#include "rockmass/dataset.hpp"
#include "rockmass/qsystem.hpp"

namespace rockmass::features {

inline constexpr std::size_t kNumFeatures = 51;

// Frozen feature-vector contract: for each of the 8 MWD parameters the six
// statistics Mean, Median, StandardDeviation, Variance, Skewness, Kurtosis
// (48 slots), then Overburden, TunnelWidth, JnMult.
const std::vector<std::string>& canonical_feature_names();

struct SectionInfo {
    std::string tunnel_id;
    std::string round_id;
    double section_start_m = 0.0;
    double label_q = 0.0;
    double label_q_base = 0.0;
    qsystem::QClass label_class = qsystem::QClass::A;
    qsystem::ZoneTag zone = qsystem::ZoneTag::Regular;
};

// 1 m section samples: one feature row per section plus its identifiers and
// labels, rows aligned.
struct SectionTable {
    DataMatrix features;
    std::vector<SectionInfo> info;

    SectionTable() : features(canonical_feature_names(), 0) {}
    std::size_t size() const { return info.size(); }
    SectionTable select(const std::vector<std::size_t>& idx) const;
};

// Per-parameter sample statistics over one section plus the copied geometry.
// Conventions: variance/std use the n-1 denominator; skewness is g1 =
// m3/m2^1.5 and kurtosis excess m4/m2^2 - 3 on population moments; zero
// spread defines skewness = kurtosis = 0.
std::vector<double> aggregate_section(
    const std::array<std::vector<double>, dataset::kNumMwdParams>& values,
    double overburden_m, double tunnel_width_m, double jn_mult);

// Slices a round into floor(length / section_length) sections; a reading at
// depth d lands in section floor(d / section_length). Sections with no
// readings throw EmptySection.
SectionTable section_samples(const dataset::BlastingRound& round,
                             const std::vector<dataset::DrillholeRecord>& holes,
                             double section_length_m = 1.0);

// Full dataset pass: sections for every round, chainage-ordered per tunnel,
// with transition-zone tags applied across round boundaries.
SectionTable aggregate_dataset(const dataset::TunnelDataset& d, double section_length_m = 1.0,
                               double transition_window_m = 10.0);

enum class FeatureSetKind { All51, Domain35, Automated21, Dependent39, MwdOnly48, MwdMedian8 };

FeatureSetKind feature_set_from_name(const std::string& name);  // "all51", "domain35", ...
const std::string& feature_set_name(FeatureSetKind kind);

// Names of the slots a feature-set keeps (widths 51/35/21/39/48/8).
std::vector<std::string> feature_set_names(FeatureSetKind kind);

DataMatrix select_features(const DataMatrix& samples, FeatureSetKind kind);

struct SulovResult {
    std::vector<std::string> selected;
    std::vector<std::string> degenerate;  // zero-variance features, excluded
};

// Correlated-pair elimination (keep the higher label mutual information) then
// gradient-boosted-tree importance ranking up to 0.95 cumulative importance.
SulovResult sulov_reduce(const DataMatrix& samples, const std::vector<int>& labels,
                         double correlation_threshold, std::uint64_t seed = 0);

// Sliding root-mean-square of the signal's deviation from the window mean.
// Window positions clamp inside the signal; output length equals input.
std::vector<double> rms_filter(const std::vector<double>& signal, std::size_t window);

void serialize_sections(const SectionTable& t, std::ostream& out);
SectionTable parse_sections(std::istream& in);
SectionTable load_sections(const std::string& path);
void save_sections(const SectionTable& t, const std::string& path);

}  // namespace rockmass::features
