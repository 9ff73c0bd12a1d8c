#pragma once

#include <array>
#include <string>
#include <vector>

#include "rockmass/common.hpp"
#include "rockmass/dataset.hpp"
#include "rockmass/qsystem.hpp"

namespace rockmass::synth {

// Seeded synthetic tunnel with planted class-conditional structure. Classes
// follow a sticky first-order chain whose jump distribution mimics the
// B/C-dominant skew of real tunnels; per-class MWD means are ordered along a
// hardness axis so nearer classes look more alike.
struct SynthSpec {
    int n_rounds = 2000;
    double round_length_min_m = 3.0;
    double round_length_max_m = 7.0;
    double p_stay = 0.6;
    // Jump target distribution over A..E2; defaults mirror the skew of a real
    // 1 m-section dataset (B and C dominant).
    std::array<double, qsystem::kNumClasses> class_distribution = {0.023, 0.432, 0.396,
                                                                   0.110, 0.028, 0.011};
    double noise_scale = 1.0;       // multiplies per-class parameter spread
    double smoothing_width_m = 0.0; // linear blend of class means around boundaries
    int holes_per_round = 6;
    int readings_per_metre = 5;
    std::uint64_t seed = 0;

    void check() const;  // throws BadSpec
};

struct SynthResult {
    dataset::TunnelDataset data;
    // Planted per-section truth, independent of the Q-value pathway.
    std::vector<std::string> section_round_id;
    std::vector<double> section_start_m;
    std::vector<qsystem::QClass> section_class;
};

SynthResult generate(const SynthSpec& spec);

// Planted class per 1 m section for a generated dataset; throws NotSynthetic
// for datasets lacking the generator's provenance marker.
std::vector<qsystem::QClass> oracle_labels(const dataset::TunnelDataset& d,
                                           const SynthResult& truth);

// Per-class mean of each of the 8 MWD parameters (exposed for tests).
const std::array<std::array<double, dataset::kNumMwdParams>, qsystem::kNumClasses>&
class_means();

void save_ground_truth(const SynthResult& r, const std::string& path);

}  // namespace rockmass::synth
