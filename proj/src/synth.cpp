#include "rockmass/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace rockmass::synth {

namespace {

constexpr const char* kProvenancePrefix = "synth:";

// Q intervals per class (A..E2); the top band is capped so log-uniform
// sampling stays proper.
constexpr double kQLo[qsystem::kNumClasses] = {40.0, 10.0, 4.0, 1.0, 0.4, 0.01};
constexpr double kQHi[qsystem::kNumClasses] = {400.0, 40.0, 10.0, 4.0, 1.0, 0.4};

// Per-parameter spread at noise_scale 1; sized against the class-to-class
// mean steps so adjacent classes overlap moderately.
constexpr std::array<double, dataset::kNumMwdParams> kSigma = {0.25, 0.08, 0.35, 0.10,
                                                               0.45, 0.50, 0.30, 0.07};

}  // namespace

const std::array<std::array<double, dataset::kNumMwdParams>, qsystem::kNumClasses>&
class_means() {
    // hardness axis: PenetrNorm falls and RMS channels rise from A to E2
    static const std::array<std::array<double, dataset::kNumMwdParams>, qsystem::kNumClasses>
        means = [] {
            std::array<std::array<double, dataset::kNumMwdParams>, qsystem::kNumClasses> m{};
            constexpr double base[dataset::kNumMwdParams] = {3.0, 0.40, 6.0, 0.50,
                                                             8.0, 12.0, 4.0, 0.30};
            constexpr double slope[dataset::kNumMwdParams] = {-0.35, 0.12, -0.50, 0.15,
                                                              -0.60, -0.70, 0.40, 0.10};
            for (int c = 0; c < qsystem::kNumClasses; ++c)
                for (int p = 0; p < dataset::kNumMwdParams; ++p)
                    m[static_cast<std::size_t>(c)][static_cast<std::size_t>(p)] =
                        base[p] + slope[p] * static_cast<double>(c);
            return m;
        }();
    return means;
}

void SynthSpec::check() const {
    if (n_rounds < 1) throw Error("BadSpec", "n_rounds must be >= 1");
    if (!(round_length_min_m > 0.0) || round_length_max_m < round_length_min_m)
        throw Error("BadSpec", "invalid round length range");
    if (round_length_min_m < 1.0)
        throw Error("BadSpec", "rounds shorter than one section");
    if (p_stay < 0.0 || p_stay > 1.0) throw Error("BadSpec", "p_stay must be in [0,1]");
    double sum = 0.0;
    for (double p : class_distribution) {
        if (p < 0.0) throw Error("BadSpec", "negative class probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("BadSpec", "class distribution must sum to 1");
    if (noise_scale < 0.0) throw Error("BadSpec", "noise_scale must be >= 0");
    if (smoothing_width_m < 0.0) throw Error("BadSpec", "smoothing width must be >= 0");
    if (holes_per_round < 1) throw Error("BadSpec", "holes_per_round must be >= 1");
    if (readings_per_metre < 1) throw Error("BadSpec", "readings_per_metre must be >= 1");
}

namespace {

int sample_class(const std::array<double, qsystem::kNumClasses>& dist, Rng& rng) {
    double u = rng.uniform();
    double acc = 0.0;
    for (int c = 0; c < qsystem::kNumClasses; ++c) {
        acc += dist[static_cast<std::size_t>(c)];
        if (u < acc) return c;
    }
    return qsystem::kNumClasses - 1;
}

// Components chosen so compute_q reproduces q up to rounding; the stated
// q_value carries the exact number.
qsystem::QComponents components_for(double q, double jn_mult, Rng& rng) {
    qsystem::QComponents c;
    c.jw = 1.0;
    c.srf = rng.uniform() < 0.5 ? 1.0 : 2.5;
    double q_base = q * c.srf;
    c.rqd = 100.0;
    c.jn = std::clamp(100.0 / q_base, 0.5, 20.0);
    c.jr = q_base * c.jn / 100.0;
    c.ja = 1.0;
    c.jn_mult = jn_mult;
    return c;
}

}  // namespace

SynthResult generate(const SynthSpec& spec) {
    spec.check();
    SynthResult result;
    result.data.source = std::string(kProvenancePrefix) + "seed=" + std::to_string(spec.seed);

    Rng chain_rng(Rng::derive(spec.seed, 0));
    const auto& means = class_means();

    double chainage = 0.0;
    int cls = sample_class(spec.class_distribution, chain_rng);
    int prev_cls = cls;
    double boundary_m = -1e18;  // chainage where the current class began

    for (int r = 0; r < spec.n_rounds; ++r) {
        Rng rng(Rng::derive(spec.seed, static_cast<std::uint64_t>(r) + 1));

        if (r > 0) {
            int next = cls;
            if (chain_rng.uniform() >= spec.p_stay)
                next = sample_class(spec.class_distribution, chain_rng);
            if (next != cls) {
                prev_cls = cls;
                cls = next;
                boundary_m = chainage;
            }
        }

        dataset::BlastingRound round;
        char id[16];
        std::snprintf(id, sizeof id, "R%05d", r + 1);
        round.round_id = id;
        round.tunnel_id = "T1";
        round.start_chainage_m = chainage;
        round.length_m = rng.uniform_range(spec.round_length_min_m, spec.round_length_max_m);
        round.overburden_m = 60.0 + 30.0 * std::sin(chainage / 250.0) + 2.0 * rng.normal();
        round.tunnel_width_m = 9.5;
        round.jn_mult = rng.uniform() < 0.05 ? 2.0 : 1.0;

        auto c = static_cast<std::size_t>(cls);
        double q = std::exp(rng.uniform_range(std::log(kQLo[c]), std::log(kQHi[c])));
        round.q_value = q;
        round.q_components = components_for(q, round.jn_mult, rng);

        auto& holes = result.data.holes_by_round[round.round_id];
        int n_readings = static_cast<int>(round.length_m * spec.readings_per_metre);
        for (int h = 0; h < spec.holes_per_round; ++h) {
            dataset::DrillholeRecord rec;
            char hole_id[24];
            std::snprintf(hole_id, sizeof hole_id, "%s-H%02d", round.round_id.c_str(), h + 1);
            rec.hole_id = hole_id;
            rec.round_id = round.round_id;
            for (int j = 0; j < n_readings; ++j) {
                rec.depth_m = (static_cast<double>(j) + 0.5) /
                              static_cast<double>(spec.readings_per_metre);
                double x = chainage + rec.depth_m;
                for (int p = 0; p < dataset::kNumMwdParams; ++p) {
                    auto pi = static_cast<std::size_t>(p);
                    double mean = means[c][pi];
                    if (spec.smoothing_width_m > 0.0 && x - boundary_m < spec.smoothing_width_m) {
                        // blend out of the previous class across the window
                        double lambda = (x - boundary_m) / spec.smoothing_width_m;
                        double w_new = 0.5 + 0.5 * lambda;
                        mean = w_new * means[c][pi] +
                               (1.0 - w_new) * means[static_cast<std::size_t>(prev_cls)][pi];
                    }
                    rec.params[p] = mean + kSigma[pi] * spec.noise_scale * rng.normal();
                }
                holes.push_back(rec);
            }
        }

        auto n_sections = static_cast<std::size_t>(round.length_m);
        for (std::size_t s = 0; s < n_sections; ++s) {
            result.section_round_id.push_back(round.round_id);
            result.section_start_m.push_back(chainage + static_cast<double>(s));
            result.section_class.push_back(static_cast<qsystem::QClass>(cls));
        }

        chainage += round.length_m;
        result.data.rounds.push_back(std::move(round));
    }
    return result;
}

std::vector<qsystem::QClass> oracle_labels(const dataset::TunnelDataset& d,
                                           const SynthResult& truth) {
    if (d.source.rfind(kProvenancePrefix, 0) != 0)
        throw Error("NotSynthetic", "dataset lacks the generator provenance marker");
    if (truth.data.source != d.source)
        throw Error("NotSynthetic", "ground truth belongs to a different generation");
    return truth.section_class;
}

void save_ground_truth(const SynthResult& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoFailure", "cannot write " + path);
    out << "round_id,section_start_m,true_class\n";
    for (std::size_t i = 0; i < r.section_class.size(); ++i)
        out << r.section_round_id[i] << ',' << format_double(r.section_start_m[i]) << ','
            << qsystem::class_name(r.section_class[i]) << '\n';
}

}  // namespace rockmass::synth
