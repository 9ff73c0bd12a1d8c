#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rockmass/common.hpp"
#include "rockmass/qsystem.hpp"

namespace rockmass::dataset {

inline constexpr int kNumMwdParams = 8;

// Canonical order of the eight processed MWD parameters; feature naming,
// CSV columns and the synth generator all follow this order.
const std::vector<std::string>& mwd_param_names();      // PenetrNorm, ...
const std::vector<std::string>& mwd_column_names();     // penetr_norm, ...

struct DrillholeRecord {
    std::string hole_id;
    std::string round_id;
    double depth_m = 0.0;
    double params[kNumMwdParams] = {};
};

struct BlastingRound {
    std::string round_id;
    std::string tunnel_id;
    double start_chainage_m = 0.0;
    double length_m = 0.0;
    double overburden_m = 0.0;
    double tunnel_width_m = 0.0;
    double jn_mult = 1.0;
    std::optional<qsystem::QComponents> q_components;
    std::optional<double> q_value;

    // Stated q_value if present, otherwise computed from components.
    double resolved_q() const;
    double resolved_q_base() const;  // needs components; falls back to q_value
};

struct TunnelDataset {
    std::vector<BlastingRound> rounds;  // ordered by (tunnel_id, chainage)
    std::map<std::string, std::vector<DrillholeRecord>> holes_by_round;
    std::string source;

    const BlastingRound& round_by_id(const std::string& id) const;
    std::size_t hole_count() const;
    std::size_t record_count() const;
};

// Optional renaming of CSV headers: logical name -> actual column name.
using ColumnMap = std::map<std::string, std::string>;

std::vector<BlastingRound> parse_rounds(std::istream& in, const ColumnMap& schema = {});

// Parses drillholes.csv and binds each hole to a known round.
// Throws MissingColumn / BadValue / OrphanHole.
TunnelDataset parse_drillholes(std::istream& in, const std::vector<BlastingRound>& rounds,
                               const ColumnMap& schema = {});

TunnelDataset load_dataset(const std::string& drillholes_path, const std::string& rounds_path);

void serialize_drillholes(const TunnelDataset& d, std::ostream& out);
void serialize_rounds(const TunnelDataset& d, std::ostream& out);
void save_dataset(const TunnelDataset& d, const std::string& drillholes_path,
                  const std::string& rounds_path);

struct Finding {
    std::string check;  // "overlap", "unlabeled round", ...
    std::string detail;
};

struct ValidationReport {
    std::vector<Finding> findings;
    bool clean() const { return findings.empty(); }
};

// Non-mutating consistency checks: round overlap, unlabeled rounds,
// non-monotone depths, non-positive lengths.
ValidationReport validate(const TunnelDataset& d);

}  // namespace rockmass::dataset
