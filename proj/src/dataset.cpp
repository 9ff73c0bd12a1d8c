#include "rockmass/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "csv_util.hpp"

namespace rockmass::dataset {

namespace {

const std::vector<std::string> kParamNames = {
    "PenetrNorm", "PenetrRMS",       "RotaPressNorm", "RotaPressRMS",
    "FeedPressNorm", "HammerPressNorm", "WaterFlowNorm", "WaterFlowRMS"};

const std::vector<std::string> kParamColumns = {
    "penetr_norm", "penetr_rms",       "rota_press_norm", "rota_press_rms",
    "feed_press_norm", "hammer_press_norm", "water_flow_norm", "water_flow_rms"};

std::string mapped(const ColumnMap& schema, const std::string& logical) {
    auto it = schema.find(logical);
    return it == schema.end() ? logical : it->second;
}

}  // namespace

const std::vector<std::string>& mwd_param_names() { return kParamNames; }
const std::vector<std::string>& mwd_column_names() { return kParamColumns; }

double BlastingRound::resolved_q() const {
    if (q_value) return *q_value;
    if (q_components) return qsystem::compute_q(*q_components);
    throw Error("BadValue", "round " + round_id + " has neither q_value nor components");
}

double BlastingRound::resolved_q_base() const {
    if (q_components) return qsystem::compute_q_base(*q_components);
    return resolved_q();
}

const BlastingRound& TunnelDataset::round_by_id(const std::string& id) const {
    for (const auto& r : rounds)
        if (r.round_id == id) return r;
    throw Error("OrphanHole", "round not found: " + id);
}

std::size_t TunnelDataset::hole_count() const {
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto& [round_id, recs] : holes_by_round)
        for (const auto& rec : recs) keys.insert({round_id, rec.hole_id});
    return keys.size();
}

std::size_t TunnelDataset::record_count() const {
    std::size_t n = 0;
    for (const auto& [_, recs] : holes_by_round) n += recs.size();
    return n;
}

std::vector<BlastingRound> parse_rounds(std::istream& in, const ColumnMap& schema) {
    auto t = csv::read_table(in);
    for (const char* req : {"round_id", "tunnel_id", "start_chainage_m", "length_m",
                            "overburden_m", "tunnel_width_m", "jn_mult"})
        t.col(mapped(schema, req));

    bool has_q = t.has(mapped(schema, "q_value"));
    bool has_components = t.has(mapped(schema, "rqd"));
    if (!has_q && !has_components)
        throw Error("MissingColumn", "rounds need q_value or the six component columns");

    std::vector<BlastingRound> rounds;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        BlastingRound r;
        r.round_id = t.cell(i, mapped(schema, "round_id"));
        r.tunnel_id = t.cell(i, mapped(schema, "tunnel_id"));
        r.start_chainage_m = csv::parse_double(t.cell(i, mapped(schema, "start_chainage_m")), i + 1, "start_chainage_m");
        r.length_m = csv::parse_double(t.cell(i, mapped(schema, "length_m")), i + 1, "length_m");
        r.overburden_m = csv::parse_double(t.cell(i, mapped(schema, "overburden_m")), i + 1, "overburden_m");
        r.tunnel_width_m = csv::parse_double(t.cell(i, mapped(schema, "tunnel_width_m")), i + 1, "tunnel_width_m");
        r.jn_mult = csv::parse_double(t.cell(i, mapped(schema, "jn_mult")), i + 1, "jn_mult");
        if (r.length_m <= 0.0)
            throw Error("BadValue", "row " + std::to_string(i + 1) + ": length_m must be > 0");
        if (has_q && !t.cell(i, mapped(schema, "q_value")).empty())
            r.q_value = csv::parse_double(t.cell(i, mapped(schema, "q_value")), i + 1, "q_value");
        if (has_components && !t.cell(i, mapped(schema, "rqd")).empty()) {
            qsystem::QComponents c;
            c.rqd = csv::parse_double(t.cell(i, mapped(schema, "rqd")), i + 1, "rqd");
            c.jn = csv::parse_double(t.cell(i, mapped(schema, "jn")), i + 1, "jn");
            c.jr = csv::parse_double(t.cell(i, mapped(schema, "jr")), i + 1, "jr");
            c.ja = csv::parse_double(t.cell(i, mapped(schema, "ja")), i + 1, "ja");
            c.jw = csv::parse_double(t.cell(i, mapped(schema, "jw")), i + 1, "jw");
            c.srf = csv::parse_double(t.cell(i, mapped(schema, "srf")), i + 1, "srf");
            c.jn_mult = r.jn_mult;
            r.q_components = c;
        }
        rounds.push_back(std::move(r));
    }
    std::stable_sort(rounds.begin(), rounds.end(), [](const BlastingRound& a, const BlastingRound& b) {
        return std::tie(a.tunnel_id, a.start_chainage_m) < std::tie(b.tunnel_id, b.start_chainage_m);
    });
    return rounds;
}

TunnelDataset parse_drillholes(std::istream& in, const std::vector<BlastingRound>& rounds,
                               const ColumnMap& schema) {
    auto t = csv::read_table(in);
    std::vector<std::size_t> param_cols;
    std::size_t hole_col = t.col(mapped(schema, "hole_id"));
    std::size_t round_col = t.col(mapped(schema, "round_id"));
    std::size_t depth_col = t.col(mapped(schema, "depth_m"));
    for (const auto& name : kParamColumns) param_cols.push_back(t.col(mapped(schema, name)));

    TunnelDataset d;
    d.rounds = rounds;
    std::set<std::string> round_ids;
    for (const auto& r : rounds) round_ids.insert(r.round_id);

    std::set<std::pair<std::string, double>> seen;  // duplicate (hole_id, depth) guard
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        DrillholeRecord rec;
        rec.hole_id = t.rows[i][hole_col];
        rec.round_id = t.rows[i][round_col];
        if (!round_ids.count(rec.round_id)) throw Error("OrphanHole", rec.round_id);
        rec.depth_m = csv::parse_double(t.rows[i][depth_col], i + 1, "depth_m");
        if (rec.depth_m < 0.0)
            throw Error("BadValue", "row " + std::to_string(i + 1) + ": negative depth_m");
        for (int p = 0; p < kNumMwdParams; ++p)
            rec.params[p] = csv::parse_double(t.rows[i][param_cols[static_cast<std::size_t>(p)]],
                                              i + 1, kParamColumns[static_cast<std::size_t>(p)]);
        if (!seen.insert({rec.hole_id, rec.depth_m}).second)
            throw Error("BadValue", "row " + std::to_string(i + 1) + ": duplicate (hole_id, depth_m) " +
                                        rec.hole_id);
        d.holes_by_round[rec.round_id].push_back(std::move(rec));
    }
    return d;
}

TunnelDataset load_dataset(const std::string& drillholes_path, const std::string& rounds_path) {
    std::ifstream rin(rounds_path);
    if (!rin) throw Error("BadValue", "cannot open " + rounds_path);
    auto rounds = parse_rounds(rin);
    std::ifstream din(drillholes_path);
    if (!din) throw Error("BadValue", "cannot open " + drillholes_path);
    auto d = parse_drillholes(din, rounds);
    d.source = drillholes_path;
    return d;
}

void serialize_drillholes(const TunnelDataset& d, std::ostream& out) {
    out << "hole_id,round_id,depth_m";
    for (const auto& c : kParamColumns) out << ',' << c;
    out << '\n';
    for (const auto& r : d.rounds) {
        auto it = d.holes_by_round.find(r.round_id);
        if (it == d.holes_by_round.end()) continue;
        for (const auto& rec : it->second) {
            out << rec.hole_id << ',' << rec.round_id << ',' << format_double(rec.depth_m);
            for (double v : rec.params) out << ',' << format_double(v);
            out << '\n';
        }
    }
}

void serialize_rounds(const TunnelDataset& d, std::ostream& out) {
    out << "round_id,tunnel_id,start_chainage_m,length_m,overburden_m,tunnel_width_m,jn_mult,"
           "q_value,rqd,jn,jr,ja,jw,srf\n";
    for (const auto& r : d.rounds) {
        out << r.round_id << ',' << r.tunnel_id << ',' << format_double(r.start_chainage_m) << ','
            << format_double(r.length_m) << ',' << format_double(r.overburden_m) << ','
            << format_double(r.tunnel_width_m) << ',' << format_double(r.jn_mult) << ',';
        if (r.q_value) out << format_double(*r.q_value);
        if (r.q_components) {
            const auto& c = *r.q_components;
            out << ',' << format_double(c.rqd) << ',' << format_double(c.jn) << ','
                << format_double(c.jr) << ',' << format_double(c.ja) << ',' << format_double(c.jw)
                << ',' << format_double(c.srf);
        } else {
            out << ",,,,,,";
        }
        out << '\n';
    }
}

void save_dataset(const TunnelDataset& d, const std::string& drillholes_path,
                  const std::string& rounds_path) {
    std::ofstream dout(drillholes_path);
    if (!dout) throw Error("BadValue", "cannot write " + drillholes_path);
    serialize_drillholes(d, dout);
    std::ofstream rout(rounds_path);
    if (!rout) throw Error("BadValue", "cannot write " + rounds_path);
    serialize_rounds(d, rout);
}

ValidationReport validate(const TunnelDataset& d) {
    ValidationReport rep;
    // round overlap along chainage, per tunnel (rounds are pre-sorted)
    for (std::size_t i = 1; i < d.rounds.size(); ++i) {
        const auto& a = d.rounds[i - 1];
        const auto& b = d.rounds[i];
        if (a.tunnel_id == b.tunnel_id &&
            a.start_chainage_m + a.length_m > b.start_chainage_m + 1e-9)
            rep.findings.push_back({"overlap", a.round_id + "," + b.round_id});
    }
    for (const auto& r : d.rounds) {
        if (!r.q_value && !r.q_components)
            rep.findings.push_back({"unlabeled round", r.round_id});
        if (r.length_m <= 0.0)
            rep.findings.push_back({"non-positive length", r.round_id});
    }
    for (const auto& [round_id, recs] : d.holes_by_round) {
        std::map<std::string, double> last_depth;
        for (const auto& rec : recs) {
            auto it = last_depth.find(rec.hole_id);
            if (it != last_depth.end() && rec.depth_m <= it->second)
                rep.findings.push_back({"non-increasing depth", rec.hole_id});
            last_depth[rec.hole_id] = rec.depth_m;
        }
    }
    return rep;
}

}  // namespace rockmass::dataset
