#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rockmass/common.hpp"

namespace rockmass::qsystem {

// The six Q-system inputs plus the junction multiplier (feature only; it does
// not enter the Q arithmetic).
struct QComponents {
    double rqd = 100.0;  // percent, (0, 100]
    double jn = 1.0;
    double jr = 1.0;
    double ja = 1.0;
    double jw = 1.0;
    double srf = 1.0;
    double jn_mult = 1.0;
};

enum class QClass { A = 0, B, C, D, E1, E2 };

inline constexpr int kNumClasses = 6;

const std::string& class_name(QClass c);
QClass class_from_name(const std::string& name);  // throws UnknownLabel

// Q = (RQD/Jn) * (Jr/Ja) * (Jw/SRF)
double compute_q(const QComponents& c);

// Q-base = (RQD/Jn) * (Jr/Ja)
double compute_q_base(const QComponents& c);

// Piecewise-constant class map, lower bound inclusive:
//   E2 [0.01,0.4)  E1 [0.4,1)  D [1,4)  C [4,10)  B [10,40)  A [40,inf)
// Values below 0.01 throw OutOfRange.
QClass q_to_class(double q);

// Maps each of the six classes to a grouped label, or drops the sample.
struct GroupingScheme {
    std::string name;
    std::map<QClass, std::optional<std::string>> mapping;  // nullopt = DROP

    std::vector<std::string> output_labels() const;  // distinct, in class order
};

// Grouped label for a class, nullopt when the scheme drops it.
std::optional<std::string> apply_grouping(QClass cls, const GroupingScheme& scheme);

// The eight built-in schemes ("A,B,C,D,E1,E2" ... "A,C,E").
const std::vector<GroupingScheme>& builtin_schemes();
const GroupingScheme& scheme_by_name(const std::string& name);  // throws UnknownScheme

// Parses {"name": {"A": "AB", ..., "C": "DROP"}} documents.
std::vector<GroupingScheme> schemes_from_json(const std::string& json_text);

enum class ZoneTag { Regular = 0, Transition = 1 };

// A sample is Transition iff a class-change boundary opened at or before it
// within the preceding window_m metres. The boundary sits at the chainage of
// the first sample of the new class; the window is [b, b + window_m), with the
// boundary sample itself always tagged.
std::vector<ZoneTag> tag_transition_zones(
    const std::vector<std::pair<double, QClass>>& samples, double window_m = 10.0);

}  // namespace rockmass::qsystem
