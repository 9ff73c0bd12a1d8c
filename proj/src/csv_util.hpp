#pragma once

// Internal CSV helpers: header-indexed access, strict numeric parsing.
// Comma delimiter, '.' decimal separator, no quoting (identifiers and numbers
// only in every file format of this project).

#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rockmass/common.hpp"

namespace rockmass::csv {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::map<std::string, std::size_t> index;

    bool has(const std::string& col) const { return index.count(col) != 0; }

    std::size_t col(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) throw Error("MissingColumn", name);
        return it->second;
    }

    const std::string& cell(std::size_t row, const std::string& name) const {
        return rows[row][col(name)];
    }
};

inline Table read_table(std::istream& in) {
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw Error("MissingColumn", "empty input, no header row");
    t.header = split_line(line);
    for (std::size_t i = 0; i < t.header.size(); ++i) t.index[t.header[i]] = i;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = split_line(line);
        if (fields.size() != t.header.size())
            throw Error("BadValue", "row " + std::to_string(t.rows.size() + 1) +
                                        " has " + std::to_string(fields.size()) +
                                        " fields, expected " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(fields));
    }
    return t;
}

// Strict finite-double parse; row/column named in the error.
inline double parse_double(const std::string& s, std::size_t row, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v))
            throw Error("BadValue", "row " + std::to_string(row) + " column " + col + ": '" + s + "'");
        return v;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw Error("BadValue", "row " + std::to_string(row) + " column " + col + ": '" + s + "'");
    }
}

}  // namespace rockmass::csv
