#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rockmass {

// All library failures carry a short machine-readable kind ("BadValue",
// "MissingColumn", ...) next to the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

// Deterministic RNG with portable sampling helpers. std:: distributions are
// implementation-defined, so uniforms and normals are derived here directly
// from the raw 64-bit stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64() {
        // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    std::size_t uniform_int(std::size_t n) {
        return n == 0 ? 0 : static_cast<std::size_t>(uniform() * static_cast<double>(n));
    }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        // Box-Muller, one value per call
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Independent child stream, stable w.r.t. parent state.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
        Rng r(seed ^ (0xd1b54a32d192ed03ULL * (index + 1)));
        return r.next_u64();
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_int(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Row-major numeric table with named columns; the shared currency between
// features, preprocessing, models and evaluation.
struct DataMatrix {
    std::vector<std::string> names;
    std::vector<double> values;  // n_rows * n_cols, row-major
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;

    DataMatrix() = default;
    DataMatrix(std::vector<std::string> col_names, std::size_t rows)
        : names(std::move(col_names)), n_rows(rows), n_cols(names.size()) {
        values.assign(n_rows * n_cols, 0.0);
    }

    double& at(std::size_t r, std::size_t c) { return values[r * n_cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * n_cols + c]; }
    const double* row(std::size_t r) const { return values.data() + r * n_cols; }

    std::vector<double> row_vec(std::size_t r) const {
        return std::vector<double>(row(r), row(r) + n_cols);
    }

    void push_row(const std::vector<double>& v) {
        values.insert(values.end(), v.begin(), v.end());
        ++n_rows;
    }

    DataMatrix select_rows(const std::vector<std::size_t>& idx) const {
        DataMatrix out(names, idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t c = 0; c < n_cols; ++c) out.at(i, c) = at(idx[i], c);
        return out;
    }

    DataMatrix select_cols(const std::vector<std::size_t>& idx) const {
        DataMatrix out;
        out.n_rows = n_rows;
        out.n_cols = idx.size();
        out.names.reserve(idx.size());
        for (auto c : idx) out.names.push_back(names[c]);
        out.values.resize(n_rows * idx.size());
        for (std::size_t r = 0; r < n_rows; ++r)
            for (std::size_t i = 0; i < idx.size(); ++i) out.at(r, i) = at(r, idx[i]);
        return out;
    }
};

// Canonical number formatting used by every CSV/JSON writer so that re-runs
// are byte-identical.
std::string format_double(double v);

}  // namespace rockmass
