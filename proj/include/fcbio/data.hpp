#pragma once

// Dense design matrices, dataset file formats, and seeded synthetic data.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fcbio/core.hpp"

namespace fcbio {

// Row-major dense matrix with an optional response column (right-hand side
// for regression, +-1 labels for classification).
struct DesignMatrix {
    long long m = 0;
    long long n = 0;
    std::vector<double> entries;
    std::vector<double> b;

    double at(long long i, long long j) const { return entries[static_cast<std::size_t>(i * n + j)]; }

    bool has_response() const { return !b.empty(); }

    Vector apply(const Vector& x) const {
        if (static_cast<long long>(x.size()) != n)
            throw std::invalid_argument("DesignMatrix::apply: dimension mismatch");
        Vector out(static_cast<std::size_t>(m), 0.0);
        for (long long i = 0; i < m; ++i) {
            const double* row = entries.data() + i * n;
            double s = 0.0;
            for (long long j = 0; j < n; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
            out[static_cast<std::size_t>(i)] = s;
        }
        return out;
    }

    Vector apply_transpose(const Vector& r) const {
        if (static_cast<long long>(r.size()) != m)
            throw std::invalid_argument("DesignMatrix::apply_transpose: dimension mismatch");
        Vector out(static_cast<std::size_t>(n), 0.0);
        for (long long i = 0; i < m; ++i) {
            const double* row = entries.data() + i * n;
            const double ri = r[static_cast<std::size_t>(i)];
            if (ri == 0.0) continue;
            for (long long j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] += ri * row[j];
        }
        return out;
    }
};

enum class DataFormat { csv, libsvm };

namespace detail {

inline double parse_double(const std::string& token, long long line) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    if (begin != end && *begin == '+') ++begin;  // from_chars rejects an explicit plus
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) throw ParseError("bad numeric token '" + token + "'", line);
    return out;
}

inline long long parse_int(const std::string& token, long long line) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    long long out = 0;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) throw ParseError("bad integer token '" + token + "'", line);
    return out;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline std::string strip(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ' || s.back() == '\t'))
        s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return s.substr(i);
}

}  // namespace detail

// Header "m,n" followed by m rows of n comma-separated values. A trailing
// header token "b" marks a response column appended to every row.
inline DesignMatrix load_csv(std::istream& in) {
    std::string line;
    long long lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty input", 1);
    ++lineno;
    auto header = detail::split(detail::strip(line), ',');
    if (header.size() != 2 && header.size() != 3)
        throw ParseError("header must be 'm,n' or 'm,n,b'", lineno);
    const bool with_response = header.size() == 3;
    if (with_response && detail::strip(header[2]) != "b")
        throw ParseError("third header token must be 'b'", lineno);
    DesignMatrix data;
    data.m = detail::parse_int(detail::strip(header[0]), lineno);
    data.n = detail::parse_int(detail::strip(header[1]), lineno);
    if (data.m <= 0 || data.n <= 0) throw ParseError("dimensions must be positive", lineno);
    data.entries.reserve(static_cast<std::size_t>(data.m * data.n));
    if (with_response) data.b.reserve(static_cast<std::size_t>(data.m));

    const std::size_t want = static_cast<std::size_t>(data.n) + (with_response ? 1 : 0);
    for (long long i = 0; i < data.m; ++i) {
        if (!std::getline(in, line)) throw ParseError("fewer rows than the header promises", lineno + 1);
        ++lineno;
        auto tokens = detail::split(detail::strip(line), ',');
        if (tokens.size() != want)
            throw ParseError("expected " + std::to_string(want) + " values, got " +
                                 std::to_string(tokens.size()),
                             lineno);
        for (long long j = 0; j < data.n; ++j)
            data.entries.push_back(detail::parse_double(tokens[static_cast<std::size_t>(j)], lineno));
        if (with_response) data.b.push_back(detail::parse_double(tokens.back(), lineno));
    }
    return data;
}

inline DesignMatrix load_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return load_csv(in);
}

// One "label index:value ..." line per row, indices 1-based and unique within
// a line. Columns beyond the given count (or beyond the largest index seen
// when the count is zero) are zero; labels land in the response vector.
inline DesignMatrix load_libsvm(std::istream& in, long long columns = 0) {
    struct Row {
        double label;
        std::vector<std::pair<long long, double>> items;
    };
    std::vector<Row> rows;
    long long max_index = 0;
    std::string line;
    long long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::strip(line);
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string token;
        if (!(ss >> token)) continue;
        Row row;
        row.label = detail::parse_double(token, lineno);
        while (ss >> token) {
            const auto colon = token.find(':');
            if (colon == std::string::npos) throw ParseError("expected index:value, got '" + token + "'", lineno);
            const long long idx = detail::parse_int(token.substr(0, colon), lineno);
            if (idx < 1) throw ParseError("indices are 1-based", lineno);
            if (columns > 0 && idx > columns)
                throw ParseError("index " + std::to_string(idx) + " exceeds the declared column count", lineno);
            for (const auto& [seen, _] : row.items)
                if (seen == idx) throw ParseError("duplicate index " + std::to_string(idx), lineno);
            row.items.emplace_back(idx, detail::parse_double(token.substr(colon + 1), lineno));
            max_index = std::max(max_index, idx);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no rows", lineno == 0 ? 1 : lineno);
    DesignMatrix data;
    data.m = static_cast<long long>(rows.size());
    data.n = columns > 0 ? columns : max_index;
    if (data.n <= 0) throw ParseError("no feature indices seen and no column count given", lineno);
    data.entries.assign(static_cast<std::size_t>(data.m * data.n), 0.0);
    data.b.reserve(rows.size());
    for (long long i = 0; i < data.m; ++i) {
        data.b.push_back(rows[static_cast<std::size_t>(i)].label);
        for (const auto& [idx, val] : rows[static_cast<std::size_t>(i)].items)
            data.entries[static_cast<std::size_t>(i * data.n + idx - 1)] = val;
    }
    return data;
}

inline DesignMatrix load_libsvm_file(const std::string& path, long long columns = 0) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return load_libsvm(in, columns);
}

inline DesignMatrix load_dataset(const std::string& path, DataFormat format, long long columns = 0) {
    return format == DataFormat::csv ? load_csv_file(path) : load_libsvm_file(path, columns);
}

inline void write_csv(const DesignMatrix& data, std::ostream& out) {
    out << data.m << ',' << data.n;
    if (data.has_response()) out << ",b";
    out << '\n';
    out.precision(17);
    for (long long i = 0; i < data.m; ++i) {
        for (long long j = 0; j < data.n; ++j) {
            if (j) out << ',';
            out << data.at(i, j);
        }
        if (data.has_response()) out << ',' << data.b[static_cast<std::size_t>(i)];
        out << '\n';
    }
}

inline void write_csv_file(const DesignMatrix& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_csv(data, out);
}

// ---------------------------------------------------------------------------
// Seeded synthetic data. The seed fully determines the output.

inline DesignMatrix make_gaussian_matrix(long long m, long long n, std::uint64_t seed) {
    if (m <= 0 || n <= 0) throw std::invalid_argument("make_gaussian_matrix: dimensions must be positive");
    DesignMatrix data;
    data.m = m;
    data.n = n;
    data.entries.resize(static_cast<std::size_t>(m * n));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& e : data.entries) e = gauss(rng);
    return data;
}

// Gaussian matrix with a consistent right-hand side from a unit-norm planted
// point, so the minimum-norm solution has norm at most one.
inline DesignMatrix make_min_norm_data(long long m, long long n, std::uint64_t seed) {
    DesignMatrix data = make_gaussian_matrix(m, n, seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector planted(static_cast<std::size_t>(n));
    for (double& e : planted) e = gauss(rng);
    const double len = norm(planted);
    for (double& e : planted) e /= len;
    data.b = data.apply(planted);
    return data;
}

// Gaussian features with labels from a planted separator, five percent of
// them flipped so the classes are only mostly separable.
inline DesignMatrix make_logistic_data(long long m, long long n, std::uint64_t seed) {
    DesignMatrix data = make_gaussian_matrix(m, n, seed);
    std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector planted(static_cast<std::size_t>(n));
    for (double& e : planted) e = gauss(rng);
    Vector margins = data.apply(planted);
    data.b.resize(static_cast<std::size_t>(m));
    for (long long i = 0; i < m; ++i) {
        double label = margins[static_cast<std::size_t>(i)] >= 0.0 ? 1.0 : -1.0;
        if (unit(rng) < 0.05) label = -label;
        data.b[static_cast<std::size_t>(i)] = label;
    }
    return data;
}

}  // namespace fcbio
