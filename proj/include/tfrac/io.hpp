#pragma once

// Plain-text, whitespace-delimited file formats. Every format starts with
// optional `# key=value` metadata lines followed by a `# column ...` header;
// readers skip other comment lines and blank lines. Doubles are written in
// shortest round-trip form, so read(write(x)) == x.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mesh.hpp"

namespace tfrac::io {

using Metadata = std::vector<std::pair<std::string, std::string>>;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw FormatError("cannot format number");
    return std::string(buf.data(), ptr);
}

inline double parse_double(const std::string& token) {
    // strtod accepts nan/inf, which to_chars emits
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw FormatError("not a number: '" + token + "'");
    return v;
}

inline long long parse_integer(const std::string& token) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) throw FormatError("not an integer: '" + token + "'");
    return v;
}

inline std::uint64_t parse_unsigned(const std::string& token) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) throw FormatError("not an unsigned integer: '" + token + "'");
    return v;
}

namespace detail {

inline void write_header(std::ostream& os, const Metadata& meta, std::string_view columns) {
    for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
    os << "# " << columns << '\n';
}

/// Splits a stream into data rows of whitespace tokens, collecting metadata.
inline std::vector<std::vector<std::string>> read_rows(std::istream& is, Metadata& meta, std::size_t columns) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            const auto sp = line.find(' ', 2);
            if (line.size() > 2 && eq != std::string::npos && (sp == std::string::npos || eq < sp)) {
                meta.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
            }
            continue;
        }
        std::istringstream ss(line);
        std::vector<std::string> tokens;
        for (std::string t; ss >> t;) tokens.push_back(std::move(t));
        if (tokens.empty()) continue;
        if (tokens.size() != columns) {
            throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                              " columns, got " + std::to_string(tokens.size()));
        }
        rows.push_back(std::move(tokens));
    }
    return rows;
}

}  // namespace detail

inline std::string lookup(const Metadata& meta, std::string_view key, std::string fallback = {}) {
    for (const auto& [k, v] : meta) {
        if (k == key) return v;
    }
    return fallback;
}

// ---------------------------------------------------------------- mesh table

struct MeshTableRow {
    int edge = 0;
    Point a;
    Point b;
    Point normal;
    bool boundary = false;

    friend bool operator==(const MeshTableRow&, const MeshTableRow&) = default;
};

inline std::vector<MeshTableRow> mesh_table(const Mesh& mesh) {
    std::vector<MeshTableRow> rows;
    rows.reserve(mesh.num_edges());
    for (std::size_t k = 0; k < mesh.num_edges(); ++k) {
        const Edge& e = mesh.edge(k);
        rows.push_back({static_cast<int>(k), e.a, e.b, e.normal(), e.on_boundary()});
    }
    return rows;
}

inline void write_mesh_table(std::ostream& os, const std::vector<MeshTableRow>& rows) {
    detail::write_header(os, {}, "edge_index x0 y0 x1 y1 normal_x normal_y boundary_flag");
    for (const auto& r : rows) {
        os << r.edge << ' ' << format_double(r.a.x) << ' ' << format_double(r.a.y) << ' ' << format_double(r.b.x)
           << ' ' << format_double(r.b.y) << ' ' << format_double(r.normal.x) << ' ' << format_double(r.normal.y)
           << ' ' << (r.boundary ? 1 : 0) << '\n';
    }
}

inline void write_mesh_table(std::ostream& os, const Mesh& mesh) { write_mesh_table(os, mesh_table(mesh)); }

inline std::vector<MeshTableRow> read_mesh_table(std::istream& is) {
    Metadata meta;
    std::vector<MeshTableRow> rows;
    for (const auto& t : detail::read_rows(is, meta, 8)) {
        rows.push_back({static_cast<int>(parse_integer(t[0])),
                        {parse_double(t[1]), parse_double(t[2])},
                        {parse_double(t[3]), parse_double(t[4])},
                        {parse_double(t[5]), parse_double(t[6])},
                        parse_integer(t[7]) != 0});
    }
    return rows;
}

// ---------------------------------------------------------------- cell field

struct CellField {
    Metadata meta;
    std::string value_name = "value";
    std::vector<Point> centres;
    Eigen::VectorXd values;

    friend bool operator==(const CellField& x, const CellField& y) {
        return x.meta == y.meta && x.centres == y.centres && x.values.size() == y.values.size() &&
               x.values == y.values;
    }
};

inline CellField make_cell_field(const Mesh& mesh, const Eigen::VectorXd& values, std::string value_name,
                                 Metadata meta = {}) {
    if (values.size() != static_cast<Eigen::Index>(mesh.num_cells())) {
        throw std::invalid_argument("field size does not match the mesh");
    }
    CellField f;
    f.meta = std::move(meta);
    f.value_name = std::move(value_name);
    for (const Cell& c : mesh.cells()) f.centres.push_back(c.center());
    f.values = values;
    return f;
}

/// `cell_index x_center y_center value`
inline void write_cell_field(std::ostream& os, const CellField& f) {
    detail::write_header(os, f.meta, "cell_index x_center y_center " + f.value_name);
    for (std::size_t k = 0; k < f.centres.size(); ++k) {
        os << k << ' ' << format_double(f.centres[k].x) << ' ' << format_double(f.centres[k].y) << ' '
           << format_double(f.values[static_cast<Eigen::Index>(k)]) << '\n';
    }
}

inline CellField read_cell_field(std::istream& is) {
    CellField f;
    const auto rows = detail::read_rows(is, f.meta, 4);
    f.values.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (parse_integer(rows[k][0]) != static_cast<long long>(k)) throw FormatError("cell indices out of order");
        f.centres.push_back({parse_double(rows[k][1]), parse_double(rows[k][2])});
        f.values[static_cast<Eigen::Index>(k)] = parse_double(rows[k][3]);
    }
    return f;
}

// ---------------------------------------------------------------- measurements

/// Stacked boundary data: experiment-major, then time, then edge.
struct Measurements {
    Metadata meta;
    int experiments = 0;
    std::vector<int> times;
    std::vector<int> edges;
    Eigen::VectorXd values;

    std::size_t expected_size() const { return static_cast<std::size_t>(experiments) * times.size() * edges.size(); }

    friend bool operator==(const Measurements& x, const Measurements& y) {
        return x.meta == y.meta && x.experiments == y.experiments && x.times == y.times && x.edges == y.edges &&
               x.values.size() == y.values.size() && x.values == y.values;
    }
};

/// `experiment time_index edge_index value`, one measurement per line.
inline void write_measurements(std::ostream& os, const Measurements& m) {
    if (m.values.size() != static_cast<Eigen::Index>(m.expected_size())) {
        throw std::invalid_argument("measurement vector does not match its layout");
    }
    detail::write_header(os, m.meta, "experiment time_index edge_index value");
    Eigen::Index pos = 0;
    for (int e = 0; e < m.experiments; ++e) {
        for (int t : m.times) {
            for (int edge : m.edges) os << e << ' ' << t << ' ' << edge << ' ' << format_double(m.values[pos++]) << '\n';
        }
    }
}

/// Rows may come in any order; the layout is recovered from the distinct
/// experiment, time and edge indices and must form a full grid.
inline Measurements read_measurements(std::istream& is) {
    Measurements m;
    const auto rows = detail::read_rows(is, m.meta, 4);
    if (rows.empty()) throw FormatError("no measurements");
    struct Entry {
        int experiment, time, edge;
        double value;
    };
    std::vector<Entry> entries;
    entries.reserve(rows.size());
    for (const auto& t : rows) {
        entries.push_back({static_cast<int>(parse_integer(t[0])), static_cast<int>(parse_integer(t[1])),
                           static_cast<int>(parse_integer(t[2])), parse_double(t[3])});
    }
    auto distinct = [&](auto key) {
        std::vector<int> v;
        for (const auto& e : entries) v.push_back(key(e));
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    const auto exps = distinct([](const Entry& e) { return e.experiment; });
    m.times = distinct([](const Entry& e) { return e.time; });
    m.edges = distinct([](const Entry& e) { return e.edge; });
    if (exps.front() != 0 || exps.back() != static_cast<int>(exps.size()) - 1) {
        throw FormatError("experiment indices must be 0..N-1");
    }
    m.experiments = static_cast<int>(exps.size());
    if (entries.size() != m.expected_size()) throw FormatError("measurements do not form a complete grid");
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
        return std::tie(x.experiment, x.time, x.edge) < std::tie(y.experiment, y.time, y.edge);
    });
    m.values.resize(static_cast<Eigen::Index>(entries.size()));
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (k > 0 && std::tie(entries[k].experiment, entries[k].time, entries[k].edge) ==
                         std::tie(entries[k - 1].experiment, entries[k - 1].time, entries[k - 1].edge)) {
            throw FormatError("duplicate measurement");
        }
        m.values[static_cast<Eigen::Index>(k)] = entries[k].value;
    }
    return m;
}

// ---------------------------------------------------------------- iteration log

struct IterationRow {
    int k = 0;
    double residual_norm = 0.0;
    double step_norm = 0.0;
    double relative_error = 0.0;
    double seconds = 0.0;
};

struct IterationLog {
    Metadata meta;
    std::vector<IterationRow> rows;

    friend bool operator==(const IterationLog& x, const IterationLog& y) {
        if (x.meta != y.meta || x.rows.size() != y.rows.size()) return false;
        auto same = [](double a, double b) { return a == b || (a != a && b != b); };
        for (std::size_t i = 0; i < x.rows.size(); ++i) {
            const auto &a = x.rows[i], &b = y.rows[i];
            if (a.k != b.k || !same(a.residual_norm, b.residual_norm) || !same(a.step_norm, b.step_norm) ||
                !same(a.relative_error, b.relative_error) || !same(a.seconds, b.seconds)) {
                return false;
            }
        }
        return true;
    }
};

/// `k residual_norm step_norm relative_error seconds`
inline void write_iteration_log(std::ostream& os, const IterationLog& log) {
    detail::write_header(os, log.meta, "k residual_norm step_norm relative_error seconds");
    for (const auto& r : log.rows) {
        os << r.k << ' ' << format_double(r.residual_norm) << ' ' << format_double(r.step_norm) << ' '
           << format_double(r.relative_error) << ' ' << format_double(r.seconds) << '\n';
    }
}

inline IterationLog read_iteration_log(std::istream& is) {
    IterationLog log;
    for (const auto& t : detail::read_rows(is, log.meta, 5)) {
        log.rows.push_back({static_cast<int>(parse_integer(t[0])), parse_double(t[1]), parse_double(t[2]),
                            parse_double(t[3]), parse_double(t[4])});
    }
    return log;
}

// ---------------------------------------------------------------- summary

struct SummaryRow {
    std::string name;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    std::uint64_t seed = 0;
    int experiments = 1;
    int iterations = 0;
    double final_epsilon = 0.0;

    /// Identifies a sweep point; rows with equal keys replace each other.
    auto key() const { return std::tie(name, alpha, beta, gamma, delta, seed, experiments); }

    friend bool operator==(const SummaryRow& x, const SummaryRow& y) {
        auto same = [](double a, double b) { return a == b || (a != a && b != b); };
        return x.key() == y.key() && x.iterations == y.iterations && same(x.final_epsilon, y.final_epsilon);
    }
};

inline constexpr std::string_view kSummaryColumns = "name alpha beta gamma delta seed N iterations final_epsilon";

inline std::string format_summary_row(const SummaryRow& r) {
    std::ostringstream os;
    os << r.name << ' ' << format_double(r.alpha) << ' ' << format_double(r.beta) << ' ' << format_double(r.gamma)
       << ' ' << format_double(r.delta) << ' ' << r.seed << ' ' << r.experiments << ' ' << r.iterations << ' '
       << format_double(r.final_epsilon);
    return os.str();
}

inline void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
    detail::write_header(os, {}, kSummaryColumns);
    for (const auto& r : rows) os << format_summary_row(r) << '\n';
}

inline std::vector<SummaryRow> read_summary(std::istream& is) {
    Metadata meta;
    std::vector<SummaryRow> rows;
    for (const auto& t : detail::read_rows(is, meta, 9)) {
        SummaryRow r;
        r.name = t[0];
        r.alpha = parse_double(t[1]);
        r.beta = parse_double(t[2]);
        r.gamma = parse_double(t[3]);
        r.delta = parse_double(t[4]);
        r.seed = parse_unsigned(t[5]);
        r.experiments = static_cast<int>(parse_integer(t[6]));
        r.iterations = static_cast<int>(parse_integer(t[7]));
        r.final_epsilon = parse_double(t[8]);
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Replace the row with the same key, or append.
inline void merge_summary_row(std::vector<SummaryRow>& rows, const SummaryRow& row) {
    for (auto& r : rows) {
        if (r.key() == row.key()) {
            r = row;
            return;
        }
    }
    rows.push_back(row);
}

}  // namespace tfrac::io
