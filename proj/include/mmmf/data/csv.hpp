#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mmmf/data/dataset.hpp"
#include "mmmf/error.hpp"

namespace mmmf {

/// Declared column of a raw CSV file.
struct ColumnDecl {
    std::string name;
    Role role = Role::predictor;
    Kind kind = Kind::continuous;
    int cardinality = 0;
};

struct CsvSchema {
    std::string timestamp_column = "timestamp";
    std::vector<ColumnDecl> columns;
};

/// Parsed CSV: header plus rows of raw string cells; `lines[i]` is the 1-based file line of row i.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;
};

namespace csv {

inline std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += ch;
        }
    }
    out.push_back(std::move(cell));
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size() && std::isfinite(out);
}

/// Shortest representation that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline CsvTable read(std::istream& in, const std::string& source) {
    CsvTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
            line.erase(0, 3);
        }
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        for (auto& c : cells) c = std::string(trim(c));
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw DataError(source + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
        t.lines.push_back(line_no);
    }
    if (t.header.empty()) throw DataError(source + ": empty CSV file");
    return t;
}

inline CsvTable read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read(in, path);
}

inline std::size_t column_index(const CsvTable& t, const std::string& name, const std::string& source) {
    auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) {
        throw DataError(source + ": schema error: missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - t.header.begin());
}

}  // namespace csv

/**
 * @brief Builds a validated dataset from a parsed CSV table and a schema.
 *
 * Rows are sorted ascending by timestamp (stable). Duplicate timestamps,
 * unparseable cells and undeclared columns raise DataError naming the line
 * or column involved. Continuous observed ranges are set to the full-data min/max;
 * callers refit them on training rows once the split is known.
 */
inline TimeSeriesDataset dataset_from_table(const CsvTable& table, const CsvSchema& schema,
                                            const std::string& source = "csv") {
    const auto ts_col = csv::column_index(table, schema.timestamp_column, source);
    std::vector<std::size_t> cols;
    std::vector<VariableSpec> specs;
    for (const auto& decl : schema.columns) {
        cols.push_back(csv::column_index(table, decl.name, source));
        specs.push_back({decl.name, decl.role, decl.kind, decl.kind == Kind::categorical ? decl.cardinality : 0, {}});
    }

    const std::size_t n = table.rows.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return table.rows[a][ts_col] < table.rows[b][ts_col];
    });

    Matrix<double> values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(specs.size()));
    std::vector<std::string> timestamps;
    timestamps.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto src = order[i];
        const auto& row = table.rows[src];
        if (row[ts_col].empty()) {
            throw DataError(source + ": line " + std::to_string(table.lines[src]) + ": empty timestamp");
        }
        if (!timestamps.empty() && timestamps.back() == row[ts_col]) {
            throw DataError(source + ": duplicate timestamp '" + row[ts_col] + "' (line " +
                            std::to_string(table.lines[src]) + ")");
        }
        timestamps.push_back(row[ts_col]);
        for (std::size_t c = 0; c < cols.size(); ++c) {
            double v = 0.0;
            if (!csv::parse_double(row[cols[c]], v)) {
                throw DataError(source + ": line " + std::to_string(table.lines[src]) + ", column '" +
                                specs[c].name + "': cannot parse '" + row[cols[c]] + "'");
            }
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
        }
    }

    for (std::size_t c = 0; c < specs.size(); ++c) {
        if (specs[c].is_categorical() || n == 0) continue;
        const auto col = values.col(static_cast<Eigen::Index>(c));
        specs[c].observed_range = {col.minCoeff(), col.maxCoeff()};
    }
    TimeSeriesDataset ds(std::move(specs), std::move(values), std::move(timestamps));
    require_valid(ds, source);
    return ds;
}

inline TimeSeriesDataset load_csv(const std::string& path, const CsvSchema& schema) {
    return dataset_from_table(csv::read_file(path), schema, path);
}

/// Writes "timestamp,<variables...>" with round-trip exact numbers.
inline void write_dataset_csv(std::ostream& out, const TimeSeriesDataset& ds,
                              const std::string& timestamp_column = "timestamp") {
    out << timestamp_column;
    for (const auto& s : ds.specs()) out << ',' << s.name;
    out << '\n';
    for (std::size_t r = 0; r < ds.num_steps(); ++r) {
        out << ds.timestamps()[r];
        for (std::size_t c = 0; c < ds.num_variables(); ++c) {
            out << ',' << csv::format_double(ds.value(r, c));
        }
        out << '\n';
    }
}

}  // namespace mmmf
