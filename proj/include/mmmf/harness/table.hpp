#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mmmf/eval/evaluate.hpp"

namespace mmmf::harness {

struct TableOptions {
    int step = 0;                   ///< forecast step to tabulate; 0 is the average over steps
    std::string variable = "all";
    std::string metric;             ///< empty picks the first error metric present
};

struct TableCell {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double std = std::numeric_limits<double>::quiet_NaN();
    bool best = false;
};

struct TableRow {
    std::string base_model;
    std::string method;
    std::vector<TableCell> values;           ///< one per column (two in paired mode)
    std::optional<double> inference_ms;      ///< from the first column's reports
};

/// Rows grouped by base model in order of first appearance; `best` marks the group's argmin per column.
struct ComparisonTable {
    std::string metric;
    std::vector<std::string> columns;
    std::vector<TableRow> rows;
};

namespace detail {

inline std::string pick_metric(const std::vector<EvalRow>& rows, const std::string& requested) {
    if (!requested.empty()) return requested;
    for (const auto& r : rows) {
        if (r.metric != "inference_seconds") return r.metric;
    }
    return "mse";
}

inline const EvalRow* find_row(const std::vector<EvalRow>& rows, const std::string& base, const std::string& method,
                               int step, const std::string& variable, const std::string& metric) {
    for (const auto& r : rows) {
        if (r.base_model == base && r.method == method && r.horizon == step && r.variable == variable && r.metric == metric) return &r;
    }
    return nullptr;
}

inline std::string format_number(double v, const char* fmt) {
    if (!std::isfinite(v)) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

}  // namespace detail

/**
 * @brief Builds the comparison table. With `paired` set, a second value
 * column is filled from the second report set (for example a dataset variant).
 */
inline ComparisonTable build_comparison(const std::vector<EvalRow>& reports, const TableOptions& opt = {},
                                        const std::optional<std::vector<EvalRow>>& paired = std::nullopt,
                                        std::vector<std::string> labels = {}) {
    ComparisonTable t;
    t.metric = detail::pick_metric(reports, opt.metric);
    const std::size_t ncols = paired ? 2 : 1;
    if (labels.size() < ncols) {
        labels = paired ? std::vector<std::string>{"a", "b"} : std::vector<std::string>{t.metric};
    }
    t.columns.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(ncols));

    std::vector<std::string> bases;
    std::vector<std::pair<std::string, std::string>> pairs;
    auto collect = [&](const std::vector<EvalRow>& rows) {
        for (const auto& r : rows) {
            if (r.metric != t.metric) continue;
            if (std::find(bases.begin(), bases.end(), r.base_model) == bases.end()) bases.push_back(r.base_model);
            const std::pair key{r.base_model, r.method};
            if (std::find(pairs.begin(), pairs.end(), key) == pairs.end()) pairs.push_back(key);
        }
    };
    collect(reports);
    if (paired) collect(*paired);

    for (const auto& base : bases) {
        const std::size_t group_begin = t.rows.size();
        for (const auto& [b, method] : pairs) {
            if (b != base) continue;
            TableRow row{base, method, {}, std::nullopt};
            for (std::size_t c = 0; c < ncols; ++c) {
                const auto& src = c == 0 ? reports : *paired;
                TableCell cell;
                if (const auto* r = detail::find_row(src, base, method, opt.step, opt.variable, t.metric)) {
                    cell.mean = r->mean;
                    cell.std = r->std;
                }
                row.values.push_back(cell);
            }
            for (const auto& r : reports) {
                if (r.base_model == base && r.method == method && r.metric == "inference_seconds") row.inference_ms = r.mean * 1e3;
            }
            t.rows.push_back(std::move(row));
        }
        for (std::size_t c = 0; c < ncols; ++c) {
            std::optional<std::size_t> best;
            for (std::size_t i = group_begin; i < t.rows.size(); ++i) {
                const double v = t.rows[i].values[c].mean;
                if (std::isfinite(v) && (!best || v < t.rows[*best].values[c].mean)) best = i;
            }
            if (best) t.rows[*best].values[c].best = true;
        }
    }
    return t;
}

inline void write_table_text(std::ostream& out, const ComparisonTable& t) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-18s %-10s", "base_model", "method");
    out << buf;
    for (const auto& c : t.columns) {
        std::snprintf(buf, sizeof buf, " %24s", (c + " (" + t.metric + ")").c_str());
        out << buf;
    }
    out << "  inference_ms\n";
    std::string last;
    for (const auto& r : t.rows) {
        if (!last.empty() && r.base_model != last) out << '\n';
        last = r.base_model;
        std::snprintf(buf, sizeof buf, "%-18s %-10s", r.base_model.c_str(), r.method.c_str());
        out << buf;
        for (const auto& v : r.values) {
            const std::string s = detail::format_number(v.mean, "%.5g") + " +/- " + detail::format_number(v.std, "%.3g") +
                                  (v.best ? " *" : "  ");
            std::snprintf(buf, sizeof buf, " %24s", s.c_str());
            out << buf;
        }
        out << "  " << (r.inference_ms ? detail::format_number(*r.inference_ms, "%.4g") : std::string("-")) << '\n';
    }
    out << "(* best in group)\n";
}

inline void write_table_csv(std::ostream& out, const ComparisonTable& t) {
    out << "base_model,method";
    for (const auto& c : t.columns) out << ',' << c << "_mean," << c << "_std," << c << "_best";
    out << ",inference_ms\n";
    for (const auto& r : t.rows) {
        out << r.base_model << ',' << r.method;
        for (const auto& v : r.values) {
            out << ',' << csv::format_double(v.mean) << ',' << csv::format_double(v.std) << ',' << (v.best ? 1 : 0);
        }
        out << ',' << (r.inference_ms ? csv::format_double(*r.inference_ms) : std::string()) << '\n';
    }
}

}  // namespace mmmf::harness
