#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mmmf/data/calendar.hpp"
#include "mmmf/data/dataset.hpp"
#include "mmmf/error.hpp"

namespace mmmf {

/// Half-open row interval [begin, end).
struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool empty() const noexcept { return end <= begin; }
    friend bool operator==(const RowRange&, const RowRange&) = default;
};

namespace detail {

inline CivilTime parse_row_time(const TimeSeriesDataset& ds, std::size_t row) {
    auto t = parse_civil_time(ds.timestamps()[row]);
    if (!t) {
        throw DataError("row " + std::to_string(row) + ": cannot parse timestamp '" +
                        ds.timestamps()[row] + "' as a date");
    }
    return *t;
}

inline const char* month_name(unsigned m) {
    static const char* names[] = {"January", "February", "March",     "April",   "May",      "June",
                                  "July",    "August",   "September", "October", "November", "December"};
    return (m >= 1 && m <= 12) ? names[m - 1] : "?";
}

}  // namespace detail

/**
 * @brief Collapses an hourly series to one row per calendar date.
 *
 * Continuous variables take the maximum over the date's rows; categorical
 * variables take the value of the date's first row. Output timestamps are
 * "YYYY-MM-DD" labels.
 */
inline TimeSeriesDataset downsample_daily_max(const TimeSeriesDataset& ds) {
    require_valid(ds, "downsample_daily_max");
    using std::chrono::sys_days;

    std::vector<std::chrono::year_month_day> dates;
    std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end) per date
    for (std::size_t r = 0; r < ds.num_steps(); ++r) {
        const auto date = detail::parse_row_time(ds, r).date;
        if (!dates.empty() && dates.back() == date) {
            groups.back().second = r + 1;
            continue;
        }
        if (!dates.empty()) {
            const auto gap = (sys_days{date} - sys_days{dates.back()}).count();
            if (gap < 1) {
                throw DataError("row " + std::to_string(r) + ": date " + date_label(date) +
                                " is out of order");
            }
            if (gap > 1) {
                const auto missing = std::chrono::year_month_day{sys_days{dates.back()} + std::chrono::days{1}};
                throw DataError("gap in hourly data: no rows for date " + date_label(missing));
            }
        }
        dates.push_back(date);
        groups.emplace_back(r, r + 1);
    }

    const auto cols = static_cast<Eigen::Index>(ds.num_variables());
    Matrix<double> out(static_cast<Eigen::Index>(groups.size()), cols);
    std::vector<std::string> labels;
    labels.reserve(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto [begin, end] = groups[g];
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& spec = ds.specs()[static_cast<std::size_t>(c)];
            double v = ds.value(begin, static_cast<std::size_t>(c));
            if (!spec.is_categorical()) {
                for (std::size_t r = begin + 1; r < end; ++r) {
                    v = std::max(v, ds.value(r, static_cast<std::size_t>(c)));
                }
            }
            out(static_cast<Eigen::Index>(g), c) = v;
        }
        labels.push_back(date_label(dates[g]));
    }
    return {ds.specs(), std::move(out), std::move(labels)};
}

/// Appends categorical predictors month (12), day_of_month (31) and day_of_week (7, Monday = 0).
inline TimeSeriesDataset derive_calendar(const TimeSeriesDataset& ds) {
    std::vector<double> month(ds.num_steps()), dom(ds.num_steps()), dow(ds.num_steps());
    for (std::size_t r = 0; r < ds.num_steps(); ++r) {
        const auto d = detail::parse_row_time(ds, r).date;
        month[r] = static_cast<double>(static_cast<unsigned>(d.month()) - 1);
        dom[r] = static_cast<double>(static_cast<unsigned>(d.day()) - 1);
        dow[r] = static_cast<double>(weekday_code(d));
    }
    return ds.with_variable(VariableSpec::categorical("month", Role::predictor, 12), month)
        .with_variable(VariableSpec::categorical("day_of_month", Role::predictor, 31), dom)
        .with_variable(VariableSpec::categorical("day_of_week", Role::predictor, 7), dow);
}

/**
 * @brief Adds a continuous predictor holding a monthly value on every daily row.
 *
 * `monthly` labels are "YYYY-MM" (a trailing "-DD" is ignored). The broadcast
 * is piecewise constant within each month.
 */
inline TimeSeriesDataset broadcast_monthly(const TimeSeriesDataset& ds,
                                           const std::vector<std::pair<std::string, double>>& monthly,
                                           const std::string& name) {
    std::map<std::string, double> by_month;
    for (const auto& [label, value] : monthly) {
        if (label.size() < 7) throw DataError("bad month label '" + label + "'");
        by_month[label.substr(0, 7)] = value;
    }
    std::vector<double> column(ds.num_steps());
    for (std::size_t r = 0; r < ds.num_steps(); ++r) {
        const auto d = detail::parse_row_time(ds, r).date;
        const auto key = month_label(d);
        auto it = by_month.find(key);
        if (it == by_month.end()) {
            throw DataError("monthly series '" + name + "' has no value for month " + key + " (" +
                            detail::month_name(static_cast<unsigned>(d.month())) + ")");
        }
        column[r] = it->second;
    }
    Range range{};
    if (!column.empty()) {
        auto [lo, hi] = std::minmax_element(column.begin(), column.end());
        range = {*lo, *hi};
    }
    return ds.with_variable(VariableSpec::continuous(name, Role::predictor, range), column);
}

/// Chronological train/validation split of `num_steps` rows; no shuffling.
struct Split {
    RowRange train;
    RowRange validation;
};

/// The first floor(train_fraction * num_steps) rows train, the remainder validate.
/// Throws DataError when fewer than `min_train_rows` rows land in the training part.
inline Split chrono_split(std::size_t num_steps, double train_fraction, std::size_t min_train_rows = 1) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ContractError("chrono_split: train fraction must lie in (0, 1)");
    }
    const auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(num_steps) + 1e-9));
    if (n_train < min_train_rows) {
        throw DataError("insufficient data: " + std::to_string(n_train) +
                        " training rows available, " + std::to_string(min_train_rows) + " required");
    }
    return {{0, n_train}, {n_train, num_steps}};
}

inline Split chrono_split(const TimeSeriesDataset& ds, double train_fraction, std::size_t min_train_rows = 1) {
    return chrono_split(ds.num_steps(), train_fraction, min_train_rows);
}

/// Sets each continuous variable's observed_range to its min/max over `rows`.
inline TimeSeriesDataset fit_observed_ranges(const TimeSeriesDataset& ds, RowRange rows) {
    if (rows.empty() || rows.end > ds.num_steps()) {
        throw ContractError("fit_observed_ranges: empty or out-of-bounds row range");
    }
    auto specs = ds.specs();
    for (std::size_t c = 0; c < specs.size(); ++c) {
        if (specs[c].is_categorical()) continue;
        const auto col = ds.values().col(static_cast<Eigen::Index>(c))
                             .segment(static_cast<Eigen::Index>(rows.begin),
                                      static_cast<Eigen::Index>(rows.size()));
        specs[c].observed_range = {col.minCoeff(), col.maxCoeff()};
    }
    return ds.with_specs(std::move(specs));
}

}  // namespace mmmf
