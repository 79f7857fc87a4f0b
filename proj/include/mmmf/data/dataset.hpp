#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmmf/error.hpp"
#include "mmmf/tensor.hpp"

namespace mmmf {

/// Whether a variable is known for future steps (predictor) or is the quantity being forecast.
enum class Role { predictor, forecast };

enum class Kind { continuous, categorical };

inline std::string_view to_string(Role r) { return r == Role::predictor ? "predictor" : "forecast"; }
inline std::string_view to_string(Kind k) { return k == Kind::continuous ? "continuous" : "categorical"; }

inline Role parse_role(std::string_view s) {
    if (s == "predictor") return Role::predictor;
    if (s == "forecast") return Role::forecast;
    throw ConfigError("unknown variable role '" + std::string(s) + "'");
}

inline Kind parse_kind(std::string_view s) {
    if (s == "continuous") return Kind::continuous;
    if (s == "categorical") return Kind::categorical;
    throw ConfigError("unknown variable kind '" + std::string(s) + "'");
}

struct Range {
    double min = 0.0;
    double max = 0.0;

    bool contains(double v) const noexcept { return v >= min && v <= max; }
    friend bool operator==(const Range&, const Range&) = default;
};

/// Description of one column of a TimeSeriesDataset.
struct VariableSpec {
    std::string name;
    Role role = Role::predictor;
    Kind kind = Kind::continuous;
    int cardinality = 0;         ///< categorical only
    Range observed_range{};      ///< continuous only; fitted on training rows

    static VariableSpec continuous(std::string name, Role role, Range range = {}) {
        return {std::move(name), role, Kind::continuous, 0, range};
    }
    static VariableSpec categorical(std::string name, Role role, int cardinality) {
        return {std::move(name), role, Kind::categorical, cardinality, {}};
    }

    bool is_categorical() const noexcept { return kind == Kind::categorical; }
    bool is_forecast() const noexcept { return role == Role::forecast; }

    friend bool operator==(const VariableSpec&, const VariableSpec&) = default;
};

/**
 * @brief Aligned multivariate series.
 *
 * Categorical columns hold integer codes in the same numeric array as the
 * continuous columns. The object is immutable; transformations return new
 * datasets. Construction performs no validation so that malformed data can be
 * diagnosed with validate_dataset().
 */
class TimeSeriesDataset {
public:
    TimeSeriesDataset() = default;
    TimeSeriesDataset(std::vector<VariableSpec> specs, Matrix<double> values,
                      std::vector<std::string> timestamps)
        : specs_(std::move(specs)), values_(std::move(values)), timestamps_(std::move(timestamps)) {}

    const std::vector<VariableSpec>& specs() const noexcept { return specs_; }
    const Matrix<double>& values() const noexcept { return values_; }
    const std::vector<std::string>& timestamps() const noexcept { return timestamps_; }

    std::size_t num_steps() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t num_variables() const noexcept { return specs_.size(); }

    double value(std::size_t row, std::size_t col) const {
        return values_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            if (specs_[i].name == name) return i;
        }
        return std::nullopt;
    }

    std::size_t index_of(std::string_view name) const {
        if (auto i = find(name)) return *i;
        throw DataError("dataset has no variable named '" + std::string(name) + "'");
    }

    std::vector<std::size_t> indices(Role role) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            if (specs_[i].role == role) out.push_back(i);
        }
        return out;
    }
    std::vector<std::size_t> predictor_indices() const { return indices(Role::predictor); }
    std::vector<std::size_t> forecast_indices() const { return indices(Role::forecast); }

    /// Rows [begin, end) as a new dataset.
    TimeSeriesDataset slice(std::size_t begin, std::size_t end) const {
        if (begin > end || end > num_steps()) {
            throw ContractError("slice: row range out of bounds");
        }
        const auto n = static_cast<Eigen::Index>(end - begin);
        Matrix<double> v = values_.middleRows(static_cast<Eigen::Index>(begin), n);
        std::vector<std::string> ts(timestamps_.begin() + static_cast<std::ptrdiff_t>(begin),
                                    timestamps_.begin() + static_cast<std::ptrdiff_t>(end));
        return {specs_, std::move(v), std::move(ts)};
    }

    /// Returns a copy with one extra column appended.
    TimeSeriesDataset with_variable(VariableSpec spec, const std::vector<double>& column) const {
        if (column.size() != num_steps()) {
            throw ContractError("with_variable: column length differs from the number of steps");
        }
        if (find(spec.name)) {
            throw ContractError("with_variable: duplicate variable name '" + spec.name + "'");
        }
        Matrix<double> v(values_.rows(), values_.cols() + 1);
        v.leftCols(values_.cols()) = values_;
        for (std::size_t r = 0; r < column.size(); ++r) {
            v(static_cast<Eigen::Index>(r), values_.cols()) = column[r];
        }
        auto specs = specs_;
        specs.push_back(std::move(spec));
        return {std::move(specs), std::move(v), timestamps_};
    }

    /// Returns a copy with replaced specs (same column count).
    TimeSeriesDataset with_specs(std::vector<VariableSpec> specs) const {
        if (specs.size() != specs_.size()) {
            throw ContractError("with_specs: variable count mismatch");
        }
        return {std::move(specs), values_, timestamps_};
    }

    TimeSeriesDataset with_values(Matrix<double> values) const {
        if (values.rows() != values_.rows() || values.cols() != values_.cols()) {
            throw ContractError("with_values: shape mismatch");
        }
        return {specs_, std::move(values), timestamps_};
    }

    friend bool operator==(const TimeSeriesDataset& a, const TimeSeriesDataset& b) {
        return a.specs_ == b.specs_ && a.timestamps_ == b.timestamps_ &&
               a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
               a.values_ == b.values_;
    }

private:
    std::vector<VariableSpec> specs_;
    Matrix<double> values_;
    std::vector<std::string> timestamps_;
};

/// Lists every broken dataset invariant; empty when the dataset is well formed.
inline std::vector<std::string> validate_dataset(const TimeSeriesDataset& ds) {
    std::vector<std::string> out;
    const auto& specs = ds.specs();
    const auto& values = ds.values();

    if (static_cast<std::size_t>(values.cols()) != specs.size()) {
        out.push_back("values have " + std::to_string(values.cols()) + " columns but " +
                      std::to_string(specs.size()) + " variables are declared");
        return out;
    }
    if (ds.timestamps().size() != ds.num_steps()) {
        out.push_back("values have " + std::to_string(ds.num_steps()) + " rows but " +
                      std::to_string(ds.timestamps().size()) + " timestamps");
    }
    if (std::none_of(specs.begin(), specs.end(), [](const auto& s) { return s.is_forecast(); })) {
        out.push_back("no forecast variable declared");
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
        for (std::size_t j = i + 1; j < specs.size(); ++j) {
            if (specs[i].name == specs[j].name) {
                out.push_back("variable '" + specs[i].name + "' is declared twice");
            }
        }
    }

    for (std::size_t c = 0; c < specs.size(); ++c) {
        const auto& s = specs[c];
        if (s.is_categorical() && s.cardinality < 1) {
            out.push_back("variable '" + s.name + "': categorical cardinality must be >= 1");
        }
        if (!s.is_categorical() && s.observed_range.min > s.observed_range.max) {
            out.push_back("variable '" + s.name + "': observed range min exceeds max");
        }
        for (std::size_t r = 0; r < ds.num_steps(); ++r) {
            const double v = ds.value(r, c);
            if (!std::isfinite(v)) {
                out.push_back("variable '" + s.name + "': missing or non-finite value at row " +
                              std::to_string(r));
                break;
            }
            if (s.is_categorical() &&
                (v < 0 || v >= s.cardinality || v != std::floor(v))) {
                out.push_back("variable '" + s.name + "': code " + std::to_string(v) +
                              " at row " + std::to_string(r) + " is outside [0, " +
                              std::to_string(s.cardinality) + ")");
                break;
            }
        }
    }

    const auto& ts = ds.timestamps();
    for (std::size_t r = 1; r < ts.size(); ++r) {
        if (!(ts[r - 1] < ts[r])) {
            out.push_back("timestamps not strictly increasing at row " + std::to_string(r));
        }
    }
    return out;
}

/// Throws DataError listing the violations, if any.
inline void require_valid(const TimeSeriesDataset& ds, std::string_view context) {
    const auto violations = validate_dataset(ds);
    if (violations.empty()) return;
    std::string msg(context);
    msg += ": invalid dataset";
    for (const auto& v : violations) {
        msg += "\n  - " + v;
    }
    throw DataError(msg);
}

/// A contiguous slice of `history + horizon` rows.
struct Window {
    Matrix<double> data;
    std::size_t origin_index = 0;  ///< first source row
    int history = 0;               ///< rows [0, history) are history
    int horizon = 1;               ///< rows [history, history + horizon) are the forecast region

    int length() const noexcept { return history + horizon; }
};

}  // namespace mmmf
