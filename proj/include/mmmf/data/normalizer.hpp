#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "mmmf/data/dataset.hpp"
#include "mmmf/data/transforms.hpp"
#include "mmmf/error.hpp"

namespace mmmf {

enum class NormMethod { zscore, minmax };

inline std::string_view to_string(NormMethod m) { return m == NormMethod::zscore ? "zscore" : "minmax"; }

inline NormMethod parse_norm_method(std::string_view s) {
    if (s == "zscore") return NormMethod::zscore;
    if (s == "minmax") return NormMethod::minmax;
    throw ConfigError("unknown normalization method '" + std::string(s) + "'");
}

/// Per-variable affine map `(v - shift) / scale`; categorical columns pass through.
struct Normalizer {
    struct Affine {
        double shift = 0.0;
        double scale = 1.0;
        bool active = false;  ///< false for categorical variables
        friend bool operator==(const Affine&, const Affine&) = default;
    };

    NormMethod method = NormMethod::zscore;
    std::vector<Affine> params;

    double normalize(std::size_t col, double v) const {
        const auto& p = params.at(col);
        return p.active ? (v - p.shift) / p.scale : v;
    }
    double denormalize(std::size_t col, double v) const {
        const auto& p = params.at(col);
        return p.active ? v * p.scale + p.shift : v;
    }
    Range normalize(std::size_t col, Range r) const { return {normalize(col, r.min), normalize(col, r.max)}; }
    Range denormalize(std::size_t col, Range r) const { return {denormalize(col, r.min), denormalize(col, r.max)}; }

    /// Normalizes values and observed ranges of every continuous column.
    TimeSeriesDataset apply(const TimeSeriesDataset& ds) const { return map(ds, false); }
    TimeSeriesDataset invert(const TimeSeriesDataset& ds) const { return map(ds, true); }

    friend bool operator==(const Normalizer&, const Normalizer&) = default;

private:
    TimeSeriesDataset map(const TimeSeriesDataset& ds, bool inverse) const {
        if (params.size() != ds.num_variables()) {
            throw ContractError("normalizer fitted on " + std::to_string(params.size()) +
                                " variables applied to " + std::to_string(ds.num_variables()));
        }
        Matrix<double> v = ds.values();
        auto specs = ds.specs();
        for (std::size_t c = 0; c < params.size(); ++c) {
            if (!params[c].active) continue;
            for (Eigen::Index r = 0; r < v.rows(); ++r) {
                auto& x = v(r, static_cast<Eigen::Index>(c));
                x = inverse ? denormalize(c, x) : normalize(c, x);
            }
            specs[c].observed_range = inverse ? denormalize(c, specs[c].observed_range)
                                              : normalize(c, specs[c].observed_range);
        }
        return {std::move(specs), std::move(v), ds.timestamps()};
    }
};

/// Fits shift/scale on `rows` only. Constant continuous columns are rejected.
inline Normalizer fit_normalizer(const TimeSeriesDataset& ds, RowRange rows,
                                 NormMethod method = NormMethod::zscore) {
    if (rows.empty() || rows.end > ds.num_steps()) {
        throw ContractError("fit_normalizer: empty or out-of-bounds training row range");
    }
    Normalizer out;
    out.method = method;
    out.params.resize(ds.num_variables());
    for (std::size_t c = 0; c < ds.num_variables(); ++c) {
        const auto& spec = ds.specs()[c];
        if (spec.is_categorical()) continue;
        const auto col = ds.values()
                             .col(static_cast<Eigen::Index>(c))
                             .segment(static_cast<Eigen::Index>(rows.begin), static_cast<Eigen::Index>(rows.size()));
        Normalizer::Affine a;
        a.active = true;
        if (method == NormMethod::zscore) {
            a.shift = col.mean();
            a.scale = std::sqrt((col.array() - a.shift).square().mean());
        } else {
            a.shift = col.minCoeff();
            a.scale = col.maxCoeff() - a.shift;
        }
        if (!(a.scale > 0.0) || !std::isfinite(a.scale)) {
            throw DataError("variable '" + spec.name + "' has a degenerate scale over the training rows (constant column)");
        }
        out.params[c] = a;
    }
    return out;
}

}  // namespace mmmf
