#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mmmf/data/dataset.hpp"
#include "mmmf/error.hpp"
#include "mmmf/random.hpp"
#include "mmmf/tensor.hpp"

namespace mmmf {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/**
 * @brief Windows of length `history + horizon` starting at 0, stride, 2*stride, ...
 *
 * Throws DataError when the dataset has fewer rows than one window needs.
 */
inline std::vector<Window> slide_windows(const TimeSeriesDataset& ds, int history, int horizon, int stride = 1) {
    if (history < 1 || horizon < 1 || stride < 1) {
        throw ContractError("slide_windows: history, horizon and stride must be positive");
    }
    const auto len = static_cast<std::size_t>(history + horizon);
    if (ds.num_steps() < len) {
        throw DataError("insufficient data: a window needs " + std::to_string(len) + " rows, dataset has " +
                        std::to_string(ds.num_steps()));
    }
    std::vector<Window> out;
    out.reserve((ds.num_steps() - len) / static_cast<std::size_t>(stride) + 1);
    for (std::size_t s = 0; s + len <= ds.num_steps(); s += static_cast<std::size_t>(stride)) {
        out.push_back({ds.values().middleRows(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(len)), s,
                       history, horizon});
    }
    return out;
}

/// Seeded source of mask lengths and mask values for the forecast variables.
class MaskSampler {
public:
    MaskSampler(std::uint64_t seed, const std::vector<VariableSpec>& specs) : rng_(seed) {
        for (std::size_t i = 0; i < specs.size(); ++i) {
            if (!specs[i].is_forecast()) continue;
            if (specs[i].is_categorical()) {
                throw ContractError("forecast variable '" + specs[i].name + "' is categorical; only continuous "
                                    "forecast variables can be masked");
            }
            columns_.push_back(i);
            ranges_.push_back(specs[i].observed_range);
        }
        if (columns_.empty()) throw ContractError("MaskSampler: no forecast variables");
    }

    /// Uniform over {1, ..., max_length}.
    int sample_mask_length(int max_length) {
        if (max_length < 1) throw ContractError("sample_mask_length: maximum must be >= 1");
        return std::uniform_int_distribution<int>(1, max_length)(rng_);
    }

    /// Fresh uniform draw from the observed range of forecast variable `i` (0-based among forecast variables).
    double sample_value(std::size_t i) {
        const auto& r = ranges_[i];
        if (!(r.max > r.min)) return r.min;
        return std::uniform_real_distribution<double>(r.min, r.max)(rng_);
    }

    const std::vector<std::size_t>& forecast_columns() const noexcept { return columns_; }
    const std::vector<Range>& ranges() const noexcept { return ranges_; }

private:
    Rng rng_;
    std::vector<std::size_t> columns_;
    std::vector<Range> ranges_;
};

/// Masked mini-batch. `inputs` hold normalized variable values (not yet embedded).
struct MaskedBatch {
    Tensor3 inputs;       ///< (batch, history + horizon, variables) after mask substitution
    Tensor3 targets;      ///< (batch, horizon, forecast variables) ground truth
    BoolMatrix loss_mask; ///< (batch, horizon); true on the last mask_length steps
    int mask_length = 0;
    int history = 0;

    int horizon() const noexcept { return static_cast<int>(targets.steps()); }
};

/**
 * @brief Replaces the forecast variables of the last `mask_length` rows of every
 * window with uniform draws from their observed ranges.
 *
 * Predictor cells and unmasked forecast cells are copied unchanged.
 */
inline MaskedBatch apply_mask(std::span<const Window> windows, int mask_length, MaskSampler& sampler) {
    if (windows.empty()) throw ContractError("apply_mask: empty batch");
    const int history = windows.front().history;
    const int horizon = windows.front().horizon;
    if (mask_length < 1 || mask_length > horizon) {
        throw ContractError("apply_mask: mask length " + std::to_string(mask_length) + " outside [1, " +
                            std::to_string(horizon) + "]");
    }
    const auto& cols = sampler.forecast_columns();
    const auto len = static_cast<std::size_t>(history + horizon);
    const auto vars = static_cast<std::size_t>(windows.front().data.cols());

    MaskedBatch out;
    out.inputs = Tensor3(windows.size(), len, vars);
    out.targets = Tensor3(windows.size(), static_cast<std::size_t>(horizon), cols.size());
    out.loss_mask = BoolMatrix::Constant(static_cast<Eigen::Index>(windows.size()), horizon, false);
    out.loss_mask.rightCols(mask_length).setConstant(true);
    out.mask_length = mask_length;
    out.history = history;

    for (std::size_t b = 0; b < windows.size(); ++b) {
        const auto& w = windows[b];
        if (w.history != history || w.horizon != horizon || static_cast<std::size_t>(w.data.cols()) != vars ||
            static_cast<std::size_t>(w.data.rows()) != len) {
            throw ContractError("apply_mask: windows in one batch must share their shape");
        }
        for (std::size_t t = 0; t < len; ++t) {
            for (std::size_t c = 0; c < vars; ++c) {
                out.inputs(b, t, c) = w.data(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
            }
        }
        for (int j = 0; j < horizon; ++j) {
            for (std::size_t v = 0; v < cols.size(); ++v) {
                out.targets(b, static_cast<std::size_t>(j), v) =
                    w.data(history + j, static_cast<Eigen::Index>(cols[v]));
            }
        }
        for (std::size_t t = len - static_cast<std::size_t>(mask_length); t < len; ++t) {
            for (std::size_t v = 0; v < cols.size(); ++v) {
                out.inputs(b, t, cols[v]) = sampler.sample_value(v);
            }
        }
    }
    return out;
}

namespace detail {

inline void check_prediction_shape(const Tensor3& predictions, const MaskedBatch& batch) {
    if (!predictions.same_shape(batch.targets)) {
        throw ContractError("masked_loss: predictions shape (" + std::to_string(predictions.batch()) + ", " +
                            std::to_string(predictions.steps()) + ", " + std::to_string(predictions.channels()) +
                            ") does not match targets (" + std::to_string(batch.targets.batch()) + ", " +
                            std::to_string(batch.targets.steps()) + ", " +
                            std::to_string(batch.targets.channels()) + ")");
    }
}

}  // namespace detail

/// Mean squared error over the cells selected by `batch.loss_mask`; other cells contribute nothing.
inline double masked_loss(const Tensor3& predictions, const MaskedBatch& batch) {
    detail::check_prediction_shape(predictions, batch);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < predictions.batch(); ++b) {
        for (std::size_t j = 0; j < predictions.steps(); ++j) {
            if (!batch.loss_mask(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j))) continue;
            for (std::size_t v = 0; v < predictions.channels(); ++v) {
                const double e = predictions(b, j, v) - batch.targets(b, j, v);
                sum += e * e;
                ++count;
            }
        }
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

/// d masked_loss / d predictions. Zero everywhere outside the mask.
inline Tensor3 masked_loss_gradient(const Tensor3& predictions, const MaskedBatch& batch) {
    detail::check_prediction_shape(predictions, batch);
    const auto count = static_cast<double>(batch.loss_mask.count()) * static_cast<double>(predictions.channels());
    Tensor3 grad(predictions.batch(), predictions.steps(), predictions.channels());
    for (std::size_t b = 0; b < predictions.batch(); ++b) {
        for (std::size_t j = 0; j < predictions.steps(); ++j) {
            if (!batch.loss_mask(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j))) continue;
            for (std::size_t v = 0; v < predictions.channels(); ++v) {
                grad(b, j, v) = 2.0 * (predictions(b, j, v) - batch.targets(b, j, v)) / count;
            }
        }
    }
    return grad;
}

}  // namespace mmmf
