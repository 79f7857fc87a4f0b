#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "mmmf/data/dataset.hpp"
#include "mmmf/data/transforms.hpp"
#include "mmmf/masking.hpp"
#include "mmmf/train/config.hpp"

namespace mmmf {

/**
 * @brief One time-major mini-batch ready for a forward pass.
 *
 * Row `t * batch + b` of every matrix belongs to sample b at step t.
 * `weights` is 1 on the cells that enter the loss and 0 elsewhere.
 */
template <typename S>
struct SampleBatch {
    Matrix<S> inputs;
    Eigen::Index batch = 0;
    Matrix<S> targets;
    Matrix<S> weights;
};

/// Steps a sample needs before its first forecast row.
inline int lead_steps(const TrainConfig& cfg) {
    switch (cfg.formulation) {
        case Formulation::mmmf: return cfg.history;
        case Formulation::rsf: return cfg.history;
        case Formulation::dmf: return cfg.dmf_input_length();
        case Formulation::sbf: return 0;
    }
    return 0;
}

/// Forecast rows a training sample supervises.
inline int tail_steps(const TrainConfig& cfg) {
    return cfg.formulation == Formulation::mmmf || cfg.formulation == Formulation::dmf ? cfg.horizon() : 1;
}

/**
 * @brief Origins (first forecast row) of every sample whose rows all lie in `rows`.
 */
inline std::vector<std::size_t> contained_origins(RowRange rows, int lead, int tail) {
    std::vector<std::size_t> out;
    for (std::size_t o = rows.begin + static_cast<std::size_t>(lead); o + static_cast<std::size_t>(tail) <= rows.end; ++o) {
        out.push_back(o);
    }
    return out;
}

/**
 * @brief Origins whose forecast rows lie in `region`; the history may reach back
 * before the region but not before row 0.
 */
inline std::vector<std::size_t> forecast_origins(RowRange region, int lead, int tail, std::size_t stride = 1) {
    if (stride == 0) throw ContractError("forecast_origins: stride must be positive");
    std::vector<std::size_t> out;
    const std::size_t first = std::max(region.begin, static_cast<std::size_t>(lead));
    for (std::size_t o = first; o + static_cast<std::size_t>(tail) <= region.end; o += stride) out.push_back(o);
    return out;
}

namespace detail {

template <typename S>
void copy_rows(const Matrix<double>& values, std::size_t first, int steps, std::size_t b, Eigen::Index batch,
               Matrix<S>& dst, const std::vector<std::size_t>* cols = nullptr) {
    for (int t = 0; t < steps; ++t) {
        const auto src = static_cast<Eigen::Index>(first) + t;
        const auto row = t * batch + static_cast<Eigen::Index>(b);
        if (cols) {
            for (std::size_t c = 0; c < cols->size(); ++c) {
                dst(row, static_cast<Eigen::Index>(c)) = static_cast<S>(values(src, static_cast<Eigen::Index>((*cols)[c])));
            }
        } else {
            dst.row(row) = values.row(src).template cast<S>();
        }
    }
}

}  // namespace detail

/// Windows of length T + k + 1 ending `horizon` rows after each origin.
inline std::vector<Window> mmmf_windows(const TimeSeriesDataset& ds, std::span<const std::size_t> origins, int history,
                                        int horizon) {
    std::vector<Window> out;
    out.reserve(origins.size());
    for (std::size_t o : origins) {
        if (o < static_cast<std::size_t>(history) || o + static_cast<std::size_t>(horizon) > ds.num_steps()) {
            throw ContractError("mmmf_windows: origin " + std::to_string(o) + " leaves the dataset");
        }
        out.push_back({ds.values().middleRows(static_cast<Eigen::Index>(o) - history, history + horizon),
                       o - static_cast<std::size_t>(history), history, horizon});
    }
    return out;
}

/// Converts a masked batch into model inputs with loss weights on the masked cells.
template <typename S>
SampleBatch<S> to_sample_batch(const MaskedBatch& mb) {
    SampleBatch<S> out;
    const auto batch = static_cast<Eigen::Index>(mb.inputs.batch());
    const auto len = static_cast<Eigen::Index>(mb.inputs.steps());
    const auto m = static_cast<Eigen::Index>(mb.targets.channels());
    out.inputs = to_time_major<S>(mb.inputs);
    out.batch = batch;
    out.targets = Matrix<S>::Zero(len * batch, m);
    out.weights = Matrix<S>::Zero(len * batch, m);
    for (int j = 0; j < mb.horizon(); ++j) {
        const Eigen::Index t = mb.history + j;
        for (Eigen::Index b = 0; b < batch; ++b) {
            for (Eigen::Index v = 0; v < m; ++v) {
                out.targets(t * batch + b, v) = static_cast<S>(mb.targets(static_cast<std::size_t>(b), static_cast<std::size_t>(j), static_cast<std::size_t>(v)));
            }
            if (mb.loss_mask(b, j)) out.weights.row(t * batch + b).setOnes();
        }
    }
    return out;
}

/// Masked batch for the given origins with one mask length shared by the batch.
template <typename S>
SampleBatch<S> mmmf_batch(const TimeSeriesDataset& ds, std::span<const std::size_t> origins, int history, int horizon,
                          int mask_length, MaskSampler& sampler) {
    const auto windows = mmmf_windows(ds, origins, history, horizon);
    return to_sample_batch<S>(apply_mask(windows, mask_length, sampler));
}

/// Inputs are the `history` rows before each origin; the final step is supervised by the origin row.
template <typename S>
SampleBatch<S> rsf_batch(const TimeSeriesDataset& ds, std::span<const std::size_t> origins, int history) {
    const auto fc = ds.forecast_indices();
    const auto batch = static_cast<Eigen::Index>(origins.size());
    SampleBatch<S> out;
    out.batch = batch;
    out.inputs.resize(history * batch, static_cast<Eigen::Index>(ds.num_variables()));
    out.targets = Matrix<S>::Zero(history * batch, static_cast<Eigen::Index>(fc.size()));
    out.weights = Matrix<S>::Zero(history * batch, static_cast<Eigen::Index>(fc.size()));
    for (std::size_t b = 0; b < origins.size(); ++b) {
        const std::size_t o = origins[b];
        if (o < static_cast<std::size_t>(history) || o >= ds.num_steps()) {
            throw ContractError("rsf_batch: origin " + std::to_string(o) + " leaves the dataset");
        }
        detail::copy_rows(ds.values(), o - static_cast<std::size_t>(history), history, b, batch, out.inputs);
        const auto row = (history - 1) * batch + static_cast<Eigen::Index>(b);
        for (std::size_t v = 0; v < fc.size(); ++v) {
            out.targets(row, static_cast<Eigen::Index>(v)) = static_cast<S>(ds.value(o, fc[v]));
        }
        out.weights.row(row).setOnes();
    }
    return out;
}

/// Inputs are the `input_length` rows before each origin; the last `horizon` steps read out the forecasts.
template <typename S>
SampleBatch<S> dmf_batch(const TimeSeriesDataset& ds, std::span<const std::size_t> origins, int input_length,
                         int horizon) {
    if (horizon > input_length) throw ContractError("dmf_batch: horizon exceeds input length");
    const auto fc = ds.forecast_indices();
    const auto batch = static_cast<Eigen::Index>(origins.size());
    SampleBatch<S> out;
    out.batch = batch;
    out.inputs.resize(input_length * batch, static_cast<Eigen::Index>(ds.num_variables()));
    out.targets = Matrix<S>::Zero(input_length * batch, static_cast<Eigen::Index>(fc.size()));
    out.weights = Matrix<S>::Zero(input_length * batch, static_cast<Eigen::Index>(fc.size()));
    for (std::size_t b = 0; b < origins.size(); ++b) {
        const std::size_t o = origins[b];
        if (o < static_cast<std::size_t>(input_length) || o + static_cast<std::size_t>(horizon) > ds.num_steps()) {
            throw ContractError("dmf_batch: origin " + std::to_string(o) + " leaves the dataset");
        }
        detail::copy_rows(ds.values(), o - static_cast<std::size_t>(input_length), input_length, b, batch, out.inputs);
        for (int j = 0; j < horizon; ++j) {
            const auto row = (input_length - horizon + j) * batch + static_cast<Eigen::Index>(b);
            for (std::size_t v = 0; v < fc.size(); ++v) {
                out.targets(row, static_cast<Eigen::Index>(v)) = static_cast<S>(ds.value(o + static_cast<std::size_t>(j), fc[v]));
            }
            out.weights.row(row).setOnes();
        }
    }
    return out;
}

/// Each origin row is one length-1 sample of predictor columns.
template <typename S>
SampleBatch<S> sbf_batch(const TimeSeriesDataset& ds, std::span<const std::size_t> origins) {
    const auto pred = ds.predictor_indices();
    const auto fc = ds.forecast_indices();
    const auto batch = static_cast<Eigen::Index>(origins.size());
    SampleBatch<S> out;
    out.batch = batch;
    out.inputs.resize(batch, static_cast<Eigen::Index>(pred.size()));
    out.targets.resize(batch, static_cast<Eigen::Index>(fc.size()));
    out.weights = Matrix<S>::Ones(batch, static_cast<Eigen::Index>(fc.size()));
    for (std::size_t b = 0; b < origins.size(); ++b) {
        if (origins[b] >= ds.num_steps()) throw ContractError("sbf_batch: origin leaves the dataset");
        detail::copy_rows(ds.values(), origins[b], 1, b, batch, out.inputs, &pred);
        detail::copy_rows(ds.values(), origins[b], 1, b, batch, out.targets, &fc);
    }
    return out;
}

}  // namespace mmmf
