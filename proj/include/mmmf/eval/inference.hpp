#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmmf/masking.hpp"
#include "mmmf/train/forecaster.hpp"
#include "mmmf/train/samples.hpp"

namespace mmmf {

/**
 * @brief One forecast query on the raw (unnormalized) scale.
 *
 * `history` holds every dataset variable in dataset column order, oldest row
 * first. `future_predictors` holds the predictor columns of the future rows.
 *
 * For MMMF the future block always spans the trained k + 1 steps: the forecast
 * covers its last `horizon` rows and `future_targets` supplies the forecast
 * variables of the first k + 1 - horizon rows. The other formulations forecast
 * the first `horizon` future rows and ignore `future_targets`.
 */
struct ForecastRequest {
    Matrix<double> history;
    Matrix<double> future_predictors;
    Matrix<double> future_targets;
    int horizon = 1;
};

struct InferenceOptions {
    int mask_fills = 1;                       ///< MMMF: average over this many random mask fills
    std::optional<std::uint64_t> mask_seed;   ///< MMMF: defaults to the forecaster's inference stream
    std::size_t chunk = 512;                  ///< origins per forward pass
};

/// Called once per RSF rollout step with the inputs fed to the model and, per input row, whether its forecast variables are predictions.
using RolloutObserver = std::function<void(int step, const Tensor3& inputs, const std::vector<bool>& predicted)>;

/// History rows a formulation needs before the first forecast row.
template <typename S>
int required_history(const TrainedForecaster<S>& f) {
    return lead_steps(f.config);
}

namespace detail {

template <typename S>
void check_horizon(const TrainedForecaster<S>& f, int horizon) {
    const int max = f.formulation == Formulation::mmmf || f.formulation == Formulation::dmf ? f.config.horizon()
                                                                                           : std::numeric_limits<int>::max();
    if (horizon < 1 || horizon > max) {
        throw ContractError("forecast horizon " + std::to_string(horizon) + " outside [1, " + std::to_string(max) + "]");
    }
}

template <typename S>
void check_formulation(const TrainedForecaster<S>& f, Formulation expected) {
    if (f.formulation != expected) {
        throw ContractError("forecaster was trained as " + std::string(to_string(f.formulation)) + ", not " +
                            std::string(to_string(expected)));
    }
}

template <typename S>
MaskSampler inference_sampler(const TrainedForecaster<S>& f, const InferenceOptions& opt) {
    const std::uint64_t seed =
        opt.mask_seed.value_or(derive_seed(f.config.seed, static_cast<std::uint64_t>(Stream::inference_mask)));
    return MaskSampler(seed, f.specs);
}

inline Tensor3 concat_batches(const std::vector<Tensor3>& parts) {
    std::size_t total = 0;
    for (const auto& p : parts) total += p.batch();
    if (parts.empty()) return {};
    Tensor3 out(total, parts.front().steps(), parts.front().channels());
    std::size_t b0 = 0;
    for (const auto& p : parts) {
        std::copy(p.data().begin(), p.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(b0 * p.steps() * p.channels()));
        b0 += p.batch();
    }
    return out;
}

/// Reads steps [first, first + count) of a time-major model output into (batch, count, m).
template <typename S>
Tensor3 read_steps(const Matrix<S>& out, Eigen::Index batch, int first, int count) {
    Tensor3 t(static_cast<std::size_t>(batch), static_cast<std::size_t>(count), static_cast<std::size_t>(out.cols()));
    for (int j = 0; j < count; ++j) {
        for (Eigen::Index b = 0; b < batch; ++b) {
            for (Eigen::Index v = 0; v < out.cols(); ++v) {
                t(static_cast<std::size_t>(b), static_cast<std::size_t>(j), static_cast<std::size_t>(v)) =
                    static_cast<double>(out((first + j) * batch + b, v));
            }
        }
    }
    return t;
}

template <typename S>
Tensor3 mmmf_chunk(TrainedForecaster<S>& f, const TimeSeriesDataset& ds, std::span<const std::size_t> origins, int horizon,
                   int fills, MaskSampler& sampler) {
    const int h = f.config.horizon(), T = f.config.history;
    std::vector<std::size_t> window_origins;
    for (std::size_t o : origins) {
        const auto shift = static_cast<std::size_t>(h - horizon);
        if (o < shift + static_cast<std::size_t>(T)) throw DataError("forecast origin " + std::to_string(o) + " lacks history");
        window_origins.push_back(o - shift);
    }
    Tensor3 acc;
    for (int r = 0; r < fills; ++r) {
        const auto batch = mmmf_batch<S>(ds, window_origins, T, h, horizon, sampler);
        const auto out = f.model->predict(batch.inputs, batch.batch);
        Tensor3 part = read_steps(out, batch.batch, T + h - horizon, horizon);
        if (r == 0) {
            acc = std::move(part);
        } else {
            for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += part.data()[i];
        }
    }
    if (fills > 1) {
        for (auto& v : acc.data()) v /= static_cast<double>(fills);
    }
    return acc;
}

template <typename S>
Tensor3 rsf_chunk(TrainedForecaster<S>& f, const Matrix<double>& values, std::span<const std::size_t> origins, int horizon,
                  const RolloutObserver& observer) {
    const int T = f.config.history;
    const auto fc = f.forecast_columns();
    const auto B = static_cast<Eigen::Index>(origins.size());
    const auto V = values.cols();
    std::vector<Matrix<double>> buf;
    for (std::size_t o : origins) {
        if (o < static_cast<std::size_t>(T)) throw DataError("forecast origin " + std::to_string(o) + " lacks history");
        const auto rows = static_cast<Eigen::Index>(std::min<std::size_t>(o + static_cast<std::size_t>(horizon), static_cast<std::size_t>(values.rows())) - (o - static_cast<std::size_t>(T)));
        if (rows < T + horizon - 1) throw DataError("forecast origin " + std::to_string(o) + " lacks future predictors");
        Matrix<double> w = Matrix<double>::Zero(T + horizon, V);
        w.topRows(rows) = values.middleRows(static_cast<Eigen::Index>(o) - T, rows);
        for (Eigen::Index r = T; r < w.rows(); ++r) {
            for (std::size_t c : fc) w(r, static_cast<Eigen::Index>(c)) = std::numeric_limits<double>::quiet_NaN();
        }
        buf.push_back(std::move(w));
    }
    Tensor3 out(origins.size(), static_cast<std::size_t>(horizon), fc.size());
    Matrix<S> inputs(T * B, V);
    for (int j = 0; j < horizon; ++j) {
        for (Eigen::Index b = 0; b < B; ++b) {
            for (int t = 0; t < T; ++t) inputs.row(t * B + b) = buf[static_cast<std::size_t>(b)].row(j + t).template cast<S>();
        }
        if (observer) {
            std::vector<bool> predicted(static_cast<std::size_t>(T));
            for (int t = 0; t < T; ++t) predicted[static_cast<std::size_t>(t)] = j + t >= T;
            observer(j, from_time_major(inputs, static_cast<std::size_t>(B)), predicted);
        }
        const auto pred = f.model->predict(inputs, B);
        for (Eigen::Index b = 0; b < B; ++b) {
            for (std::size_t v = 0; v < fc.size(); ++v) {
                const double y = static_cast<double>(pred((T - 1) * B + b, static_cast<Eigen::Index>(v)));
                out(static_cast<std::size_t>(b), static_cast<std::size_t>(j), v) = y;
                buf[static_cast<std::size_t>(b)](T + j, static_cast<Eigen::Index>(fc[v])) = y;
            }
        }
    }
    return out;
}

template <typename S>
Tensor3 dmf_chunk(TrainedForecaster<S>& f, const Matrix<double>& values, std::span<const std::size_t> origins, int horizon) {
    const int L = f.config.dmf_input_length(), h = f.config.horizon();
    const auto B = static_cast<Eigen::Index>(origins.size());
    Matrix<S> inputs(L * B, values.cols());
    for (std::size_t b = 0; b < origins.size(); ++b) {
        if (origins[b] < static_cast<std::size_t>(L)) throw DataError("forecast origin " + std::to_string(origins[b]) + " lacks history");
        copy_rows(values, origins[b] - static_cast<std::size_t>(L), L, b, B, inputs);
    }
    return read_steps(f.model->predict(inputs, B), B, L - h, horizon);
}

template <typename S>
Tensor3 sbf_chunk(TrainedForecaster<S>& f, const Matrix<double>& values, std::span<const std::size_t> origins, int horizon) {
    const auto pred_cols = f.predictor_columns();
    const auto B = static_cast<Eigen::Index>(origins.size()) * horizon;
    Matrix<S> inputs(B, static_cast<Eigen::Index>(pred_cols.size()));
    for (std::size_t b = 0; b < origins.size(); ++b) {
        if (origins[b] + static_cast<std::size_t>(horizon) > static_cast<std::size_t>(values.rows())) {
            throw DataError("forecast origin " + std::to_string(origins[b]) + " lacks future predictors");
        }
        for (int j = 0; j < horizon; ++j) {
            const auto src = static_cast<Eigen::Index>(origins[b]) + j;
            for (std::size_t c = 0; c < pred_cols.size(); ++c) {
                inputs(static_cast<Eigen::Index>(b) * horizon + j, static_cast<Eigen::Index>(c)) =
                    static_cast<S>(values(src, static_cast<Eigen::Index>(pred_cols[c])));
            }
        }
    }
    const auto out = f.model->predict(inputs, B);
    Tensor3 t(origins.size(), static_cast<std::size_t>(horizon), static_cast<std::size_t>(out.cols()));
    for (std::size_t b = 0; b < origins.size(); ++b) {
        for (int j = 0; j < horizon; ++j) {
            for (Eigen::Index v = 0; v < out.cols(); ++v) {
                t(b, static_cast<std::size_t>(j), static_cast<std::size_t>(v)) =
                    static_cast<double>(out(static_cast<Eigen::Index>(b) * horizon + j, v));
            }
        }
    }
    return t;
}

}  // namespace detail

/**
 * @brief Normalized forecasts for rows [o, o + horizon) of a normalized dataset, for each origin o.
 *
 * Returns (origins, horizon, forecast variables). For MMMF the rows before o
 * inside the trained forecast block keep their true forecast values.
 */
template <typename S>
Tensor3 forecast_normalized(TrainedForecaster<S>& f, const TimeSeriesDataset& ds, std::span<const std::size_t> origins,
                            int horizon, const InferenceOptions& opt = {}, const RolloutObserver& observer = {}) {
    detail::check_horizon(f, horizon);
    if (ds.num_variables() != f.specs.size()) throw ContractError("dataset does not match the forecaster's variables");
    if (opt.mask_fills < 1) throw ContractError("mask_fills must be at least 1");
    if (origins.empty()) return Tensor3(0, static_cast<std::size_t>(horizon), f.forecast_columns().size());
    std::optional<MaskSampler> sampler;
    if (f.formulation == Formulation::mmmf) sampler.emplace(detail::inference_sampler(f, opt));
    std::vector<Tensor3> parts;
    const std::size_t chunk = std::max<std::size_t>(1, opt.chunk);
    for (std::size_t first = 0; first < origins.size(); first += chunk) {
        const auto ids = origins.subspan(first, std::min(chunk, origins.size() - first));
        switch (f.formulation) {
            case Formulation::mmmf: parts.push_back(detail::mmmf_chunk(f, ds, ids, horizon, opt.mask_fills, *sampler)); break;
            case Formulation::rsf: parts.push_back(detail::rsf_chunk(f, ds.values(), ids, horizon, observer)); break;
            case Formulation::dmf: parts.push_back(detail::dmf_chunk(f, ds.values(), ids, horizon)); break;
            case Formulation::sbf: parts.push_back(detail::sbf_chunk(f, ds.values(), ids, horizon)); break;
        }
    }
    return detail::concat_batches(parts);
}

/// Maps normalized forecasts (last axis = forecast variables) back to the raw scale.
template <typename S>
Tensor3 denormalize_forecast(const TrainedForecaster<S>& f, Tensor3 t) {
    const auto fc = f.forecast_columns();
    for (std::size_t b = 0; b < t.batch(); ++b) {
        for (std::size_t j = 0; j < t.steps(); ++j) {
            for (std::size_t v = 0; v < fc.size(); ++v) t(b, j, v) = f.normalizer.denormalize(fc[v], t(b, j, v));
        }
    }
    return t;
}

/// True forecast values (raw scale) of rows [o, o + horizon) for each origin.
inline Tensor3 forecast_truth(const TimeSeriesDataset& raw, std::span<const std::size_t> origins, int horizon) {
    const auto fc = raw.forecast_indices();
    Tensor3 t(origins.size(), static_cast<std::size_t>(horizon), fc.size());
    for (std::size_t b = 0; b < origins.size(); ++b) {
        if (origins[b] + static_cast<std::size_t>(horizon) > raw.num_steps()) throw ContractError("forecast_truth: origin out of range");
        for (int j = 0; j < horizon; ++j) {
            for (std::size_t v = 0; v < fc.size(); ++v) t(b, static_cast<std::size_t>(j), v) = raw.value(origins[b] + static_cast<std::size_t>(j), fc[v]);
        }
    }
    return t;
}

namespace detail {

/// Normalized request rows laid out as a small dataset, and the origin of its forecast.
template <typename S>
std::pair<TimeSeriesDataset, std::size_t> request_frame(const TrainedForecaster<S>& f, const ForecastRequest& req) {
    check_horizon(f, req.horizon);
    const auto V = static_cast<Eigen::Index>(f.specs.size());
    const auto pred = f.predictor_columns();
    const auto fc = f.forecast_columns();
    const int need_hist = lead_steps(f.config);
    if (req.history.cols() != V) {
        throw ContractError("request history has " + std::to_string(req.history.cols()) + " columns, expected " + std::to_string(V));
    }
    if (req.history.rows() < need_hist) {
        throw ContractError("request history has " + std::to_string(req.history.rows()) + " rows, needs " + std::to_string(need_hist));
    }
    int future_rows = 0;
    switch (f.formulation) {
        case Formulation::mmmf: future_rows = f.config.horizon(); break;
        case Formulation::rsf: future_rows = req.horizon - 1; break;
        case Formulation::dmf: future_rows = 0; break;
        case Formulation::sbf: future_rows = req.horizon; break;
    }
    if (future_rows > 0 && (req.future_predictors.rows() < future_rows ||
                            req.future_predictors.cols() != static_cast<Eigen::Index>(pred.size()))) {
        throw ContractError("missing future predictors: need " + std::to_string(future_rows) + " rows of " +
                            std::to_string(pred.size()) + " predictor columns");
    }
    const int known_targets = f.formulation == Formulation::mmmf ? f.config.horizon() - req.horizon : 0;
    if (known_targets > 0 && (req.future_targets.rows() < known_targets ||
                              req.future_targets.cols() != static_cast<Eigen::Index>(fc.size()))) {
        throw ContractError("missing future forecast values: MMMF needs the " + std::to_string(known_targets) +
                            " unmasked future rows of every forecast variable");
    }
    const Eigen::Index hist = need_hist;
    Matrix<double> v = Matrix<double>::Zero(hist + future_rows, V);
    v.topRows(hist) = req.history.bottomRows(hist);
    for (int r = 0; r < future_rows; ++r) {
        for (std::size_t c = 0; c < pred.size(); ++c) v(hist + r, static_cast<Eigen::Index>(pred[c])) = req.future_predictors(r, static_cast<Eigen::Index>(c));
        if (r < known_targets) {
            for (std::size_t c = 0; c < fc.size(); ++c) v(hist + r, static_cast<Eigen::Index>(fc[c])) = req.future_targets(r, static_cast<Eigen::Index>(c));
        }
    }
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        for (Eigen::Index c = 0; c < V; ++c) v(r, c) = f.normalizer.normalize(static_cast<std::size_t>(c), v(r, c));
    }
    const std::size_t origin = static_cast<std::size_t>(hist) + static_cast<std::size_t>(known_targets);
    return {TimeSeriesDataset(f.specs, std::move(v), {}), origin};
}

template <typename S>
Matrix<double> forecast_request(TrainedForecaster<S>& f, const ForecastRequest& req, const InferenceOptions& opt,
                                const RolloutObserver& observer = {}) {
    auto [frame, origin] = request_frame(f, req);
    const std::size_t o[] = {origin};
    const Tensor3 t = denormalize_forecast(f, forecast_normalized(f, frame, o, req.horizon, opt, observer));
    Matrix<double> out(req.horizon, static_cast<Eigen::Index>(t.channels()));
    for (int j = 0; j < req.horizon; ++j) {
        for (std::size_t v = 0; v < t.channels(); ++v) out(j, static_cast<Eigen::Index>(v)) = t(0, static_cast<std::size_t>(j), v);
    }
    return out;
}

}  // namespace detail

/// Masked variable-horizon forecast: (horizon, forecast variables), raw scale.
template <typename S>
Matrix<double> forecast_mmmf(TrainedForecaster<S>& f, const ForecastRequest& req, const InferenceOptions& opt = {}) {
    detail::check_formulation(f, Formulation::mmmf);
    return detail::forecast_request(f, req, opt);
}

/// Recursive rollout of the next-step model, feeding predictions back as history.
template <typename S>
Matrix<double> forecast_rsf(TrainedForecaster<S>& f, const ForecastRequest& req, const RolloutObserver& observer = {}) {
    detail::check_formulation(f, Formulation::rsf);
    return detail::forecast_request(f, req, {}, observer);
}

/// One pass on the past window; the first `horizon` of the k + 1 direct outputs.
template <typename S>
Matrix<double> forecast_dmf(TrainedForecaster<S>& f, const ForecastRequest& req) {
    detail::check_formulation(f, Formulation::dmf);
    return detail::forecast_request(f, req, {});
}

/// Per-step regression on each future predictor row.
template <typename S>
Matrix<double> forecast_sbf(TrainedForecaster<S>& f, const ForecastRequest& req) {
    detail::check_formulation(f, Formulation::sbf);
    return detail::forecast_request(f, req, {});
}

/// Dispatches on the forecaster's formulation.
template <typename S>
Matrix<double> forecast(TrainedForecaster<S>& f, const ForecastRequest& req, const InferenceOptions& opt = {}) {
    return detail::forecast_request(f, req, opt);
}

}  // namespace mmmf
