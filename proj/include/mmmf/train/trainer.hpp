#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mmmf/data/pipeline.hpp"
#include "mmmf/optimizer.hpp"
#include "mmmf/train/forecaster.hpp"
#include "mmmf/train/samples.hpp"

namespace mmmf {

struct TrainHooks {
    std::function<void(const EpochRecord&)> on_epoch;
};

/// Mask lengths used in turn over validation batches: 1, ceil((k+1)/2), k+1, each capped at the training maximum.
inline std::vector<int> validation_mask_lengths(const TrainConfig& cfg) {
    const int h = cfg.horizon();
    std::vector<int> out;
    for (int l : {1, (h + 1) / 2, h}) {
        l = std::min(l, cfg.mask_cap());
        if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    }
    return out;
}

namespace detail {

inline void require_matching_inputs(const std::vector<VariableSpec>& model_inputs, const std::vector<VariableSpec>& expected) {
    bool ok = model_inputs.size() == expected.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i) {
        ok = model_inputs[i].name == expected[i].name && model_inputs[i].kind == expected[i].kind &&
             model_inputs[i].cardinality == expected[i].cardinality;
    }
    if (!ok) throw ConfigError("model input variables do not match the dataset for this formulation");
}

template <typename S>
double batch_loss(const Matrix<S>& pred, const SampleBatch<S>& b) {
    const double denom = static_cast<double>(b.weights.sum());
    const auto diff = (pred - b.targets).template cast<double>();
    return diff.cwiseProduct(diff).cwiseProduct(b.weights.template cast<double>()).sum() / denom;
}

template <typename S>
class Trainer {
public:
    Trainer(std::unique_ptr<nn::SequenceModel<S>> model, const PreparedData& data, TrainConfig cfg, TrainHooks hooks)
        : data_(data), cfg_(std::move(cfg)), hooks_(std::move(hooks)) {
        cfg_.validate();
        if (!model) throw ContractError("train: null model");
        result_.model = std::move(model);
        result_.formulation = cfg_.formulation;
        result_.config = cfg_;
        result_.normalizer = data.normalizer;
        result_.specs = data.data.specs();
        require_matching_inputs(result_.model->input_specs(), model_input_specs(result_.specs, cfg_.formulation));
        if (result_.model->output_width() != count_forecast(result_.specs)) {
            throw ConfigError("model output width does not match the number of forecast variables");
        }
        if (cfg_.formulation == Formulation::mmmf) {
            MaskSampler probe(0, result_.specs);  // rejects categorical forecast variables up front
        }
        train_origins_ = contained_origins(data.train(), lead_steps(cfg_), tail_steps(cfg_));
        if (train_origins_.empty()) {
            throw DataError("insufficient data: training rows " + std::to_string(data.train().size()) +
                            " cannot hold one sample of " + std::to_string(lead_steps(cfg_) + tail_steps(cfg_)) +
                            " steps");
        }
        val_origins_ = forecast_origins(data.validation(), lead_steps(cfg_), tail_steps(cfg_));
    }

    TrainedForecaster<S> run() {
        auto& model = *result_.model;
        Adam<S> opt(model.parameters(), cfg_.adam);
        Rng shuffle_rng = make_rng(cfg_.seed, Stream::shuffle);
        Rng dropout_rng = make_rng(cfg_.seed, Stream::dropout);
        MaskSampler mask_sampler(derive_seed(cfg_.seed, static_cast<std::uint64_t>(Stream::mask)), result_.specs);

        double best_val = std::numeric_limits<double>::infinity();
        std::vector<Matrix<S>> best;
        const auto start = std::chrono::steady_clock::now();
        std::vector<std::size_t> order = train_origins_;
        const auto bs = static_cast<std::size_t>(cfg_.batch_size);

        for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            double loss_sum = 0.0;
            std::size_t seen = 0;
            for (std::size_t first = 0; first < order.size(); first += bs) {
                const std::span<const std::size_t> ids(order.data() + first, std::min(bs, order.size() - first));
                const auto batch = make_batch(ids, mask_sampler, nullptr);
                model.zero_grad();
                ad::Tape<S> tape;
                const ad::Var pred = model.forward(tape, batch.inputs, batch.batch, nn::ForwardMode::train(dropout_rng));
                const ad::Var loss = tape.weighted_mse(pred, batch.targets, batch.weights);
                const double l = static_cast<double>(tape.value(loss)(0, 0));
                if (!std::isfinite(l)) {
                    throw DivergenceError("training diverged: non-finite loss at epoch " + std::to_string(epoch), epoch);
                }
                tape.backward(loss);
                if (cfg_.clip_norm > 0.0) opt.clip_grad_norm(cfg_.clip_norm);
                try {
                    opt.step();
                } catch (const DivergenceError& e) {
                    throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch), epoch);
                }
                loss_sum += l * static_cast<double>(ids.size());
                seen += ids.size();
            }
            EpochRecord rec{epoch, loss_sum / static_cast<double>(seen), validation_loss(),
                            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
            result_.history.push_back(rec);
            if (cfg_.keep_best_validation && std::isfinite(rec.val_loss) && rec.val_loss < best_val) {
                best_val = rec.val_loss;
                best.clear();
                for (const auto* p : model.parameters()) best.push_back(p->value);
            }
            if (hooks_.on_epoch) hooks_.on_epoch(rec);
        }
        if (cfg_.keep_best_validation && !best.empty()) {
            auto params = model.parameters();
            for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
        }
        return std::move(result_);
    }

private:
    SampleBatch<S> make_batch(std::span<const std::size_t> ids, MaskSampler& sampler, const int* mask_length) {
        const auto& ds = data_.data;
        switch (cfg_.formulation) {
            case Formulation::mmmf: {
                const int lm = mask_length ? *mask_length : sampler.sample_mask_length(cfg_.mask_cap());
                return mmmf_batch<S>(ds, ids, cfg_.history, cfg_.horizon(), lm, sampler);
            }
            case Formulation::rsf: return rsf_batch<S>(ds, ids, cfg_.history);
            case Formulation::dmf: return dmf_batch<S>(ds, ids, cfg_.dmf_input_length(), cfg_.horizon());
            case Formulation::sbf: return sbf_batch<S>(ds, ids);
        }
        throw ContractError("unknown formulation");
    }

    double validation_loss() {
        if (val_origins_.empty()) return std::numeric_limits<double>::quiet_NaN();
        MaskSampler sampler(derive_seed(cfg_.seed, static_cast<std::uint64_t>(Stream::validation_mask)), result_.specs);
        const auto lengths = validation_mask_lengths(cfg_);
        const auto bs = static_cast<std::size_t>(cfg_.batch_size);
        double sum = 0.0;
        std::size_t n = 0, index = 0;
        for (std::size_t first = 0; first < val_origins_.size(); first += bs, ++index) {
            const std::span<const std::size_t> ids(val_origins_.data() + first, std::min(bs, val_origins_.size() - first));
            const int lm = lengths[index % lengths.size()];
            const auto batch = make_batch(ids, sampler, &lm);
            sum += batch_loss(result_.model->predict(batch.inputs, batch.batch), batch) * static_cast<double>(ids.size());
            n += ids.size();
        }
        return sum / static_cast<double>(n);
    }

    const PreparedData& data_;
    TrainConfig cfg_;
    TrainHooks hooks_;
    TrainedForecaster<S> result_;
    std::vector<std::size_t> train_origins_;
    std::vector<std::size_t> val_origins_;
};

}  // namespace detail

/// Trains with the formulation named in `cfg`.
template <typename S>
TrainedForecaster<S> train(std::unique_ptr<nn::SequenceModel<S>> model, const PreparedData& data, const TrainConfig& cfg,
                           const TrainHooks& hooks = {}) {
    return detail::Trainer<S>(std::move(model), data, cfg, hooks).run();
}

namespace detail {

inline TrainConfig with_formulation(TrainConfig cfg, Formulation f) {
    cfg.formulation = f;
    return cfg;
}

}  // namespace detail

/**
 * @brief Masked training: every mini-batch draws one mask length from
 * {1, ..., max_mask_length}, replaces the forecast variables of that many
 * trailing steps with random in-range values and is scored on those cells only.
 */
template <typename S>
TrainedForecaster<S> train_mmmf(std::unique_ptr<nn::SequenceModel<S>> model, const PreparedData& data,
                                const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    return train(std::move(model), data, detail::with_formulation(cfg, Formulation::mmmf), hooks);
}

/// Next-step prediction from the previous `history` rows of every variable.
template <typename S>
TrainedForecaster<S> train_rsf(std::unique_ptr<nn::SequenceModel<S>> model, const PreparedData& data,
                               const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    return train(std::move(model), data, detail::with_formulation(cfg, Formulation::rsf), hooks);
}

/// Past window in, all k + 1 future steps out; no future predictors are seen.
template <typename S>
TrainedForecaster<S> train_dmf(std::unique_ptr<nn::SequenceModel<S>> model, const PreparedData& data,
                               const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    return train(std::move(model), data, detail::with_formulation(cfg, Formulation::dmf), hooks);
}

/// Independent per-row regression from predictors to forecast variables.
template <typename S>
TrainedForecaster<S> train_sbf(std::unique_ptr<nn::SequenceModel<S>> model, const PreparedData& data,
                               const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    model_input_specs(data.data.specs(), Formulation::sbf);
    return train(std::move(model), data, detail::with_formulation(cfg, Formulation::sbf), hooks);
}

inline void write_metrics_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
    out << "epoch,train_loss,val_loss,wall_seconds\n";
    for (const auto& r : history) {
        out << r.epoch << ',' << csv::format_double(r.train_loss) << ',' << csv::format_double(r.val_loss) << ','
            << csv::format_double(r.wall_seconds) << '\n';
    }
}

}  // namespace mmmf
