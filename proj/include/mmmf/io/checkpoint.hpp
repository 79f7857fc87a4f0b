#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "mmmf/io/json.hpp"
#include "mmmf/train/forecaster.hpp"

namespace mmmf {

inline constexpr const char* kCheckpointFormat = "mmmf-checkpoint/1";

namespace nn {

inline void to_json(json& j, const HyperParams& hp) {
    j = json{{"architecture", std::string(to_string(hp.architecture))},
             {"embedding_dim", hp.embedding_dim},
             {"recurrent", {{"layers", hp.recurrent.layers}, {"hidden", hp.recurrent.hidden}}},
             {"temporal_conv",
              {{"layers", hp.temporal_conv.layers},
               {"channels", hp.temporal_conv.channels},
               {"kernel_size", hp.temporal_conv.kernel_size},
               {"stride", hp.temporal_conv.stride},
               {"dropout", hp.temporal_conv.dropout}}},
             {"attention",
              {{"model_dim", hp.attention.model_dim},
               {"ff_dim", hp.attention.ff_dim},
               {"heads", hp.attention.heads},
               {"layers", hp.attention.layers},
               {"dropout", hp.attention.dropout}}},
             {"feed_forward", {{"hidden", hp.feed_forward.hidden}}}};
}

/// Missing keys keep their defaults, so partial records are accepted.
inline void from_json(const json& j, HyperParams& hp) {
    if (j.contains("architecture")) hp.architecture = parse_architecture(j.at("architecture").get<std::string>());
    hp.embedding_dim = j.value("embedding_dim", hp.embedding_dim);
    if (j.contains("recurrent")) {
        const auto& r = j.at("recurrent");
        hp.recurrent.layers = r.value("layers", hp.recurrent.layers);
        hp.recurrent.hidden = r.value("hidden", hp.recurrent.hidden);
    }
    if (j.contains("temporal_conv")) {
        const auto& r = j.at("temporal_conv");
        hp.temporal_conv.layers = r.value("layers", hp.temporal_conv.layers);
        hp.temporal_conv.channels = r.value("channels", hp.temporal_conv.channels);
        hp.temporal_conv.kernel_size = r.value("kernel_size", hp.temporal_conv.kernel_size);
        hp.temporal_conv.stride = r.value("stride", hp.temporal_conv.stride);
        hp.temporal_conv.dropout = r.value("dropout", hp.temporal_conv.dropout);
    }
    if (j.contains("attention")) {
        const auto& r = j.at("attention");
        hp.attention.model_dim = r.value("model_dim", hp.attention.model_dim);
        hp.attention.ff_dim = r.value("ff_dim", hp.attention.ff_dim);
        hp.attention.heads = r.value("heads", hp.attention.heads);
        hp.attention.layers = r.value("layers", hp.attention.layers);
        hp.attention.dropout = r.value("dropout", hp.attention.dropout);
    }
    if (j.contains("feed_forward")) hp.feed_forward.hidden = j.at("feed_forward").value("hidden", hp.feed_forward.hidden);
}

}  // namespace nn

inline void to_json(json& j, const TrainConfig& c) {
    j = json{{"formulation", std::string(to_string(c.formulation))},
             {"history", c.history},
             {"k", c.k},
             {"max_mask_length", c.max_mask_length},
             {"dmf_history", c.dmf_history},
             {"batch_size", c.batch_size},
             {"epochs", c.epochs},
             {"learning_rate", c.adam.learning_rate},
             {"beta1", c.adam.beta1},
             {"beta2", c.adam.beta2},
             {"epsilon", c.adam.epsilon},
             {"seed", c.seed},
             {"clip_norm", c.clip_norm},
             {"keep_best_validation", c.keep_best_validation}};
}

/// Missing keys keep their defaults.
inline void from_json(const json& j, TrainConfig& c) {
    if (j.contains("formulation")) c.formulation = parse_formulation(j.at("formulation").get<std::string>());
    c.history = j.value("history", c.history);
    c.k = j.value("k", c.k);
    c.max_mask_length = j.value("max_mask_length", c.max_mask_length);
    c.dmf_history = j.value("dmf_history", c.dmf_history);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.seed = j.value("seed", c.seed);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.keep_best_validation = j.value("keep_best_validation", c.keep_best_validation);
}

inline json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double null_to_nan(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

inline void to_json(json& j, const EpochRecord& r) {
    j = json{{"epoch", r.epoch}, {"train_loss", nan_to_null(r.train_loss)}, {"val_loss", nan_to_null(r.val_loss)},
             {"wall_seconds", r.wall_seconds}};
}
inline void from_json(const json& j, EpochRecord& r) {
    r.epoch = j.at("epoch").get<int>();
    r.train_loss = null_to_nan(j.at("train_loss"));
    r.val_loss = null_to_nan(j.at("val_loss"));
    r.wall_seconds = j.at("wall_seconds").get<double>();
}

template <typename S>
constexpr const char* scalar_name() {
    return std::is_same_v<S, float> ? "float32" : "float64";
}

/// Self-describing checkpoint: architecture, hyperparameters, parameters, normalizer, specs and history.
template <typename S>
json checkpoint_json(const TrainedForecaster<S>& f) {
    if (!f.model) throw ContractError("checkpoint: forecaster has no model");
    json params = json::object();
    for (const auto* p : f.model->parameters()) params[p->name] = matrix_to_json(p->value);
    return json{{"format", kCheckpointFormat},
                {"scalar", scalar_name<S>()},
                {"formulation", std::string(to_string(f.formulation))},
                {"hyper_params", f.model->hyper_params()},
                {"config", f.config},
                {"normalizer", f.normalizer},
                {"specs", f.specs},
                {"history", f.history},
                {"parameters", std::move(params)}};
}

template <typename S>
TrainedForecaster<S> forecaster_from_json(const json& j) {
    if (j.value("format", std::string()) != kCheckpointFormat) {
        throw DataError("checkpoint format tag is not '" + std::string(kCheckpointFormat) + "'");
    }
    TrainedForecaster<S> f;
    f.formulation = parse_formulation(j.at("formulation").get<std::string>());
    f.config = j.at("config").get<TrainConfig>();
    f.normalizer = j.at("normalizer").get<Normalizer>();
    f.specs = j.at("specs").get<std::vector<VariableSpec>>();
    f.history = j.at("history").get<std::vector<EpochRecord>>();
    const auto hp = j.at("hyper_params").get<nn::HyperParams>();
    f.model = make_model<S>(hp, f.specs, f.formulation, f.config.seed);
    const auto& params = j.at("parameters");
    auto mine = f.model->parameters();
    if (params.size() != mine.size()) throw DataError("checkpoint parameter count does not match the architecture");
    for (auto* p : mine) {
        if (!params.contains(p->name)) throw DataError("checkpoint lacks parameter '" + p->name + "'");
        auto m = matrix_from_json<S>(params.at(p->name));
        if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
            throw DataError("checkpoint parameter '" + p->name + "' has the wrong shape");
        }
        p->value = std::move(m);
    }
    return f;
}

template <typename S>
void save_checkpoint(const std::string& path, const TrainedForecaster<S>& f) {
    write_json_file(path, checkpoint_json(f));
}

template <typename S>
TrainedForecaster<S> load_checkpoint(const std::string& path) {
    json j;
    try {
        j = read_json_file(path);
    } catch (const ConfigError& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
    try {
        return forecaster_from_json<S>(j);
    } catch (const json::exception& e) {
        throw DataError(path + ": malformed checkpoint: " + e.what());
    }
}

}  // namespace mmmf
