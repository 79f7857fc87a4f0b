#pragma once

#include <memory>
#include <vector>

#include "mmmf/nn/attention_encoder.hpp"
#include "mmmf/nn/feed_forward.hpp"
#include "mmmf/nn/recurrent.hpp"
#include "mmmf/nn/temporal_conv.hpp"

namespace mmmf::nn {

template <typename S>
std::unique_ptr<SequenceModel<S>> build_recurrent(const HyperParams& hp, std::vector<VariableSpec> inputs, int outputs, Rng& rng) {
    return std::make_unique<RecurrentModel<S>>(hp, std::move(inputs), outputs, rng);
}

template <typename S>
std::unique_ptr<SequenceModel<S>> build_temporal_conv(const HyperParams& hp, std::vector<VariableSpec> inputs, int outputs, Rng& rng) {
    return std::make_unique<TemporalConvModel<S>>(hp, std::move(inputs), outputs, rng);
}

template <typename S>
std::unique_ptr<SequenceModel<S>> build_attention_encoder(const HyperParams& hp, std::vector<VariableSpec> inputs, int outputs, Rng& rng) {
    return std::make_unique<AttentionEncoderModel<S>>(hp, std::move(inputs), outputs, rng);
}

template <typename S>
std::unique_ptr<SequenceModel<S>> build_feedforward(const HyperParams& hp, std::vector<VariableSpec> inputs, int outputs, Rng& rng) {
    return std::make_unique<FeedForwardModel<S>>(hp, std::move(inputs), outputs, rng);
}

/// Builds the architecture named by `hp.architecture`.
template <typename S>
std::unique_ptr<SequenceModel<S>> build_model(const HyperParams& hp, std::vector<VariableSpec> inputs, int outputs, Rng& rng) {
    switch (hp.architecture) {
        case Architecture::recurrent: return build_recurrent<S>(hp, std::move(inputs), outputs, rng);
        case Architecture::temporal_conv: return build_temporal_conv<S>(hp, std::move(inputs), outputs, rng);
        case Architecture::attention_encoder: return build_attention_encoder<S>(hp, std::move(inputs), outputs, rng);
        case Architecture::feed_forward: return build_feedforward<S>(hp, std::move(inputs), outputs, rng);
    }
    throw ConfigError("unknown architecture");
}

}  // namespace mmmf::nn
