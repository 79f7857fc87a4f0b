#pragma once

#include <string>
#include <string_view>

#include "mmmf/error.hpp"

namespace mmmf::nn {

enum class Architecture { recurrent, temporal_conv, attention_encoder, feed_forward };

inline std::string_view to_string(Architecture a) {
    switch (a) {
        case Architecture::recurrent: return "recurrent";
        case Architecture::temporal_conv: return "temporal-conv";
        case Architecture::attention_encoder: return "attention-encoder";
        case Architecture::feed_forward: return "feed-forward";
    }
    return "?";
}

inline Architecture parse_architecture(std::string_view s) {
    if (s == "recurrent" || s == "lstm") return Architecture::recurrent;
    if (s == "temporal-conv" || s == "tcn") return Architecture::temporal_conv;
    if (s == "attention-encoder" || s == "transformer") return Architecture::attention_encoder;
    if (s == "feed-forward" || s == "nn") return Architecture::feed_forward;
    throw ConfigError("unknown architecture '" + std::string(s) + "'");
}

/// Stacked LSTM.
struct RecurrentParams {
    int layers = 2;
    int hidden = 50;
};

/// Causal dilated convolution stack; layer i uses dilation 2^i.
struct TemporalConvParams {
    int layers = 2;
    int channels = 50;
    int kernel_size = 3;
    int stride = 1;
    double dropout = 0.2;
};

/// Encoder-only transformer.
struct AttentionParams {
    int model_dim = 128;
    int ff_dim = 512;
    int heads = 8;
    int layers = 2;
    double dropout = 0.1;
};

struct FeedForwardParams {
    int hidden = 50;
};

/// Architecture choice plus every architecture's record. Defaults are the reference configuration.
struct HyperParams {
    Architecture architecture = Architecture::recurrent;
    RecurrentParams recurrent;
    TemporalConvParams temporal_conv;
    AttentionParams attention;
    FeedForwardParams feed_forward;
    int embedding_dim = 5;

    /// Throws ConfigError for the record of the selected architecture.
    void validate() const {
        if (embedding_dim < 1) throw ConfigError("embedding dimension must be positive");
        switch (architecture) {
            case Architecture::recurrent:
                if (recurrent.layers < 1 || recurrent.hidden < 1) {
                    throw ConfigError("recurrent model needs positive layers and hidden width");
                }
                break;
            case Architecture::temporal_conv:
                if (temporal_conv.layers < 1 || temporal_conv.channels < 1 || temporal_conv.kernel_size < 1) {
                    throw ConfigError("temporal-conv model needs positive layers, channels and kernel size");
                }
                if (temporal_conv.stride != 1) {
                    throw ConfigError("temporal-conv stride must be 1 to keep output length equal to input length");
                }
                if (temporal_conv.dropout < 0.0 || temporal_conv.dropout >= 1.0) {
                    throw ConfigError("temporal-conv dropout must lie in [0, 1)");
                }
                break;
            case Architecture::attention_encoder:
                if (attention.layers < 1) throw ConfigError("attention encoder needs at least one layer");
                if (attention.model_dim < 1 || attention.ff_dim < 1 || attention.heads < 1) {
                    throw ConfigError("attention encoder needs positive model dim, feed-forward dim and heads");
                }
                if (attention.model_dim % attention.heads != 0) {
                    throw ConfigError("attention model dimension " + std::to_string(attention.model_dim) +
                                      " is not divisible by " + std::to_string(attention.heads) + " heads");
                }
                if (attention.dropout < 0.0 || attention.dropout >= 1.0) {
                    throw ConfigError("attention dropout must lie in [0, 1)");
                }
                break;
            case Architecture::feed_forward:
                if (feed_forward.hidden < 1) throw ConfigError("feed-forward hidden width must be positive");
                break;
        }
    }
};

}  // namespace mmmf::nn
