#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>

#include "mmmf/error.hpp"
#include "mmmf/optimizer.hpp"

namespace mmmf {

/// How a sequence model is trained and queried for multi-step forecasts.
enum class Formulation {
    mmmf,  ///< masked multi-step: past and known future in, masked tail out
    sbf,   ///< per-step regression from predictors only
    rsf,   ///< next-step prediction, rolled out recursively
    dmf,   ///< past window mapped directly to all future steps
};

inline std::string_view to_string(Formulation f) {
    switch (f) {
        case Formulation::mmmf: return "mmmf";
        case Formulation::sbf: return "sbf";
        case Formulation::rsf: return "rsf";
        case Formulation::dmf: return "dmf";
    }
    return "?";
}

inline Formulation parse_formulation(std::string_view s) {
    std::string l(s);
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (l == "mmmf") return Formulation::mmmf;
    if (l == "sbf") return Formulation::sbf;
    if (l == "rsf") return Formulation::rsf;
    if (l == "dmf") return Formulation::dmf;
    throw ConfigError("unknown formulation '" + std::string(s) + "'");
}

/**
 * @brief Training settings. `history` is the number of past steps T and
 * `k + 1` the number of forecast steps.
 */
struct TrainConfig {
    Formulation formulation = Formulation::mmmf;
    int history = 30;
    int k = 59;
    int max_mask_length = 0;   ///< MMMF only; 0 means k + 1
    int dmf_history = 0;       ///< DMF input length; 0 means max(history, k + 1)
    int batch_size = 1000;
    int epochs = 1000;
    AdamConfig adam;
    std::uint64_t seed = 0;
    double clip_norm = 0.0;            ///< 0 disables gradient clipping
    bool keep_best_validation = false; ///< restore the parameters with the lowest validation loss

    int horizon() const noexcept { return k + 1; }
    int mask_cap() const noexcept { return max_mask_length > 0 ? max_mask_length : k + 1; }
    int dmf_input_length() const noexcept { return dmf_history > 0 ? dmf_history : std::max(history, k + 1); }

    /// Steps of data consumed by one training sample.
    int window_length() const noexcept {
        switch (formulation) {
            case Formulation::mmmf: return history + horizon();
            case Formulation::rsf: return history + 1;
            case Formulation::dmf: return dmf_input_length() + horizon();
            case Formulation::sbf: return 1;
        }
        return 0;
    }

    void validate() const {
        if (history < 1) throw ConfigError("history length must be at least 1");
        if (k < 0) throw ConfigError("k must be non-negative");
        if (max_mask_length < 0 || mask_cap() > k + 1) {
            throw ConfigError("max mask length " + std::to_string(max_mask_length) + " outside [1, " +
                              std::to_string(k + 1) + "]");
        }
        if (dmf_history < 0 || dmf_input_length() < k + 1) {
            throw ConfigError("DMF input length must cover the " + std::to_string(k + 1) + " forecast steps");
        }
        if (batch_size < 1) throw ConfigError("batch size must be positive");
        if (epochs < 0) throw ConfigError("epochs must be non-negative");
        if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
        if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
            throw ConfigError("moment coefficients must lie in [0, 1)");
        }
        if (!(adam.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
        if (clip_norm < 0.0) throw ConfigError("clip norm must be non-negative");
    }
};

}  // namespace mmmf
