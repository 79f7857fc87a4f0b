#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mmmf/data/dataset.hpp"
#include "mmmf/data/normalizer.hpp"
#include "mmmf/nn/factory.hpp"
#include "mmmf/train/config.hpp"

namespace mmmf {

struct EpochRecord {
    int epoch = 0;              ///< 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;      ///< NaN when there are no validation samples
    double wall_seconds = 0.0;  ///< since the start of training
};

/// A trained model together with everything needed to query it.
template <typename S>
struct TrainedForecaster {
    std::unique_ptr<nn::SequenceModel<S>> model;
    Formulation formulation = Formulation::mmmf;
    TrainConfig config;
    Normalizer normalizer;
    std::vector<VariableSpec> specs;  ///< all dataset variables, observed ranges in normalized units
    std::vector<EpochRecord> history;

    std::vector<std::size_t> forecast_columns() const { return columns(Role::forecast); }
    std::vector<std::size_t> predictor_columns() const { return columns(Role::predictor); }

private:
    std::vector<std::size_t> columns(Role r) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < specs.size(); ++i) {
            if (specs[i].role == r) out.push_back(i);
        }
        return out;
    }
};

/// Variables a formulation feeds to its model: predictors only for SBF, everything otherwise.
inline std::vector<VariableSpec> model_input_specs(const std::vector<VariableSpec>& specs, Formulation f) {
    if (f != Formulation::sbf) return specs;
    std::vector<VariableSpec> out;
    for (const auto& s : specs) {
        if (!s.is_forecast()) out.push_back(s);
    }
    if (out.empty()) {
        throw FormulationError("formulation sbf is inapplicable: the dataset has no predictor variables");
    }
    return out;
}

inline int count_forecast(const std::vector<VariableSpec>& specs) {
    int m = 0;
    for (const auto& s : specs) m += s.is_forecast() ? 1 : 0;
    return m;
}

/// Builds a freshly initialized model for `formulation`, seeded from the run seed.
template <typename S>
std::unique_ptr<nn::SequenceModel<S>> make_model(const nn::HyperParams& hp, const std::vector<VariableSpec>& specs,
                                                 Formulation formulation, std::uint64_t seed) {
    Rng rng = make_rng(seed, Stream::init);
    return nn::build_model<S>(hp, model_input_specs(specs, formulation), count_forecast(specs), rng);
}

}  // namespace mmmf
