#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mmmf/nn/sequence_model.hpp"

namespace mmmf::nn {

/**
 * @brief Stacked LSTM with a per-step linear readout.
 *
 * Gate layout in the packed (.., 4 * hidden) matrices is input, forget, cell,
 * output. Causal by construction.
 */
template <typename S>
class RecurrentModel final : public SequenceModel<S> {
public:
    RecurrentModel(const HyperParams& hp, std::vector<VariableSpec> input_specs, int outputs, Rng& rng)
        : SequenceModel<S>(with_arch(hp), std::move(input_specs), outputs, rng) {
        const int hidden = this->hp_.recurrent.hidden;
        const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
        int in = this->encoder_.width();
        for (int l = 0; l < this->hp_.recurrent.layers; ++l) {
            const std::string p = "lstm." + std::to_string(l);
            layers_.push_back({&this->store_.create(p + ".w_input", uniform_matrix<S>(in, 4 * hidden, bound, rng)),
                               &this->store_.create(p + ".w_hidden", uniform_matrix<S>(hidden, 4 * hidden, bound, rng)),
                               &this->store_.create(p + ".bias", uniform_matrix<S>(1, 4 * hidden, bound, rng))});
            in = hidden;
        }
        readout_ = Linear<S>(this->store_, "readout", hidden, outputs, rng);
    }

    Architecture architecture() const override { return Architecture::recurrent; }

    Var forward(Tape<S>& tape, const Matrix<S>& raw, Eigen::Index batch, ForwardMode) override {
        this->check_rows(raw, batch);
        Var x = this->encoder_(tape, raw);
        for (const auto& layer : layers_) {
            const Var xw = tape.affine(x, tape.param(*layer.w_input), tape.param(*layer.bias));
            x = tape.lstm_sequence(xw, tape.param(*layer.w_hidden), batch);
        }
        return readout_(tape, x);
    }

private:
    struct Layer {
        Parameter<S>* w_input;
        Parameter<S>* w_hidden;
        Parameter<S>* bias;
    };

    static HyperParams with_arch(HyperParams hp) {
        hp.architecture = Architecture::recurrent;
        return hp;
    }

    std::vector<Layer> layers_;
    Linear<S> readout_;
};

}  // namespace mmmf::nn
