#pragma once

#include <vector>

#include "mmmf/nn/sequence_model.hpp"

namespace mmmf::nn {

/// Two fully connected layers with ReLU, applied to every row independently.
template <typename S>
class FeedForwardModel final : public SequenceModel<S> {
public:
    FeedForwardModel(const HyperParams& hp, std::vector<VariableSpec> input_specs, int outputs, Rng& rng)
        : SequenceModel<S>(with_arch(hp), std::move(input_specs), outputs, rng) {
        hidden_ = Linear<S>(this->store_, "hidden", this->encoder_.width(), this->hp_.feed_forward.hidden, rng);
        readout_ = Linear<S>(this->store_, "readout", this->hp_.feed_forward.hidden, outputs, rng);
    }

    Architecture architecture() const override { return Architecture::feed_forward; }

    Var forward(Tape<S>& tape, const Matrix<S>& raw, Eigen::Index batch, ForwardMode) override {
        this->check_rows(raw, batch);
        return readout_(tape, tape.relu(hidden_(tape, this->encoder_(tape, raw))));
    }

private:
    static HyperParams with_arch(HyperParams hp) {
        hp.architecture = Architecture::feed_forward;
        return hp;
    }

    Linear<S> hidden_;
    Linear<S> readout_;
};

}  // namespace mmmf::nn
