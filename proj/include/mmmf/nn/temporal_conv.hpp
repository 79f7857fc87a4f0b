#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mmmf/nn/sequence_model.hpp"

namespace mmmf::nn {

/**
 * @brief Causal dilated convolution stack with residual connections.
 *
 * Layer i convolves with dilation 2^i and left zero padding, so the output at
 * step t sees inputs t - (kernel-1) * 2^i ... t. Each layer is
 * relu(dropout(relu(conv(x))) + residual(x)), where residual is a 1x1
 * projection when the channel count changes. Receptive field:
 * 1 + (kernel - 1) * (2^layers - 1).
 */
template <typename S>
class TemporalConvModel final : public SequenceModel<S> {
public:
    TemporalConvModel(const HyperParams& hp, std::vector<VariableSpec> input_specs, int outputs, Rng& rng)
        : SequenceModel<S>(with_arch(hp), std::move(input_specs), outputs, rng) {
        const auto& cfg = this->hp_.temporal_conv;
        int in = this->encoder_.width();
        for (int l = 0; l < cfg.layers; ++l) {
            const std::string p = "tcn." + std::to_string(l);
            Block b;
            b.dilation = 1 << l;
            b.conv = Linear<S>(this->store_, p + ".conv", cfg.kernel_size * in, cfg.channels, rng);
            if (in != cfg.channels) b.downsample = Linear<S>(this->store_, p + ".downsample", in, cfg.channels, rng);
            blocks_.push_back(std::move(b));
            in = cfg.channels;
        }
        readout_ = Linear<S>(this->store_, "readout", cfg.channels, outputs, rng);
    }

    Architecture architecture() const override { return Architecture::temporal_conv; }

    int receptive_field() const {
        const auto& cfg = this->hp_.temporal_conv;
        return 1 + (cfg.kernel_size - 1) * ((1 << cfg.layers) - 1);
    }

    Var forward(Tape<S>& tape, const Matrix<S>& raw, Eigen::Index batch, ForwardMode mode) override {
        this->check_rows(raw, batch);
        const auto& cfg = this->hp_.temporal_conv;
        Var x = this->encoder_(tape, raw);
        for (const auto& b : blocks_) {
            std::vector<Var> taps;
            for (int j = 0; j < cfg.kernel_size; ++j) {
                const Eigen::Index delay = static_cast<Eigen::Index>(cfg.kernel_size - 1 - j) * b.dilation;
                taps.push_back(delay == 0 ? x : tape.shift_rows(x, delay * batch));
            }
            Var y = tape.relu(b.conv(tape, taps.size() == 1 ? taps.front() : tape.concat_cols(taps)));
            if (mode.training) y = tape.dropout(y, cfg.dropout, *mode.rng);
            const Var res = b.downsample ? (*b.downsample)(tape, x) : x;
            x = tape.relu(tape.add(y, res));
        }
        return readout_(tape, x);
    }

private:
    struct Block {
        int dilation = 1;
        Linear<S> conv;
        std::optional<Linear<S>> downsample;
    };

    static HyperParams with_arch(HyperParams hp) {
        hp.architecture = Architecture::temporal_conv;
        return hp;
    }

    std::vector<Block> blocks_;
    Linear<S> readout_;
};

}  // namespace mmmf::nn
