#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mmmf/nn/sequence_model.hpp"

namespace mmmf::nn {

/// Fixed sinusoidal position table of shape (length, width).
template <typename S>
Matrix<S> sinusoidal_positions(Eigen::Index length, Eigen::Index width) {
    Matrix<S> pe(length, width);
    for (Eigen::Index t = 0; t < length; ++t) {
        for (Eigen::Index i = 0; i < width; ++i) {
            const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
            const double a = static_cast<double>(t) * freq;
            pe(t, i) = static_cast<S>(i % 2 == 0 ? std::sin(a) : std::cos(a));
        }
    }
    return pe;
}

/**
 * @brief Encoder-only transformer with a per-step readout.
 *
 * Input projection to the model width, additive sinusoidal positions, then
 * post-norm encoder layers (self-attention and a ReLU feed-forward block, each
 * wrapped in dropout + residual + layer norm). Attention spans the whole
 * sequence; there is no causal mask.
 */
template <typename S>
class AttentionEncoderModel final : public SequenceModel<S> {
public:
    AttentionEncoderModel(const HyperParams& hp, std::vector<VariableSpec> input_specs, int outputs, Rng& rng)
        : SequenceModel<S>(with_arch(hp), std::move(input_specs), outputs, rng) {
        const auto& cfg = this->hp_.attention;
        auto& st = this->store_;
        input_ = Linear<S>(st, "input", this->encoder_.width(), cfg.model_dim, rng);
        for (int l = 0; l < cfg.layers; ++l) {
            const std::string p = "encoder." + std::to_string(l);
            layers_.push_back({Linear<S>(st, p + ".query", cfg.model_dim, cfg.model_dim, rng),
                               Linear<S>(st, p + ".key", cfg.model_dim, cfg.model_dim, rng),
                               Linear<S>(st, p + ".value", cfg.model_dim, cfg.model_dim, rng),
                               Linear<S>(st, p + ".attn_out", cfg.model_dim, cfg.model_dim, rng),
                               LayerNorm<S>(st, p + ".norm1", cfg.model_dim),
                               Linear<S>(st, p + ".ff1", cfg.model_dim, cfg.ff_dim, rng),
                               Linear<S>(st, p + ".ff2", cfg.ff_dim, cfg.model_dim, rng),
                               LayerNorm<S>(st, p + ".norm2", cfg.model_dim)});
        }
        readout_ = Linear<S>(st, "readout", cfg.model_dim, outputs, rng);
    }

    Architecture architecture() const override { return Architecture::attention_encoder; }

    int head_width() const { return this->hp_.attention.model_dim / this->hp_.attention.heads; }

    Var forward(Tape<S>& tape, const Matrix<S>& raw, Eigen::Index batch, ForwardMode mode) override {
        this->check_rows(raw, batch);
        const auto& cfg = this->hp_.attention;
        const Eigen::Index len = raw.rows() / batch;
        auto drop = [&](Var v) { return mode.training ? tape.dropout(v, cfg.dropout, *mode.rng) : v; };

        const Matrix<S> pe = sinusoidal_positions<S>(len, cfg.model_dim);
        Matrix<S> pos(raw.rows(), cfg.model_dim);
        for (Eigen::Index t = 0; t < len; ++t) pos.middleRows(t * batch, batch).rowwise() = pe.row(t);

        Var x = drop(tape.add(input_(tape, this->encoder_(tape, raw)), tape.constant(std::move(pos))));
        for (const auto& l : layers_) {
            const Var att = tape.attention(l.query(tape, x), l.key(tape, x), l.value(tape, x), cfg.heads, batch);
            x = l.norm1(tape, tape.add(x, drop(l.attn_out(tape, att))));
            const Var ff = l.ff2(tape, drop(tape.relu(l.ff1(tape, x))));
            x = l.norm2(tape, tape.add(x, drop(ff)));
        }
        return readout_(tape, x);
    }

private:
    struct Layer {
        Linear<S> query, key, value, attn_out;
        LayerNorm<S> norm1;
        Linear<S> ff1, ff2;
        LayerNorm<S> norm2;
    };

    static HyperParams with_arch(HyperParams hp) {
        hp.architecture = Architecture::attention_encoder;
        return hp;
    }

    Linear<S> input_;
    std::vector<Layer> layers_;
    Linear<S> readout_;
};

}  // namespace mmmf::nn
