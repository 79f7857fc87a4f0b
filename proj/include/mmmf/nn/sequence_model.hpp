#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mmmf/autodiff.hpp"
#include "mmmf/nn/hyperparams.hpp"
#include "mmmf/nn/layers.hpp"
#include "mmmf/random.hpp"
#include "mmmf/tensor.hpp"

namespace mmmf::nn {

/// Training mode enables dropout, which draws from `rng`.
struct ForwardMode {
    bool training = false;
    Rng* rng = nullptr;

    static ForwardMode eval() { return {}; }
    static ForwardMode train(Rng& r) { return {true, &r}; }
};

/**
 * @brief Any model mapping a length-L input sequence to a length-L output sequence.
 *
 * Inputs are raw (normalized, not yet embedded) variable columns in time-major
 * layout: row `t * batch + b` holds sample b at step t. The output has the same
 * row layout and `output_width()` columns.
 */
template <typename S>
class SequenceModel {
public:
    virtual ~SequenceModel() = default;

    virtual Architecture architecture() const = 0;

    virtual Var forward(Tape<S>& tape, const Matrix<S>& raw, Eigen::Index batch, ForwardMode mode) = 0;

    /// Evaluation-mode forward without gradient recording.
    Matrix<S> predict(const Matrix<S>& raw, Eigen::Index batch) {
        Tape<S> tape(false);
        return tape.value(forward(tape, raw, batch, ForwardMode::eval()));
    }

    /// Encoded features (continuous columns and embedding rows) for raw inputs.
    Matrix<S> encode_inputs(const Matrix<S>& raw) const {
        Tape<S> tape(false);
        return tape.value(encoder_(tape, raw));
    }

    std::vector<Parameter<S>*> parameters() { return store_.all(); }
    std::vector<const Parameter<S>*> parameters() const { return store_.all(); }
    Parameter<S>* find_parameter(const std::string& name) { return store_.find(name); }
    std::size_t parameter_count() const { return store_.count(); }

    void zero_grad() {
        for (auto* p : store_.all()) p->zero_grad();
    }

    const HyperParams& hyper_params() const noexcept { return hp_; }
    const std::vector<VariableSpec>& input_specs() const noexcept { return encoder_.specs(); }
    int input_width() const { return encoder_.width(); }
    int output_width() const noexcept { return outputs_; }

protected:
    SequenceModel(const HyperParams& hp, std::vector<VariableSpec> input_specs, int outputs, Rng& rng)
        : hp_(hp), outputs_(outputs) {
        hp_.validate();
        if (outputs < 1) throw ConfigError("model needs at least one output");
        if (input_specs.empty()) throw ConfigError("model needs at least one input variable");
        encoder_ = InputEncoder<S>(store_, std::move(input_specs), hp_.embedding_dim, rng);
    }

    static void check_rows(const Matrix<S>& raw, Eigen::Index batch) {
        if (batch < 1 || raw.rows() < batch || raw.rows() % batch != 0) {
            throw ContractError("forward: " + std::to_string(raw.rows()) + " input rows are not a positive multiple of batch " +
                                std::to_string(batch));
        }
    }

    HyperParams hp_;
    int outputs_;
    ParamStore<S> store_;
    InputEncoder<S> encoder_;
};

}  // namespace mmmf::nn
