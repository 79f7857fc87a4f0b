#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "mmmf/autodiff.hpp"
#include "mmmf/data/dataset.hpp"
#include "mmmf/error.hpp"
#include "mmmf/random.hpp"
#include "mmmf/tensor.hpp"

namespace mmmf::nn {

using ad::Parameter;
using ad::Tape;
using ad::Var;

/// Owns parameters at stable addresses, in registration order.
template <typename S>
class ParamStore {
public:
    Parameter<S>& create(std::string name, Matrix<S> value) {
        for (const auto& p : params_) {
            if (p.name == name) throw ContractError("duplicate parameter name '" + name + "'");
        }
        params_.emplace_back(std::move(name), std::move(value));
        return params_.back();
    }

    std::vector<Parameter<S>*> all() {
        std::vector<Parameter<S>*> out;
        for (auto& p : params_) out.push_back(&p);
        return out;
    }
    std::vector<const Parameter<S>*> all() const {
        std::vector<const Parameter<S>*> out;
        for (const auto& p : params_) out.push_back(&p);
        return out;
    }

    Parameter<S>* find(const std::string& name) {
        for (auto& p : params_) {
            if (p.name == name) return &p;
        }
        return nullptr;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
        return n;
    }

private:
    std::deque<Parameter<S>> params_;
};

template <typename S>
Matrix<S> uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix<S> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(dist(rng));
    return m;
}

template <typename S>
Matrix<S> normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix<S> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(dist(rng));
    return m;
}

/// y = x W + b with W of shape (in, out); fan-in uniform initialization.
template <typename S>
class Linear {
public:
    Linear() = default;
    Linear(ParamStore<S>& store, const std::string& name, int in, int out, Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        weight_ = &store.create(name + ".weight", uniform_matrix<S>(in, out, bound, rng));
        bias_ = &store.create(name + ".bias", uniform_matrix<S>(1, out, bound, rng));
    }

    Var operator()(Tape<S>& tape, Var x) const {
        return tape.affine(x, tape.param(*weight_), tape.param(*bias_));
    }

    int in_features() const { return static_cast<int>(weight_->value.rows()); }
    int out_features() const { return static_cast<int>(weight_->value.cols()); }

private:
    Parameter<S>* weight_ = nullptr;
    Parameter<S>* bias_ = nullptr;
};

template <typename S>
class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(ParamStore<S>& store, const std::string& name, int width) {
        gain_ = &store.create(name + ".gain", Matrix<S>::Ones(1, width));
        bias_ = &store.create(name + ".bias", Matrix<S>::Zero(1, width));
    }
    Var operator()(Tape<S>& tape, Var x) const {
        return tape.layer_norm(x, tape.param(*gain_), tape.param(*bias_));
    }

private:
    Parameter<S>* gain_ = nullptr;
    Parameter<S>* bias_ = nullptr;
};

/**
 * @brief Turns raw variable columns into model features.
 *
 * Continuous variables pass through; each categorical variable is replaced by
 * its `embedding_dim`-wide embedding row. Column order follows the specs.
 * Encoded width = (#continuous) + embedding_dim * (#categorical).
 */
template <typename S>
class InputEncoder {
public:
    InputEncoder() = default;
    InputEncoder(ParamStore<S>& store, std::vector<VariableSpec> specs, int embedding_dim, Rng& rng)
        : specs_(std::move(specs)), embedding_dim_(embedding_dim) {
        tables_.assign(specs_.size(), nullptr);
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            if (!specs_[i].is_categorical()) continue;
            tables_[i] = &store.create("embedding." + specs_[i].name,
                                       normal_matrix<S>(specs_[i].cardinality, embedding_dim, rng));
        }
    }

    const std::vector<VariableSpec>& specs() const noexcept { return specs_; }
    int embedding_dim() const noexcept { return embedding_dim_; }

    int width() const {
        int w = 0;
        for (const auto& s : specs_) w += s.is_categorical() ? embedding_dim_ : 1;
        return w;
    }

    /// `raw` is (rows, specs.size()).
    Var operator()(Tape<S>& tape, const Matrix<S>& raw) const {
        if (static_cast<std::size_t>(raw.cols()) != specs_.size()) {
            throw ContractError("encoder expects " + std::to_string(specs_.size()) + " input columns, got " +
                                std::to_string(raw.cols()));
        }
        if (std::none_of(specs_.begin(), specs_.end(), [](const auto& s) { return s.is_categorical(); })) {
            return tape.constant(raw);
        }
        std::vector<Var> parts;
        std::size_t c = 0;
        while (c < specs_.size()) {
            if (!specs_[c].is_categorical()) {
                std::size_t end = c;
                while (end < specs_.size() && !specs_[end].is_categorical()) ++end;
                parts.push_back(tape.constant(raw.middleCols(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(end - c))));
                c = end;
                continue;
            }
            std::vector<int> codes(static_cast<std::size_t>(raw.rows()));
            for (Eigen::Index r = 0; r < raw.rows(); ++r) {
                const double v = static_cast<double>(raw(r, static_cast<Eigen::Index>(c)));
                const auto code = static_cast<int>(std::lround(v));
                if (code < 0 || code >= specs_[c].cardinality || std::abs(v - code) > 1e-6) {
                    throw ContractError("categorical variable '" + specs_[c].name + "': code " + std::to_string(v) +
                                        " outside [0, " + std::to_string(specs_[c].cardinality) + ")");
                }
                codes[static_cast<std::size_t>(r)] = code;
            }
            parts.push_back(tape.embedding(tape.param(*tables_[c]), codes));
            ++c;
        }
        return parts.size() == 1 ? parts.front() : tape.concat_cols(parts);
    }

private:
    std::vector<VariableSpec> specs_;
    int embedding_dim_ = 5;
    std::vector<Parameter<S>*> tables_;
};

}  // namespace mmmf::nn
