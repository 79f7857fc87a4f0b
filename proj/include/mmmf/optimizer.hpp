#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mmmf/autodiff.hpp"
#include "mmmf/error.hpp"

namespace mmmf {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/**
 * @brief Adaptive-moment optimizer with bias correction.
 *
 *   m <- b1 m + (1 - b1) g
 *   v <- b2 v + (1 - b2) g^2
 *   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
 */
template <typename S>
class Adam {
public:
    explicit Adam(std::vector<ad::Parameter<S>*> params, AdamConfig cfg = {}) : params_(std::move(params)), cfg_(cfg) {
        for (auto* p : params_) {
            m_.push_back(Matrix<S>::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(Matrix<S>::Zero(p->value.rows(), p->value.cols()));
        }
    }

    /// Applies one update from the parameters' current gradients. Throws DivergenceError on non-finite gradients.
    void step() {
        for (const auto* p : params_) {
            if (!p->grad.allFinite()) throw DivergenceError("non-finite gradient in parameter '" + p->name + "'", -1);
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
        const S step_size = static_cast<S>(cfg_.learning_rate / bc1);
        const S inv_sqrt_bc2 = static_cast<S>(1.0 / std::sqrt(bc2));
        const S eps = static_cast<S>(cfg_.epsilon);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = *params_[i];
            m_[i] = b1 * m_[i] + (S(1) - b1) * p.grad;
            v_[i] = b2 * v_[i] + (S(1) - b2) * p.grad.cwiseProduct(p.grad);
            p.value.array() -= step_size * m_[i].array() / (v_[i].array().sqrt() * inv_sqrt_bc2 + eps);
        }
    }

    /// Rescales all gradients so their joint L2 norm is at most `max_norm`; returns the norm before clipping.
    double clip_grad_norm(double max_norm) {
        double sq = 0.0;
        for (const auto* p : params_) sq += static_cast<double>(p->grad.squaredNorm());
        const double norm = std::sqrt(sq);
        if (max_norm > 0.0 && norm > max_norm) {
            const S f = static_cast<S>(max_norm / norm);
            for (auto* p : params_) p->grad *= f;
        }
        return norm;
    }

    long steps() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return cfg_; }

private:
    std::vector<ad::Parameter<S>*> params_;
    AdamConfig cfg_;
    std::vector<Matrix<S>> m_, v_;
    long t_ = 0;
};

}  // namespace mmmf
