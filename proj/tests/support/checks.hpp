#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "mmmf/data/pipeline.hpp"
#include "mmmf/masking.hpp"
#include "mmmf/nn/factory.hpp"
#include "mmmf/optimizer.hpp"
#include "mmmf/synthetic.hpp"
#include "mmmf/train/samples.hpp"

namespace mmmf::testing {

/// Two continuous predictors, one categorical predictor (3 codes) and one forecast variable.
inline std::vector<VariableSpec> toy_specs() {
    return {VariableSpec::continuous("a", Role::predictor, {-1.0, 1.0}),
            VariableSpec::continuous("b", Role::predictor, {-1.0, 1.0}),
            VariableSpec::categorical("c", Role::predictor, 3),
            VariableSpec::continuous("y", Role::forecast, {-2.0, 2.0})};
}

/// Random raw inputs (time-major, L * batch rows) matching `specs`.
inline Matrix<double> toy_inputs(const std::vector<VariableSpec>& specs, Eigen::Index steps, Eigen::Index batch, Rng& rng) {
    Matrix<double> x(steps * batch, static_cast<Eigen::Index>(specs.size()));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < specs.size(); ++c) {
            x(r, static_cast<Eigen::Index>(c)) =
                specs[c].is_categorical() ? static_cast<double>(std::uniform_int_distribution<int>(0, specs[c].cardinality - 1)(rng)) : u(rng);
        }
    }
    return x;
}

/// Toy-size hyperparameters: every width at most 8.
inline nn::HyperParams toy_hyper_params(nn::Architecture a) {
    nn::HyperParams hp;
    hp.architecture = a;
    hp.recurrent = {2, 6};
    hp.temporal_conv.layers = 2;
    hp.temporal_conv.channels = 6;
    hp.attention = {8, 8, 2, 1, 0.1};
    hp.feed_forward.hidden = 8;
    hp.embedding_dim = 5;
    return hp;
}

struct GradientCheck {
    std::size_t checked = 0;
    std::size_t within_tight = 0;   ///< relative error <= 1e-4
    double worst = 0.0;
    std::string worst_parameter;

    double tight_fraction() const { return checked ? static_cast<double>(within_tight) / static_cast<double>(checked) : 0.0; }
};

/**
 * @brief Compares tape gradients of a fixed random linear functional of the
 * model output against central differences, for every parameter entry.
 *
 * Relative error is |a - n| / max(|a|, |n|, floor).
 */
inline GradientCheck check_gradients(nn::Architecture arch, std::uint64_t seed, Eigen::Index steps = 5,
                                     Eigen::Index batch = 2, double h = 1e-6, double floor = 1e-6) {
    Rng rng(seed);
    const auto specs = toy_specs();
    auto model = nn::build_model<double>(toy_hyper_params(arch), specs, 2, rng);
    const Eigen::Index L = arch == nn::Architecture::feed_forward ? 1 : steps;
    const Matrix<double> x = toy_inputs(specs, L, batch, rng);
    Matrix<double> w(L * batch, 2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);

    auto loss = [&] {
        ad::Tape<double> tape(false);
        return tape.value(tape.weighted_sum(model->forward(tape, x, batch, nn::ForwardMode::eval()), w))(0, 0);
    };
    model->zero_grad();
    {
        ad::Tape<double> tape(true);
        tape.backward(tape.weighted_sum(model->forward(tape, x, batch, nn::ForwardMode::eval()), w));
    }
    GradientCheck out;
    for (auto* p : model->parameters()) {
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
            double& v = p->value.data()[i];
            const double keep = v;
            v = keep + h;
            const double up = loss();
            v = keep - h;
            const double down = loss();
            v = keep;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = p->grad.data()[i];
            const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
            ++out.checked;
            if (rel <= 1e-4) ++out.within_tight;
            if (rel > out.worst) {
                out.worst = rel;
                out.worst_parameter = p->name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return out;
}

/// Prepared synthetic data small enough for property suites.
inline PreparedData small_prepared(std::uint64_t seed, std::size_t steps = 400, int forecast_vars = 2) {
    SyntheticConfig sc;
    sc.num_steps = steps;
    sc.num_forecast = forecast_vars;
    sc.seed = seed;
    return prepare(generate(sc));
}

struct MaskingSuite {
    std::size_t batches = 0;
    std::size_t predictor_mismatches = 0;
    std::size_t unmasked_forecast_mismatches = 0;
    std::size_t out_of_range = 0;
    std::size_t loss_mask_errors = 0;
    std::size_t target_errors = 0;

    bool ok() const {
        return predictor_mismatches == 0 && unmasked_forecast_mismatches == 0 && out_of_range == 0 && loss_mask_errors == 0 &&
               target_errors == 0;
    }
};

inline bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

/// Random windows, random mask lengths; checks every cell of every batch.
inline MaskingSuite run_masking_suite(std::size_t batches, std::uint64_t seed) {
    const auto data = small_prepared(seed, 600, 3);
    const auto& ds = data.data;
    Rng rng(seed ^ 0xA5A5);
    MaskSampler sampler(seed + 1, ds.specs());
    const auto fc = ds.forecast_indices();
    MaskingSuite out;
    for (std::size_t n = 0; n < batches; ++n) {
        const int T = std::uniform_int_distribution<int>(1, 12)(rng);
        const int h = std::uniform_int_distribution<int>(1, 12)(rng);
        const int lm = sampler.sample_mask_length(h);
        const auto windows = slide_windows(ds, T, h, std::uniform_int_distribution<int>(1, 40)(rng));
        const std::size_t B = std::min<std::size_t>(windows.size(), std::uniform_int_distribution<std::size_t>(1, 16)(rng));
        const std::size_t first = std::uniform_int_distribution<std::size_t>(0, windows.size() - B)(rng);
        const std::span<const Window> batch(windows.data() + first, B);
        const auto mb = apply_mask(batch, lm, sampler);
        ++out.batches;
        const std::size_t len = static_cast<std::size_t>(T + h);
        for (std::size_t b = 0; b < B; ++b) {
            const auto& src = batch[b].data;
            for (std::size_t t = 0; t < len; ++t) {
                const bool masked_row = t >= len - static_cast<std::size_t>(lm);
                for (std::size_t c = 0; c < ds.num_variables(); ++c) {
                    const double in = mb.inputs(b, t, c);
                    const double orig = src(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
                    if (!ds.specs()[c].is_forecast()) {
                        if (!same_bits(in, orig)) ++out.predictor_mismatches;
                    } else if (!masked_row) {
                        if (!same_bits(in, orig)) ++out.unmasked_forecast_mismatches;
                    } else if (!ds.specs()[c].observed_range.contains(in)) {
                        ++out.out_of_range;
                    }
                }
            }
            for (int j = 0; j < h; ++j) {
                const bool expect = j >= h - lm;
                if (mb.loss_mask(static_cast<Eigen::Index>(b), j) != expect) ++out.loss_mask_errors;
                for (std::size_t v = 0; v < fc.size(); ++v) {
                    if (!same_bits(mb.targets(b, static_cast<std::size_t>(j), v),
                                   src(T + j, static_cast<Eigen::Index>(fc[v]))))
                        ++out.target_errors;
                }
            }
        }
        if (mb.loss_mask.count() != static_cast<Eigen::Index>(B) * lm) ++out.loss_mask_errors;
    }
    return out;
}

struct LocalityCheck {
    std::size_t unmasked_cells = 0;
    std::size_t masked_cells = 0;
    double worst_unmasked = 0.0;  ///< largest |finite difference| at an unmasked prediction
    double worst_masked_rel = 0.0;
    double worst_tape_unmasked = 0.0;  ///< largest |tape gradient| at an unmasked prediction
};

/**
 * @brief Finite-difference gradient of the masked loss with respect to a toy
 * model's predictions, against the analytic gradient and the training tape.
 */
inline LocalityCheck check_mask_locality(std::uint64_t seed, int trials = 20) {
    const auto data = small_prepared(seed, 300, 2);
    const auto& ds = data.data;
    const int T = 3, h = 3;
    Rng rng(seed);
    nn::HyperParams hp;
    hp.recurrent = {1, 8};
    auto model = nn::build_model<double>(hp, ds.specs(), 2, rng);
    MaskSampler sampler(seed + 7, ds.specs());
    LocalityCheck out;
    const double step = 1e-6;
    for (int trial = 0; trial < trials; ++trial) {
        const int lm = sampler.sample_mask_length(h);
        std::vector<std::size_t> origins;
        for (int b = 0; b < 4; ++b) origins.push_back(static_cast<std::size_t>(T) + std::uniform_int_distribution<std::size_t>(0, 200)(rng));
        const auto mb = apply_mask(mmmf_windows(ds, origins, T, h), lm, sampler);
        const auto sb = to_sample_batch<double>(mb);
        const Matrix<double> out_all = model->predict(sb.inputs, sb.batch);
        const Tensor3 full = from_time_major(out_all, origins.size());
        Tensor3 pred(origins.size(), static_cast<std::size_t>(h), 2);
        for (std::size_t b = 0; b < origins.size(); ++b)
            for (int j = 0; j < h; ++j)
                for (std::size_t v = 0; v < 2; ++v) pred(b, static_cast<std::size_t>(j), v) = full(b, static_cast<std::size_t>(T + j), v);

        const Tensor3 analytic = masked_loss_gradient(pred, mb);
        ad::Parameter<double> p("predictions", out_all);
        {
            ad::Tape<double> tape(true);
            tape.backward(tape.weighted_mse(tape.param(p), sb.targets, sb.weights));
        }
        const Tensor3 tape_grad = from_time_major(p.grad, origins.size());

        for (std::size_t b = 0; b < pred.batch(); ++b) {
            for (int j = 0; j < h; ++j) {
                for (std::size_t v = 0; v < pred.channels(); ++v) {
                    Tensor3 up = pred, down = pred;
                    up(b, static_cast<std::size_t>(j), v) += step;
                    down(b, static_cast<std::size_t>(j), v) -= step;
                    const double fd = (masked_loss(up, mb) - masked_loss(down, mb)) / (2.0 * step);
                    const double tg = tape_grad(b, static_cast<std::size_t>(T + j), v);
                    if (!mb.loss_mask(static_cast<Eigen::Index>(b), j)) {
                        ++out.unmasked_cells;
                        out.worst_unmasked = std::max(out.worst_unmasked, std::abs(fd));
                        out.worst_tape_unmasked = std::max(out.worst_tape_unmasked, std::abs(tg));
                    } else {
                        ++out.masked_cells;
                        const double a = analytic(b, static_cast<std::size_t>(j), v);
                        const double denom = std::max({std::abs(a), std::abs(fd), 1e-12});
                        out.worst_masked_rel = std::max({out.worst_masked_rel, std::abs(a - fd) / denom, std::abs(tg - a) / denom});
                    }
                }
            }
        }
        // history rows never carry loss
        for (std::size_t b = 0; b < origins.size(); ++b)
            for (int t = 0; t < T; ++t)
                for (std::size_t v = 0; v < 2; ++v) out.worst_tape_unmasked = std::max(out.worst_tape_unmasked, std::abs(tape_grad(b, static_cast<std::size_t>(t), v)));
    }
    return out;
}

/// Adam on one scalar parameter with a constant gradient against an independent recursion.
inline double adam_oracle_deviation(double start, double g, int steps, const AdamConfig& cfg = {}) {
    ad::Parameter<double> p("w", Matrix<double>::Constant(1, 1, start));
    Adam<double> opt({&p}, cfg);
    double m = 0.0, v = 0.0, ref = start, worst = 0.0;
    for (int t = 1; t <= steps; ++t) {
        p.grad(0, 0) = g;
        opt.step();
        m = cfg.beta1 * m + (1 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
        ref -= cfg.learning_rate * (m / (1 - std::pow(cfg.beta1, t))) / (std::sqrt(v / (1 - std::pow(cfg.beta2, t))) + cfg.epsilon);
        worst = std::max(worst, std::abs(p.value(0, 0) - ref));
    }
    return worst;
}

}  // namespace mmmf::testing
