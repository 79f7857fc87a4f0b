#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mmmf/data/calendar.hpp"
#include "mmmf/data/dataset.hpp"
#include "mmmf/error.hpp"
#include "mmmf/random.hpp"

namespace mmmf {

/**
 * @brief Controllable synthetic series.
 *
 *   x_t   = sin(2 pi t / P) + u_t,                u_t ~ U(-1, 1)
 *   y^j_t = a g_j(x_t) + (1 - a) r y^j_{t-1} + s e_t,   e_t ~ N(0, 1)
 *   g_j(x) = 2 tanh(0.8 x + 0.25 j)
 *
 * plus a categorical predictor `phase` = t mod P. `future_weight` is a,
 * `ar_coefficient` is r, `noise_std` is s.
 */
struct SyntheticConfig {
    std::size_t num_steps = 5000;
    int num_forecast = 2;
    double future_weight = 0.8;
    double ar_coefficient = 0.5;
    double noise_std = 0.05;
    int period = 7;
    std::uint64_t seed = 0;
    std::size_t burn_in = 200;  ///< discarded leading steps

    void validate() const {
        if (num_steps < 1) throw ConfigError("synthetic: num_steps must be positive");
        if (num_forecast < 1) throw ConfigError("synthetic: need at least one forecast variable");
        if (!(future_weight >= 0.0 && future_weight <= 1.0)) throw ConfigError("synthetic: future weight must lie in [0, 1]");
        if (!(ar_coefficient > -1.0 && ar_coefficient < 1.0)) throw ConfigError("synthetic: AR coefficient must lie in (-1, 1)");
        if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ConfigError("synthetic: noise std must be non-negative");
        if (period < 1) throw ConfigError("synthetic: period must be positive");
    }
};

/// The fixed nonlinearity linking the predictor to forecast variable j.
inline double synthetic_link(double x, int j) { return 2.0 * std::tanh(0.8 * x + 0.25 * j); }

/// Variables: x (continuous predictor), phase (categorical predictor), y0..y{m-1}. Daily timestamps from 2000-01-01.
inline TimeSeriesDataset generate(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, 0x5F37));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int m = cfg.num_forecast;
    const std::size_t total = cfg.num_steps + cfg.burn_in;

    Matrix<double> values(static_cast<Eigen::Index>(cfg.num_steps), 2 + m);
    std::vector<double> y(static_cast<std::size_t>(m), 0.0);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t s = 0; s < total; ++s) {
        const long long t = static_cast<long long>(s) - static_cast<long long>(cfg.burn_in);
        const double x = std::sin(two_pi * static_cast<double>(t) / cfg.period) + uni(rng);
        for (int j = 0; j < m; ++j) {
            auto& yj = y[static_cast<std::size_t>(j)];
            yj = cfg.future_weight * synthetic_link(x, j) + (1.0 - cfg.future_weight) * cfg.ar_coefficient * yj +
                 cfg.noise_std * gauss(rng);
        }
        if (t < 0) continue;
        const auto r = static_cast<Eigen::Index>(t);
        values(r, 0) = x;
        values(r, 1) = static_cast<double>(((t % cfg.period) + cfg.period) % cfg.period);
        for (int j = 0; j < m; ++j) values(r, 2 + j) = y[static_cast<std::size_t>(j)];
    }

    std::vector<VariableSpec> specs{VariableSpec::continuous("x", Role::predictor),
                                    VariableSpec::categorical("phase", Role::predictor, cfg.period)};
    for (int j = 0; j < m; ++j) specs.push_back(VariableSpec::continuous("y" + std::to_string(j), Role::forecast));
    for (std::size_t c = 0; c < specs.size(); ++c) {
        if (specs[c].is_categorical()) continue;
        specs[c].observed_range = {values.col(static_cast<Eigen::Index>(c)).minCoeff(),
                                   values.col(static_cast<Eigen::Index>(c)).maxCoeff()};
    }

    std::vector<std::string> stamps;
    stamps.reserve(cfg.num_steps);
    const std::chrono::sys_days start = std::chrono::year{2000} / std::chrono::January / 1;
    for (std::size_t t = 0; t < cfg.num_steps; ++t) {
        stamps.push_back(date_label(std::chrono::year_month_day{start + std::chrono::days{static_cast<long>(t)}}));
    }
    return TimeSeriesDataset(std::move(specs), std::move(values), std::move(stamps));
}

}  // namespace mmmf
