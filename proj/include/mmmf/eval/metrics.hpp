#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmmf/error.hpp"
#include "mmmf/tensor.hpp"

namespace mmmf {

/// Smallest |truth| accepted by mape(); smaller denominators are an error, not a clamp.
inline constexpr double kMapeGuard = 1e-8;

enum class Metric { mse, mape };

inline std::string_view to_string(Metric m) { return m == Metric::mse ? "mse" : "mape"; }

inline Metric parse_metric(std::string_view s) {
    if (s == "mse") return Metric::mse;
    if (s == "mape") return Metric::mape;
    throw ConfigError("unknown metric '" + std::string(s) + "'");
}

namespace detail {

inline void check_sizes(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw ContractError(std::string(what) + ": prediction and truth sizes differ (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
    if (a == 0) throw ContractError(std::string(what) + ": empty input");
}

}  // namespace detail

/// 100 * mean(|pred - truth| / |truth|).
inline double mape(std::span<const double> pred, std::span<const double> truth) {
    detail::check_sizes(pred.size(), truth.size(), "mape");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!(std::abs(truth[i]) >= kMapeGuard)) {
            throw DataError("mape: |truth| below " + std::to_string(kMapeGuard) + " at cell " + std::to_string(i));
        }
        sum += std::abs(pred[i] - truth[i]) / std::abs(truth[i]);
    }
    return 100.0 * sum / static_cast<double>(pred.size());
}

inline double mse(std::span<const double> pred, std::span<const double> truth) {
    detail::check_sizes(pred.size(), truth.size(), "mse");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return sum / static_cast<double>(pred.size());
}

inline double metric_value(Metric m, std::span<const double> pred, std::span<const double> truth) {
    return m == Metric::mse ? mse(pred, truth) : mape(pred, truth);
}

/**
 * @brief Error per (step, variable) over all samples of (samples, steps, variables) tensors.
 *
 * Returns a (steps, variables) matrix.
 */
inline Matrix<double> metric_by_step(Metric m, const Tensor3& pred, const Tensor3& truth) {
    if (!pred.same_shape(truth)) throw ContractError("metric_by_step: shape mismatch");
    Matrix<double> out(static_cast<Eigen::Index>(pred.steps()), static_cast<Eigen::Index>(pred.channels()));
    std::vector<double> p(pred.batch()), t(pred.batch());
    for (std::size_t j = 0; j < pred.steps(); ++j) {
        for (std::size_t v = 0; v < pred.channels(); ++v) {
            for (std::size_t b = 0; b < pred.batch(); ++b) {
                p[b] = pred(b, j, v);
                t[b] = truth(b, j, v);
            }
            out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(v)) = metric_value(m, p, t);
        }
    }
    return out;
}

/// Mean and population standard deviation.
struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

inline MeanStd mean_std(std::span<const double> xs) {
    if (xs.empty()) throw ContractError("mean_std: empty input");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace mmmf
