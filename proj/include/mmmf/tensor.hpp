#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "mmmf/error.hpp"

namespace mmmf {

/// Row-major dynamic matrix; rows are samples or time steps, columns are features.
template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
using RowVector = Eigen::Matrix<S, 1, Eigen::Dynamic>;

/// Dense (batch, steps, channels) array of doubles.
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t batch, std::size_t steps, std::size_t channels, double fill = 0.0)
        : batch_(batch), steps_(steps), channels_(channels), data_(batch * steps * channels, fill) {}

    std::size_t batch() const noexcept { return batch_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t b, std::size_t t, std::size_t c) {
        return data_[(b * steps_ + t) * channels_ + c];
    }
    double operator()(std::size_t b, std::size_t t, std::size_t c) const {
        return data_[(b * steps_ + t) * channels_ + c];
    }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    bool same_shape(const Tensor3& other) const noexcept {
        return batch_ == other.batch_ && steps_ == other.steps_ && channels_ == other.channels_;
    }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    std::size_t batch_ = 0;
    std::size_t steps_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> data_;
};

/// Flattens a (batch, steps, channels) tensor to a time-major (steps * batch, channels)
/// matrix: row `t * batch + b` holds sample b at step t.
template <typename S>
Matrix<S> to_time_major(const Tensor3& x) {
    Matrix<S> out(x.steps() * x.batch(), x.channels());
    for (std::size_t t = 0; t < x.steps(); ++t) {
        for (std::size_t b = 0; b < x.batch(); ++b) {
            const auto row = static_cast<Eigen::Index>(t * x.batch() + b);
            for (std::size_t c = 0; c < x.channels(); ++c) {
                out(row, static_cast<Eigen::Index>(c)) = static_cast<S>(x(b, t, c));
            }
        }
    }
    return out;
}

/// Inverse of to_time_major.
template <typename S>
Tensor3 from_time_major(const Matrix<S>& m, std::size_t batch) {
    if (batch == 0 || static_cast<std::size_t>(m.rows()) % batch != 0) {
        throw ContractError("from_time_major: row count is not a multiple of the batch size");
    }
    const std::size_t steps = static_cast<std::size_t>(m.rows()) / batch;
    Tensor3 out(batch, steps, static_cast<std::size_t>(m.cols()));
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t c = 0; c < out.channels(); ++c) {
                out(b, t, c) = static_cast<double>(
                    m(static_cast<Eigen::Index>(t * batch + b), static_cast<Eigen::Index>(c)));
            }
        }
    }
    return out;
}

}  // namespace mmmf
