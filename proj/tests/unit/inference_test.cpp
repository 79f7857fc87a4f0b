#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "checks.hpp"
#include "mmmf/eval/inference.hpp"
#include "mmmf/train/trainer.hpp"

using namespace mmmf;
using nn::Architecture;

namespace {

const PreparedData& data() {
    static const PreparedData d = mmmf::testing::small_prepared(21, 400, 2);
    return d;
}

TrainedForecaster<double>& trained(Formulation f) {
    static std::map<Formulation, TrainedForecaster<double>> cache;
    auto it = cache.find(f);
    if (it == cache.end()) {
        TrainConfig c;
        c.formulation = f;
        c.history = 5;
        c.k = 3;
        c.batch_size = 64;
        c.epochs = 3;
        c.seed = 1;
        const auto arch = f == Formulation::sbf ? Architecture::feed_forward : Architecture::recurrent;
        it = cache.emplace(f, train(make_model<double>(mmmf::testing::toy_hyper_params(arch), data().data.specs(), f, c.seed), data(), c)).first;
    }
    return it->second;
}

std::vector<std::size_t> some_origins() { return {250, 260, 300, 333}; }

TimeSeriesDataset with_rows_changed(const TimeSeriesDataset& ds, std::size_t from, const std::vector<std::size_t>& cols, double v) {
    Matrix<double> m = ds.values();
    for (Eigen::Index r = static_cast<Eigen::Index>(from); r < m.rows(); ++r) {
        for (auto c : cols) m(r, static_cast<Eigen::Index>(c)) = v;
    }
    return ds.with_values(m);
}

bool same(const Tensor3& a, const Tensor3& b) {
    return a.batch() == b.batch() && a.steps() == b.steps() && a.channels() == b.channels() && a.data() == b.data();
}

bool close(const Tensor3& a, const Tensor3& b, double tol = 1e-12) {
    return a.batch() == b.batch() && a.steps() == b.steps() && a.channels() == b.channels() &&
           std::ranges::equal(a.data(), b.data(), [&](double x, double y) { return std::abs(x - y) <= tol * std::max(1.0, std::abs(x)); });
}

}  // namespace

TEST(Rsf, RolloutFeedsBackPredictions) {
    auto& f = trained(Formulation::rsf);
    const int T = f.config.history;
    const int horizon = 9;
    const std::size_t o[] = {300};
    std::vector<Tensor3> seen;
    const auto out = forecast_normalized(f, data().data, o, horizon, {}, [&](int j, const Tensor3& inputs, const std::vector<bool>& predicted) {
        ASSERT_EQ(predicted.size(), static_cast<std::size_t>(T));
        const auto count = static_cast<int>(std::count(predicted.begin(), predicted.end(), true));
        EXPECT_EQ(count, std::min(j, T)) << "step " << j;
        for (int t = 0; t < T; ++t) EXPECT_EQ(predicted[static_cast<std::size_t>(t)], t >= T - std::min(j, T));
        for (double v : inputs.data()) EXPECT_TRUE(std::isfinite(v));
        seen.push_back(inputs);
    });
    ASSERT_EQ(seen.size(), static_cast<std::size_t>(horizon));
    const auto fc = f.forecast_columns();
    for (int j = 1; j < horizon; ++j) {
        // the newest input row of step j carries the prediction of step j - 1
        for (std::size_t v = 0; v < fc.size(); ++v) {
            EXPECT_EQ(seen[static_cast<std::size_t>(j)](0, static_cast<std::size_t>(T - 1), fc[v]), out(0, static_cast<std::size_t>(j - 1), v));
        }
    }
}

TEST(Rsf, IgnoresTrueFutureTargets) {
    auto& f = trained(Formulation::rsf);
    const auto o = some_origins();
    const auto a = forecast_normalized(f, data().data, o, 6);
    const auto changed = with_rows_changed(data().data, 240, f.forecast_columns(), 9.0);
    const std::size_t o2[] = {250};
    const auto b = forecast_normalized(f, changed, o2, 6);
    const auto base = forecast_normalized(f, data().data, o2, 6);
    EXPECT_FALSE(same(b, base));
    const std::size_t o3[] = {300};
    const auto c = forecast_normalized(f, with_rows_changed(data().data, 300, f.forecast_columns(), 9.0), o3, 6);
    EXPECT_TRUE(same(c, forecast_normalized(f, data().data, o3, 6)));
    EXPECT_EQ(a.batch(), o.size());
}

TEST(Dmf, FuturePredictorsDoNotMatter) {
    auto& f = trained(Formulation::dmf);
    const std::size_t o[] = {300};
    const auto base = forecast_normalized(f, data().data, o, f.config.horizon());
    const auto changed = with_rows_changed(data().data, 300, f.predictor_columns(), 0.0);
    EXPECT_TRUE(same(base, forecast_normalized(f, changed, o, f.config.horizon())));
    const auto past = with_rows_changed(data().data, 299, {0}, 3.0);
    EXPECT_FALSE(same(base, forecast_normalized(f, past, o, f.config.horizon())));
}

TEST(Dmf, ShorterHorizonIsPrefix) {
    auto& f = trained(Formulation::dmf);
    const auto o = some_origins();
    const auto full = forecast_normalized(f, data().data, o, 4);
    const auto two = forecast_normalized(f, data().data, o, 2);
    for (std::size_t b = 0; b < o.size(); ++b) {
        for (std::size_t j = 0; j < 2; ++j) {
            for (std::size_t v = 0; v < 2; ++v) EXPECT_EQ(full(b, j, v), two(b, j, v));
        }
    }
    EXPECT_THROW(forecast_normalized(f, data().data, o, 5), ContractError);
}

TEST(Sbf, StepsAreIndependentOfOrder) {
    auto& f = trained(Formulation::sbf);
    const std::vector<std::size_t> o = {250, 280};
    const std::vector<std::size_t> rev = {280, 250};
    const auto a = forecast_normalized(f, data().data, o, 4);
    const auto b = forecast_normalized(f, data().data, rev, 4);
    for (std::size_t j = 0; j < 4; ++j) {
        for (std::size_t v = 0; v < 2; ++v) {
            EXPECT_EQ(a(0, j, v), b(1, j, v));
            EXPECT_EQ(a(1, j, v), b(0, j, v));
        }
    }
    // row 252 is step 2 from origin 250 and step 0 from origin 252
    const std::size_t o2[] = {252};
    const auto c = forecast_normalized(f, data().data, o2, 1);
    EXPECT_EQ(c(0, 0, 0), a(0, 2, 0));
    const auto changed = with_rows_changed(data().data, 0, f.forecast_columns(), 5.0);
    EXPECT_TRUE(same(a, forecast_normalized(f, changed, o, 4)));
}

TEST(Mmmf, ServesEveryHorizonUpToTrained) {
    auto& f = trained(Formulation::mmmf);
    const auto o = some_origins();
    for (int l = 1; l <= f.config.horizon(); ++l) {
        const auto out = forecast_normalized(f, data().data, o, l);
        EXPECT_EQ(out.steps(), static_cast<std::size_t>(l));
        for (double v : out.data()) EXPECT_TRUE(std::isfinite(v));
    }
    EXPECT_THROW(forecast_normalized(f, data().data, o, f.config.horizon() + 1), ContractError);
    EXPECT_THROW(forecast_normalized(f, data().data, o, 0), ContractError);
}

TEST(Mmmf, UsesKnownFutureButNotMaskedTargets) {
    auto& f = trained(Formulation::mmmf);
    const int l = 2;
    const std::size_t o[] = {300};
    const auto base = forecast_normalized(f, data().data, o, l);
    // forecast values at or after the origin are masked
    EXPECT_TRUE(same(base, forecast_normalized(f, with_rows_changed(data().data, 300, f.forecast_columns(), 7.0), o, l)));
    // predictors inside the forecast block are known and used
    EXPECT_FALSE(same(base, forecast_normalized(f, with_rows_changed(data().data, 300, {data().data.index_of("x")}, 0.9), o, l)));
    // unmasked future forecast values before the origin are used
    Matrix<double> m = data().data.values();
    m(299, static_cast<Eigen::Index>(f.forecast_columns()[0])) += 1.0;
    EXPECT_FALSE(same(base, forecast_normalized(f, data().data.with_values(m), o, l)));
}

TEST(Inference, RepeatCallsAreBitIdentical) {
    for (auto form : {Formulation::mmmf, Formulation::rsf, Formulation::dmf, Formulation::sbf}) {
        auto& f = trained(form);
        const auto o = some_origins();
        const auto a = forecast_normalized(f, data().data, o, 3);
        const auto b = forecast_normalized(f, data().data, o, 3);
        EXPECT_TRUE(same(a, b)) << to_string(form);
        InferenceOptions chunked;
        chunked.chunk = 1;
        EXPECT_TRUE(close(a, forecast_normalized(f, data().data, o, 3, chunked))) << to_string(form);
    }
}

TEST(Inference, MultipleMaskFillsAverage) {
    auto& f = trained(Formulation::mmmf);
    InferenceOptions opt;
    opt.mask_fills = 4;
    const auto o = some_origins();
    const auto out = forecast_normalized(f, data().data, o, 3, opt);
    for (double v : out.data()) EXPECT_TRUE(std::isfinite(v));
    opt.mask_fills = 0;
    EXPECT_THROW(forecast_normalized(f, data().data, o, 3, opt), ContractError);
}

TEST(Inference, DenormalizationRestoresRawScale) {
    auto& f = trained(Formulation::dmf);
    const auto raw = data().normalizer.invert(data().data);
    const auto o = some_origins();
    const auto normalized_truth = forecast_truth(data().data, o, 3);
    const auto back = denormalize_forecast(f, normalized_truth);
    const auto truth = forecast_truth(raw, o, 3);
    for (std::size_t i = 0; i < truth.size(); ++i) EXPECT_NEAR(back.data()[i], truth.data()[i], 1e-9);
}

TEST(Inference, RequestMatchesDatasetPath) {
    auto& f = trained(Formulation::rsf);
    const auto raw = data().normalizer.invert(data().data);
    const std::size_t o = 300;
    const int T = f.config.history, horizon = 4;
    ForecastRequest req;
    req.horizon = horizon;
    req.history = raw.values().middleRows(static_cast<Eigen::Index>(o) - T, T);
    const auto pred = f.predictor_columns();
    req.future_predictors.resize(horizon, static_cast<Eigen::Index>(pred.size()));
    for (int r = 0; r < horizon; ++r) {
        for (std::size_t c = 0; c < pred.size(); ++c) req.future_predictors(r, static_cast<Eigen::Index>(c)) = raw.value(o + static_cast<std::size_t>(r), pred[c]);
    }
    const auto via_request = forecast_rsf(f, req);
    const std::size_t os[] = {o};
    const auto via_data = denormalize_forecast(f, forecast_normalized(f, data().data, os, horizon));
    for (int j = 0; j < horizon; ++j) {
        for (std::size_t v = 0; v < 2; ++v) EXPECT_NEAR(via_request(j, static_cast<Eigen::Index>(v)), via_data(0, static_cast<std::size_t>(j), v), 1e-9);
    }
    ForecastRequest short_req = req;
    short_req.future_predictors.resize(0, 0);
    EXPECT_THROW(forecast_rsf(f, short_req), ContractError);
    EXPECT_THROW(forecast_dmf(f, req), ContractError);
}

TEST(Inference, MissingHistoryIsDataError) {
    auto& f = trained(Formulation::rsf);
    const std::size_t o[] = {2};
    EXPECT_THROW(forecast_normalized(f, data().data, o, 2), DataError);
}
