#include <gtest/gtest.h>

#include "checks.hpp"
#include "mmmf/train/trainer.hpp"

using namespace mmmf;
using nn::Architecture;

namespace {

nn::HyperParams small(Architecture a) { return mmmf::testing::toy_hyper_params(a); }

TrainConfig quick(Formulation f, int epochs = 3) {
    TrainConfig c;
    c.formulation = f;
    c.history = 6;
    c.k = 3;
    c.batch_size = 32;
    c.epochs = epochs;
    c.seed = 4;
    return c;
}

TrainedForecaster<double> fit(const PreparedData& data, Architecture a, const TrainConfig& c) {
    return train(make_model<double>(small(a), data.data.specs(), c.formulation, c.seed), data, c);
}

/// x drawn uniformly, y equal to x; one predictor and one forecast variable.
PreparedData identity_data(std::size_t n) {
    Rng rng(12);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Matrix<double> m(static_cast<Eigen::Index>(n), 2);
    std::vector<std::string> ts;
    for (std::size_t i = 0; i < n; ++i) {
        m(static_cast<Eigen::Index>(i), 0) = u(rng);
        m(static_cast<Eigen::Index>(i), 1) = m(static_cast<Eigen::Index>(i), 0);
        ts.push_back(std::to_string(100000 + i));
    }
    return prepare(TimeSeriesDataset({VariableSpec::continuous("x", Role::predictor), VariableSpec::continuous("y", Role::forecast)}, m, ts));
}

std::vector<Matrix<double>> weights(const TrainedForecaster<double>& f) {
    std::vector<Matrix<double>> out;
    for (const auto* p : std::as_const(*f.model).parameters()) out.push_back(p->value);
    return out;
}

}  // namespace

TEST(TrainConfig, Defaults) {
    TrainConfig c;
    EXPECT_EQ(c.formulation, Formulation::mmmf);
    EXPECT_EQ(c.history, 30);
    EXPECT_EQ(c.k, 59);
    EXPECT_EQ(c.horizon(), 60);
    EXPECT_EQ(c.window_length(), 90);
    EXPECT_EQ(c.batch_size, 1000);
    EXPECT_EQ(c.epochs, 1000);
    EXPECT_EQ(c.adam.learning_rate, 0.001);
    EXPECT_EQ(c.mask_cap(), 60);
    EXPECT_EQ(c.dmf_input_length(), 60);
    EXPECT_NO_THROW(c.validate());
}

TEST(TrainConfig, RejectsInvalidSettings) {
    TrainConfig c;
    c.history = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.max_mask_length = 61;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.dmf_history = 10;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.adam.learning_rate = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(parse_formulation("seq2seq"), ConfigError);
    EXPECT_EQ(parse_formulation("MMMF"), Formulation::mmmf);
}

TEST(Training, LearnsIdentityMapping) {
    const auto data = identity_data(600);
    auto c = quick(Formulation::sbf, 150);
    c.adam.learning_rate = 0.01;
    const auto f = fit(data, Architecture::feed_forward, c);
    ASSERT_EQ(f.history.size(), 150u);
    EXPECT_LT(f.history.back().train_loss, 0.01 * f.history.front().train_loss);
    EXPECT_LT(f.history.back().val_loss, 0.01);
}

TEST(Training, LossDecreasesForEveryFormulation) {
    const auto data = mmmf::testing::small_prepared(3, 500, 1);
    for (auto form : {Formulation::mmmf, Formulation::rsf, Formulation::dmf}) {
        auto c = quick(form, 30);
        c.adam.learning_rate = 0.01;
        const auto f = fit(data, Architecture::recurrent, c);
        EXPECT_LT(f.history.back().train_loss, f.history.front().train_loss) << to_string(form);
        EXPECT_TRUE(std::isfinite(f.history.back().val_loss)) << to_string(form);
    }
}

TEST(Training, SameSeedIsBitIdentical) {
    const auto data = mmmf::testing::small_prepared(2, 300, 2);
    for (auto form : {Formulation::mmmf, Formulation::rsf, Formulation::dmf}) {
        for (auto a : {Architecture::recurrent, Architecture::temporal_conv, Architecture::attention_encoder}) {
            const auto c = quick(form, 2);
            const auto f1 = fit(data, a, c), f2 = fit(data, a, c);
            EXPECT_EQ(weights(f1), weights(f2)) << to_string(form) << "/" << nn::to_string(a);
            auto c2 = c;
            c2.seed = 5;
            EXPECT_NE(weights(f1), weights(fit(data, a, c2))) << to_string(form) << "/" << nn::to_string(a);
        }
    }
}

TEST(Training, SbfWithoutPredictorsIsInapplicable) {
    Matrix<double> m = Matrix<double>::Random(50, 1);
    std::vector<std::string> ts;
    for (int i = 0; i < 50; ++i) ts.push_back(std::to_string(1000 + i));
    const auto data = prepare(TimeSeriesDataset({VariableSpec::continuous("y", Role::forecast)}, m, ts));
    EXPECT_THROW(make_model<double>(small(Architecture::feed_forward), data.data.specs(), Formulation::sbf, 0), FormulationError);
    Rng rng(1);
    auto model = nn::build_model<double>(small(Architecture::feed_forward), data.data.specs(), 1, rng);
    EXPECT_THROW(train_sbf(std::move(model), data, quick(Formulation::sbf)), FormulationError);
}

TEST(Training, SbfFeedsOnlyPredictors) {
    const auto data = mmmf::testing::small_prepared(1, 200, 2);
    auto m = make_model<double>(small(Architecture::feed_forward), data.data.specs(), Formulation::sbf, 0);
    for (const auto& s : m->input_specs()) EXPECT_FALSE(s.is_forecast());
    EXPECT_EQ(m->output_width(), 2);
}

TEST(Training, ValidationMaskSchedule) {
    TrainConfig c;
    EXPECT_EQ(validation_mask_lengths(c), (std::vector<int>{1, 30, 60}));
    c.max_mask_length = 1;
    EXPECT_EQ(validation_mask_lengths(c), (std::vector<int>{1}));
    c = {};
    c.k = 0;
    EXPECT_EQ(validation_mask_lengths(c), (std::vector<int>{1}));
    c.k = 11;
    EXPECT_EQ(validation_mask_lengths(c), (std::vector<int>{1, 6, 12}));
}

TEST(Training, ValidationLossIsRepeatable) {
    const auto data = mmmf::testing::small_prepared(6, 300, 1);
    auto c = quick(Formulation::mmmf, 1);
    const auto a = fit(data, Architecture::recurrent, c);
    c.epochs = 0;
    EXPECT_TRUE(fit(data, Architecture::recurrent, c).history.empty());
    const auto b = fit(data, Architecture::recurrent, quick(Formulation::mmmf, 1));
    EXPECT_EQ(a.history[0].val_loss, b.history[0].val_loss);
}

TEST(Training, DmfWithSingleStepHorizon) {
    const auto data = mmmf::testing::small_prepared(7, 300, 1);
    auto c = quick(Formulation::dmf, 2);
    c.k = 0;
    EXPECT_EQ(c.dmf_input_length(), c.history);
    EXPECT_EQ(c.window_length(), c.history + 1);
    const auto f = fit(data, Architecture::recurrent, c);
    EXPECT_EQ(f.history.size(), 2u);
    EXPECT_TRUE(std::isfinite(f.history.back().train_loss));
}

TEST(Training, DivergenceIsReported) {
    const auto data = mmmf::testing::small_prepared(8, 300, 1);
    auto c = quick(Formulation::rsf, 20);
    c.adam.learning_rate = 1e300;
    EXPECT_THROW(fit(data, Architecture::recurrent, c), DivergenceError);
}

TEST(Training, InsufficientDataIsDataError) {
    const auto data = mmmf::testing::small_prepared(9, 40, 1);
    auto c = quick(Formulation::mmmf);
    c.history = 30;
    c.k = 20;
    EXPECT_THROW(fit(data, Architecture::recurrent, c), DataError);
}

TEST(Training, RejectsMismatchedModel) {
    const auto data = mmmf::testing::small_prepared(10, 200, 2);
    Rng rng(1);
    auto m = nn::build_model<double>(small(Architecture::recurrent), data.data.specs(), 1, rng);
    EXPECT_THROW(train_mmmf(std::move(m), data, quick(Formulation::mmmf)), ConfigError);
}

TEST(Training, EpochHookSeesEveryEpoch) {
    const auto data = mmmf::testing::small_prepared(11, 200, 1);
    int calls = 0;
    TrainHooks hooks;
    hooks.on_epoch = [&](const EpochRecord& r) { EXPECT_EQ(r.epoch, ++calls); };
    const auto c = quick(Formulation::rsf, 4);
    train(make_model<double>(small(Architecture::recurrent), data.data.specs(), c.formulation, c.seed), data, c, hooks);
    EXPECT_EQ(calls, 4);
}
