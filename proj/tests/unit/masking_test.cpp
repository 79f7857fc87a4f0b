#include <gtest/gtest.h>

#include <cmath>

#include "checks.hpp"
#include "mmmf/io/json.hpp"
#include "mmmf/masking.hpp"

using namespace mmmf;

namespace {

const json& reference() {
    static const json r = read_json_file(std::string(MMMF_FIXTURE_DIR) + "/reference.json");
    return r;
}

TimeSeriesDataset ramp(std::size_t rows) {
    Matrix<double> m(static_cast<Eigen::Index>(rows), 2);
    std::vector<std::string> ts;
    for (std::size_t r = 0; r < rows; ++r) {
        m(static_cast<Eigen::Index>(r), 0) = static_cast<double>(r);
        m(static_cast<Eigen::Index>(r), 1) = 100.0 + static_cast<double>(r);
        ts.push_back(std::to_string(1000 + r));
    }
    return TimeSeriesDataset({VariableSpec::continuous("x", Role::predictor), VariableSpec::continuous("y", Role::forecast, {-1, 1})},
                             m, ts);
}

}  // namespace

TEST(Windows, CountsAndStartsMatchOracle) {
    const auto& w = reference().at("windows");
    const auto ws = slide_windows(ramp(w.at("rows").get<std::size_t>()), w.at("T").get<int>(), w.at("k").get<int>() + 1,
                                  w.at("stride").get<int>());
    const auto starts = w.at("starts").get<std::vector<std::size_t>>();
    ASSERT_EQ(ws.size(), w.at("count").get<std::size_t>());
    for (std::size_t i = 0; i < ws.size(); ++i) {
        EXPECT_EQ(ws[i].origin_index, starts[i]);
        EXPECT_EQ(ws[i].length(), w.at("length").get<int>());
        EXPECT_EQ(ws[i].data(0, 0), static_cast<double>(starts[i]));
    }
}

TEST(Windows, StrideAndShortData) {
    EXPECT_EQ(slide_windows(ramp(20), 3, 2, 4).size(), 4u);
    EXPECT_THROW(slide_windows(ramp(4), 3, 2), DataError);
    EXPECT_THROW(slide_windows(ramp(20), 0, 2), ContractError);
}

TEST(Windows, PropertyCountFormula) {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const int T = std::uniform_int_distribution<int>(1, 10)(rng);
        const int h = std::uniform_int_distribution<int>(1, 10)(rng);
        const int s = std::uniform_int_distribution<int>(1, 5)(rng);
        const auto n = static_cast<std::size_t>(std::uniform_int_distribution<int>(T + h, 80)(rng));
        const auto ws = slide_windows(ramp(n), T, h, s);
        EXPECT_EQ(ws.size(), (n - static_cast<std::size_t>(T + h)) / static_cast<std::size_t>(s) + 1);
        EXPECT_LE(ws.back().origin_index + static_cast<std::size_t>(T + h), n);
    }
}

TEST(MaskSampler, LengthsStayInRange) {
    MaskSampler s(1, ramp(3).specs());
    for (int cap : {1, 2, 12, 60}) {
        for (int i = 0; i < 2000; ++i) {
            const int l = s.sample_mask_length(cap);
            ASSERT_GE(l, 1);
            ASSERT_LE(l, cap);
        }
    }
    EXPECT_THROW(s.sample_mask_length(0), ContractError);
}

TEST(MaskSampler, LengthsFollowUniformDistribution) {
    const auto& u = reference().at("mask_length_uniformity");
    const int draws = u.at("draws").get<int>();
    const int values = u.at("values").get<int>();
    const double expected = u.at("expected").get<double>();
    MaskSampler s(99, ramp(3).specs());
    std::vector<int> counts(static_cast<std::size_t>(values) + 1, 0);
    for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(s.sample_mask_length(values))];
    double chi2 = 0.0;
    for (int l = 1; l <= values; ++l) {
        const double dev = counts[static_cast<std::size_t>(l)] - expected;
        chi2 += dev * dev / expected;
    }
    EXPECT_LE(chi2, u.at("chi2_critical_999").get<double>());
    for (int l = 1; l <= values; ++l) {
        EXPECT_LE(std::abs(counts[static_cast<std::size_t>(l)] - expected), u.at("three_sigma").get<double>()) << "length " << l;
    }
}

TEST(MaskSampler, SameSeedSameDraws) {
    MaskSampler a(42, ramp(3).specs()), b(42, ramp(3).specs());
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a.sample_mask_length(60), b.sample_mask_length(60));
        EXPECT_EQ(a.sample_value(0), b.sample_value(0));
    }
}

TEST(MaskSampler, RejectsCategoricalForecastVariable) {
    EXPECT_THROW(MaskSampler(1, {VariableSpec::categorical("c", Role::forecast, 3)}), ContractError);
    EXPECT_THROW(MaskSampler(1, {VariableSpec::continuous("x", Role::predictor)}), ContractError);
}

TEST(ApplyMask, PropertySuite) {
    const auto r = mmmf::testing::run_masking_suite(300, 5);
    EXPECT_EQ(r.predictor_mismatches, 0u);
    EXPECT_EQ(r.unmasked_forecast_mismatches, 0u);
    EXPECT_EQ(r.out_of_range, 0u);
    EXPECT_EQ(r.loss_mask_errors, 0u);
    EXPECT_EQ(r.target_errors, 0u);
}

TEST(ApplyMask, FullMaskTouchesEveryFutureRow) {
    const auto ds = ramp(20);
    const auto ws = slide_windows(ds, 3, 4);
    MaskSampler s(3, ds.specs());
    const auto mb = apply_mask(std::span(ws).first(2), 4, s);
    for (std::size_t b = 0; b < 2; ++b) {
        for (int t = 3; t < 7; ++t) {
            EXPECT_TRUE(mb.loss_mask(static_cast<Eigen::Index>(b), t - 3));
            EXPECT_NE(mb.inputs(b, static_cast<std::size_t>(t), 1), ws[b].data(t, 1));
        }
    }
    EXPECT_THROW(apply_mask(std::span(ws).first(2), 5, s), ContractError);
    EXPECT_THROW(apply_mask(std::span(ws).first(2), 0, s), ContractError);
}

TEST(MaskedLoss, ExampleValue) {
    const auto& ml = reference().at("masked_loss");
    const auto p = ml.at("predictions").get<std::vector<double>>();
    const auto t = ml.at("targets").get<std::vector<double>>();
    MaskedBatch mb;
    mb.targets = Tensor3(1, p.size(), 1);
    Tensor3 pred(1, p.size(), 1);
    for (std::size_t i = 0; i < p.size(); ++i) {
        mb.targets(0, i, 0) = t[i];
        pred(0, i, 0) = p[i];
    }
    mb.mask_length = ml.at("mask_length").get<int>();
    mb.loss_mask = BoolMatrix::Constant(1, static_cast<Eigen::Index>(p.size()), true);
    EXPECT_DOUBLE_EQ(masked_loss(pred, mb), ml.at("value").get<double>());
}

TEST(MaskedLoss, IgnoresUnmaskedCells) {
    MaskedBatch mb;
    mb.targets = Tensor3(1, 3, 1);
    mb.mask_length = 1;
    mb.loss_mask = BoolMatrix::Constant(1, 3, false);
    mb.loss_mask(0, 2) = true;
    Tensor3 pred(1, 3, 1);
    pred(0, 0, 0) = 1e6;
    pred(0, 1, 0) = -1e6;
    pred(0, 2, 0) = 3.0;
    EXPECT_DOUBLE_EQ(masked_loss(pred, mb), 9.0);
    const auto g = masked_loss_gradient(pred, mb);
    EXPECT_EQ(g(0, 0, 0), 0.0);
    EXPECT_EQ(g(0, 1, 0), 0.0);
    EXPECT_DOUBLE_EQ(g(0, 2, 0), 6.0);
}

TEST(MaskedLoss, GradientVanishesOutsideMask) {
    const auto r = mmmf::testing::check_mask_locality(4, 5);
    EXPECT_GT(r.unmasked_cells, 0u);
    EXPECT_LE(r.worst_unmasked, 1e-10);
    EXPECT_LE(r.worst_tape_unmasked, 1e-10);
    EXPECT_LE(r.worst_masked_rel, 1e-4);
}
