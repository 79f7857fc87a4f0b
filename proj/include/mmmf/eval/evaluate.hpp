#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mmmf/data/pipeline.hpp"
#include "mmmf/eval/inference.hpp"
#include "mmmf/eval/metrics.hpp"

namespace mmmf {

struct EvalOptions {
    int horizon = 0;                                  ///< forecast length; 0 means the trained k + 1
    Metric metric = Metric::mse;
    std::optional<std::vector<std::size_t>> origins;  ///< default: every test origin
    std::size_t stride = 1;                           ///< spacing of the default origins
    int timing_repeats = 100;                         ///< warm timed runs; 0 skips timing
    std::size_t timing_batch = 1;                     ///< forecasts per timed run
    InferenceOptions inference;
};

/// One line of the persisted report.
struct EvalRow {
    std::string method;
    std::string base_model;
    int horizon = 0;          ///< forecast step, 1-based; 0 is the average over all steps
    std::string variable;     ///< variable name or "all"
    std::string metric;
    double mean = 0.0;
    double std = 0.0;
};

/**
 * @brief Errors of one (method, base model) pair over several seeds.
 *
 * `per_seed[s](j, v)` is the error at forecast step j + 1 for variable v.
 * Aggregates use the population standard deviation across seeds.
 */
struct EvalReport {
    std::string method;
    std::string base_model;
    Metric metric = Metric::mse;
    int horizon = 0;
    std::vector<std::string> variables;
    std::vector<std::uint64_t> seeds;
    std::vector<Matrix<double>> per_seed;
    std::size_t samples = 0;
    std::optional<MeanStd> inference_seconds;
    int timing_repeats = 0;

    /// Error at 1-based `step`, averaged over variables unless `variable` is given.
    MeanStd at_step(int step, std::optional<std::size_t> variable = std::nullopt) const {
        if (step < 1 || step > horizon) throw ContractError("at_step: step outside [1, horizon]");
        std::vector<double> xs;
        for (const auto& m : per_seed) {
            xs.push_back(variable ? m(step - 1, static_cast<Eigen::Index>(*variable)) : m.row(step - 1).mean());
        }
        return mean_std(xs);
    }

    /// Error averaged over all steps and variables, then over seeds.
    MeanStd overall() const {
        std::vector<double> xs;
        for (const auto& m : per_seed) xs.push_back(m.mean());
        return mean_std(xs);
    }

    /// Per-seed value of at_step without aggregation.
    std::vector<double> seed_values(int step) const {
        std::vector<double> xs;
        for (const auto& m : per_seed) xs.push_back(m.row(step - 1).mean());
        return xs;
    }

    std::vector<EvalRow> rows() const {
        std::vector<EvalRow> out;
        const std::string metric_name(to_string(metric));
        for (std::size_t v = 0; v < variables.size(); ++v) {
            std::vector<double> xs;
            for (const auto& m : per_seed) xs.push_back(m.col(static_cast<Eigen::Index>(v)).mean());
            const auto s = mean_std(xs);
            out.push_back({method, base_model, 0, variables[v], metric_name, s.mean, s.std});
        }
        const auto all = overall();
        out.push_back({method, base_model, 0, "all", metric_name, all.mean, all.std});
        for (int j = 1; j <= horizon; ++j) {
            for (std::size_t v = 0; v < variables.size(); ++v) {
                const auto s = at_step(j, v);
                out.push_back({method, base_model, j, variables[v], metric_name, s.mean, s.std});
            }
            const auto s = at_step(j);
            out.push_back({method, base_model, j, "all", metric_name, s.mean, s.std});
        }
        if (inference_seconds) {
            out.push_back({method, base_model, horizon, "all", "inference_seconds", inference_seconds->mean,
                           inference_seconds->std});
        }
        return out;
    }
};

enum class ReportRows { all, errors, timing };

inline void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports, ReportRows which = ReportRows::all) {
    out << "method,base_model,horizon,variable,metric,mean,std\n";
    for (const auto& r : reports) {
        for (const auto& row : r.rows()) {
            const bool timing = row.metric == "inference_seconds";
            if ((which == ReportRows::errors && timing) || (which == ReportRows::timing && !timing)) continue;
            out << row.method << ',' << row.base_model << ',' << row.horizon << ',' << row.variable << ',' << row.metric
                << ',' << csv::format_double(row.mean) << ',' << csv::format_double(row.std) << '\n';
        }
    }
}

/// Reads rows written by write_report_csv.
inline std::vector<EvalRow> read_report_csv(const std::string& path) {
    const auto table = csv::read_file(path);
    const std::vector<std::string> expected{"method", "base_model", "horizon", "variable", "metric", "mean", "std"};
    if (table.header != expected) throw DataError(path + ": not a report file (unexpected header)");
    std::vector<EvalRow> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        EvalRow row{r[0], r[1], 0, r[3], r[4], 0.0, 0.0};
        double h = 0.0;
        if (!csv::parse_double(r[2], h) || !csv::parse_double(r[5], row.mean) || !csv::parse_double(r[6], row.std)) {
            throw DataError(path + ": line " + std::to_string(table.lines[i]) + ": unparseable number");
        }
        row.horizon = static_cast<int>(h);
        out.push_back(std::move(row));
    }
    return out;
}

/// Forecast origins inside the test period that every formulation in `configs` can serve.
inline std::vector<std::size_t> common_test_origins(const PreparedData& data, const std::vector<TrainConfig>& configs,
                                                    int horizon, std::size_t stride = 1) {
    int lead = 0;
    for (const auto& c : configs) {
        lead = std::max(lead, c.formulation == Formulation::mmmf ? c.history + c.horizon() - horizon : lead_steps(c));
    }
    return forecast_origins(data.test(), lead, horizon, stride);
}

/**
 * @brief Scores one forecaster per seed on the test period of `data`.
 *
 * Forecasts are denormalized before scoring. Timing covers only the forward
 * computation on already-built data; the first run is a discarded warm-up.
 */
template <typename S>
EvalReport evaluate(const std::vector<TrainedForecaster<S>*>& forecasters, const PreparedData& data,
                    const EvalOptions& opt = {}, const std::string& method = {}, const std::string& base_model = {}) {
    if (forecasters.empty()) throw ContractError("evaluate: no trained forecasters");
    auto& first = *forecasters.front();
    const int horizon = opt.horizon > 0 ? opt.horizon : first.config.horizon();
    EvalReport rep;
    rep.method = method.empty() ? std::string(to_string(first.formulation)) : method;
    rep.base_model = base_model.empty() ? std::string(nn::to_string(first.model->architecture())) : base_model;
    rep.metric = opt.metric;
    rep.horizon = horizon;
    for (std::size_t c : data.data.forecast_indices()) rep.variables.push_back(data.data.specs()[c].name);

    std::vector<std::size_t> origins;
    if (opt.origins) {
        origins = *opt.origins;
    } else {
        origins = common_test_origins(data, {first.config}, horizon, opt.stride);
    }
    if (origins.empty()) throw DataError("evaluate: the test period holds no complete forecast window");
    rep.samples = origins.size();
    const auto raw = data.normalizer.invert(data.data);
    const Tensor3 truth = forecast_truth(raw, origins, horizon);

    for (auto* f : forecasters) {
        if (!f || !f->model) throw ContractError("evaluate: missing forecaster");
        const Tensor3 pred = denormalize_forecast(*f, forecast_normalized(*f, data.data, origins, horizon, opt.inference));
        rep.per_seed.push_back(metric_by_step(opt.metric, pred, truth));
        rep.seeds.push_back(f->config.seed);
    }

    if (opt.timing_repeats > 0) {
        const std::size_t n = std::min(std::max<std::size_t>(1, opt.timing_batch), origins.size());
        const std::vector<std::size_t> timed(origins.begin(), origins.begin() + static_cast<std::ptrdiff_t>(n));
        forecast_normalized(first, data.data, timed, horizon, opt.inference);
        std::vector<double> secs;
        for (int r = 0; r < opt.timing_repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            forecast_normalized(first, data.data, timed, horizon, opt.inference);
            secs.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        rep.inference_seconds = mean_std(secs);
        rep.timing_repeats = opt.timing_repeats;
    }
    return rep;
}

/// Fixed-width text summary: one line per report with the overall error and timing.
inline void write_summary(std::ostream& out, const std::vector<EvalReport>& reports) {
    char line[256];
    std::snprintf(line, sizeof line, "%-18s %-8s %-6s %14s %12s %16s\n", "base_model", "method", "metric", "mean", "std",
                  "inference_ms");
    out << line;
    for (const auto& r : reports) {
        const auto s = r.overall();
        std::snprintf(line, sizeof line, "%-18s %-8s %-6s %14.6g %12.4g %16.4g\n", r.base_model.c_str(), r.method.c_str(),
                      std::string(to_string(r.metric)).c_str(), s.mean, s.std,
                      r.inference_seconds ? r.inference_seconds->mean * 1e3 : 0.0);
        out << line;
    }
}

}  // namespace mmmf
