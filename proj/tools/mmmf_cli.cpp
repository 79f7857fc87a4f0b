#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mmmf/data/csv.hpp"
#include "mmmf/data/pipeline.hpp"
#include "mmmf/data/transforms.hpp"
#include "mmmf/eval/evaluate.hpp"
#include "mmmf/harness/experiment.hpp"
#include "mmmf/io/checkpoint.hpp"
#include "mmmf/runtime.hpp"
#include "mmmf/synthetic.hpp"
#include "mmmf/train/trainer.hpp"

namespace {

using namespace mmmf;
namespace fs = std::filesystem;

enum Exit { ok = 0, config_error = 1, data_error = 2, divergence = 3, partial = 4 };

/// Flags shared by every subcommand.
struct Common {
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string config;

    void attach(CLI::App* app, bool out_required = false) {
        app->add_option("--seed", seed, "Root random seed");
        auto* o = app->add_option("--out", out, "Output path");
        if (out_required) o->required();
        app->add_option("--config", config, "JSON file with defaults for this command")->check(CLI::ExistingFile);
    }

    json load() const { return config.empty() ? json::object() : read_json_file(config); }
};

void ensure_parent(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::vector<std::pair<std::string, double>> read_monthly(const std::string& path) {
    const auto table = csv::read_file(path);
    if (table.header.size() < 2) throw DataError(path + ": expected columns month,value");
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        double v = 0.0;
        if (!csv::parse_double(table.rows[i][1], v)) {
            throw DataError(path + ": line " + std::to_string(table.lines[i]) + ": unparseable value");
        }
        out.emplace_back(csv::trim(table.rows[i][0]), v);
    }
    return out;
}

// prepare-data ---------------------------------------------------------------

struct PrepareArgs {
    Common common;
    std::string input, schema, monthly, monthly_name = "monthly";
    bool daily_max = false, calendar = false;
    double test_fraction = 0.2, train_fraction = 0.8;
    std::string test_start, normalization = "zscore";
};

int run_prepare(const PrepareArgs& a) {
    const json cfg = a.common.load();
    CsvSchema schema = a.schema.empty() ? cfg.at("schema").get<CsvSchema>() : read_json_file(a.schema).get<CsvSchema>();
    auto ds = load_csv(a.input, schema);
    if (a.daily_max || cfg.value("daily_max", false)) ds = downsample_daily_max(ds);
    if (a.calendar || cfg.value("calendar", false)) ds = derive_calendar(ds);
    if (!a.monthly.empty()) ds = broadcast_monthly(ds, read_monthly(a.monthly), a.monthly_name);
    PrepareOptions opt = cfg.contains("prepare") ? cfg.at("prepare").get<PrepareOptions>() : PrepareOptions{};
    opt.test_fraction = a.test_fraction;
    opt.train_fraction = a.train_fraction;
    opt.method = parse_norm_method(a.normalization);
    if (!a.test_start.empty()) opt.test_start = a.test_start;
    const auto p = prepare(ds, opt);
    ensure_parent(a.common.out);
    save_prepared(a.common.out, p);
    std::cout << "wrote " << a.common.out << ": " << p.data.num_steps() << " rows, " << p.data.num_variables()
              << " variables, train " << p.train().size() << ", validation " << p.validation().size() << ", test "
              << p.test().size() << '\n';
    return ok;
}

// generate-synthetic ---------------------------------------------------------

struct SynthArgs {
    Common common;
    std::optional<std::size_t> steps;
    std::optional<int> forecast_vars, period;
    std::optional<double> future_weight, ar, noise;
};

int run_synthetic(const SynthArgs& a) {
    json cfg = a.common.load();
    if (cfg.contains("synthetic")) cfg = cfg.at("synthetic");
    SyntheticConfig sc = cfg.get<SyntheticConfig>();
    if (a.steps) sc.num_steps = *a.steps;
    if (a.forecast_vars) sc.num_forecast = *a.forecast_vars;
    if (a.period) sc.period = *a.period;
    if (a.future_weight) sc.future_weight = *a.future_weight;
    if (a.ar) sc.ar_coefficient = *a.ar;
    if (a.noise) sc.noise_std = *a.noise;
    if (a.common.seed) sc.seed = *a.common.seed;
    const auto ds = generate(sc);
    ensure_parent(a.common.out);
    save_dataset(a.common.out, ds);
    std::cout << "wrote " << a.common.out << ": " << ds.num_steps() << " rows, " << ds.num_variables() << " variables\n";
    return ok;
}

// train ------------------------------------------------------------------------

struct TrainArgs {
    Common common;
    std::string data, formulation, model, metrics;
    std::optional<int> history, k, max_mask, epochs, batch_size, hidden;
    std::optional<double> learning_rate, clip_norm;
    bool keep_best = false, quiet = false;
};

int run_train(const TrainArgs& a) {
    const json cfg = a.common.load();
    nn::HyperParams hp = cfg.contains("hyper_params") ? cfg.at("hyper_params").get<nn::HyperParams>() : nn::HyperParams{};
    TrainConfig tc = cfg.contains("train") ? cfg.at("train").get<TrainConfig>() : TrainConfig{};
    if (!a.formulation.empty()) {
        const auto m = harness::parse_method(a.formulation);
        tc.formulation = m.formulation;
        if (m.max_mask_length > 0) tc.max_mask_length = m.max_mask_length;
    }
    if (!a.model.empty()) hp.architecture = nn::parse_architecture(a.model);
    if (tc.formulation == Formulation::sbf) hp.architecture = nn::Architecture::feed_forward;
    if (a.history) tc.history = *a.history;
    if (a.k) tc.k = *a.k;
    if (a.max_mask) tc.max_mask_length = *a.max_mask;
    if (a.epochs) tc.epochs = *a.epochs;
    if (a.batch_size) tc.batch_size = *a.batch_size;
    if (a.learning_rate) tc.adam.learning_rate = *a.learning_rate;
    if (a.clip_norm) tc.clip_norm = *a.clip_norm;
    if (a.keep_best) tc.keep_best_validation = true;
    if (a.common.seed) tc.seed = *a.common.seed;
    if (a.hidden) {
        hp.recurrent.hidden = *a.hidden;
        hp.temporal_conv.channels = *a.hidden;
        hp.feed_forward.hidden = *a.hidden;
    }
    tc.validate();
    hp.validate();

    const auto data = harness::resolve_dataset({a.data, std::nullopt, {}});
    auto model = make_model<float>(hp, data.data.specs(), tc.formulation, tc.seed);
    TrainHooks hooks;
    if (!a.quiet) {
        hooks.on_epoch = [](const EpochRecord& r) {
            std::cout << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss << " (" << r.wall_seconds
                      << " s)\n";
        };
    }
    const auto f = train<float>(std::move(model), data, tc, hooks);
    ensure_parent(a.common.out);
    save_checkpoint(a.common.out, f);
    const std::string metrics = a.metrics.empty() ? fs::path(a.common.out).replace_extension(".metrics.csv").string() : a.metrics;
    std::ofstream m(metrics);
    if (!m) throw DataError("cannot write '" + metrics + "'");
    write_metrics_csv(m, f.history);
    std::cout << "wrote " << a.common.out << " and " << metrics << '\n';
    return ok;
}

// evaluate ---------------------------------------------------------------------

struct EvalArgs {
    Common common;
    std::string data, experiment, method, metric = "mse";
    std::vector<std::string> checkpoints;
    std::optional<int> horizon, repeats, mask_fills;
    std::optional<std::size_t> stride, timing_batch;
};

int run_evaluate(const EvalArgs& a) {
    if (!a.experiment.empty()) {
        const auto manifest = read_json_file((fs::path(a.experiment) / "experiment.json").string());
        auto cfg = harness::experiment_from_json(manifest.at("config"));
        cfg.output_dir = a.common.out.empty() ? a.experiment : a.common.out;
        const auto data = load_prepared((fs::path(a.experiment) / "data.csv").string());
        if (cfg.output_dir != a.experiment) {
            // checkpoints stay where they are; reports go to the new directory
            fs::create_directories(cfg.output_dir);
            fs::copy(fs::path(a.experiment) / "cells", fs::path(cfg.output_dir) / "cells",
                     fs::copy_options::recursive | fs::copy_options::skip_existing);
        }
        harness::ExperimentResult result;
        harness::evaluate_experiment(cfg, data, result);
        for (const auto& w : result.written) std::cout << "wrote " << w << '\n';
        return ok;
    }
    if (a.data.empty() || a.checkpoints.empty()) throw ConfigError("evaluate needs --data and --checkpoint, or --experiment");
    const json cfg = a.common.load();
    const auto data = harness::resolve_dataset({a.data, std::nullopt, {}});
    std::vector<TrainedForecaster<float>> loaded;
    for (const auto& c : a.checkpoints) loaded.push_back(load_checkpoint<float>(c));
    std::vector<TrainedForecaster<float>*> ptrs;
    for (auto& f : loaded) ptrs.push_back(&f);
    EvalOptions eo;
    eo.horizon = a.horizon.value_or(cfg.value("horizon", 0));
    eo.metric = parse_metric(cfg.value("metric", a.metric));
    eo.timing_repeats = a.repeats.value_or(cfg.value("timing_repeats", 100));
    eo.timing_batch = a.timing_batch.value_or(cfg.value("timing_batch", std::size_t{1}));
    eo.stride = a.stride.value_or(cfg.value("stride", std::size_t{1}));
    eo.inference.mask_fills = a.mask_fills.value_or(cfg.value("mask_fills", 1));
    if (a.common.seed) eo.inference.mask_seed = *a.common.seed;
    const auto rep = evaluate(ptrs, data, eo, a.method);
    write_summary(std::cout, {rep});
    if (!a.common.out.empty()) {
        ensure_parent(a.common.out);
        std::ofstream out(a.common.out);
        if (!out) throw DataError("cannot write '" + a.common.out + "'");
        write_report_csv(out, {rep});
        std::cout << "wrote " << a.common.out << '\n';
    }
    return ok;
}

// compare ----------------------------------------------------------------------

struct CompareArgs {
    Common common;
    std::vector<std::string> reports, paired, labels;
    int step = 0;
    std::string metric, variable = "all";
    std::optional<int> parallelism;
    bool quiet = false;
};

int run_compare(const CompareArgs& a) {
    if (a.reports.empty()) {
        if (a.common.config.empty()) throw ConfigError("compare needs --config (experiment) or --reports");
        auto cfg = harness::load_experiment_config(a.common.config);
        if (!a.common.out.empty()) cfg.output_dir = a.common.out;
        if (a.common.seed) cfg.seeds = {*a.common.seed};
        if (a.parallelism) cfg.parallelism = *a.parallelism;
        harness::Logger log;
        if (!a.quiet) log = [](const std::string& s) { std::cout << s << std::endl; };
        const auto result = harness::run_experiment(cfg, log);
        for (const auto& w : result.written) {
            if (fs::path(w).filename().string().rfind("table_h", 0) == 0 && fs::path(w).extension() == ".txt") {
                std::ifstream in(w);
                std::cout << '\n' << w << '\n' << in.rdbuf();
            }
        }
        if (result.failures() > 0) {
            std::cerr << result.failures() << " of " << result.cells.size() << " cells failed\n";
            return partial;
        }
        return ok;
    }
    auto load = [](const std::vector<std::string>& paths) {
        std::vector<EvalRow> rows;
        for (const auto& p : paths) {
            const auto r = read_report_csv(p);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        return rows;
    };
    harness::TableOptions opt{a.step, a.variable, a.metric};
    std::optional<std::vector<EvalRow>> paired;
    if (!a.paired.empty()) paired = load(a.paired);
    const auto table = harness::build_comparison(load(a.reports), opt, paired, a.labels);
    harness::write_table_text(std::cout, table);
    if (!a.common.out.empty()) {
        ensure_parent(a.common.out);
        std::ofstream out(a.common.out);
        if (!out) throw DataError("cannot write '" + a.common.out + "'");
        harness::write_table_csv(out, table);
    }
    return ok;
}

// plot ---------------------------------------------------------------------------

struct PlotArgs {
    Common common;
    std::vector<std::string> reports;
    std::string metric;
};

int run_plot(const PlotArgs& a) {
    std::vector<EvalRow> rows;
    for (const auto& p : a.reports) {
        const auto r = read_report_csv(p);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    const json cfg = a.common.load();
    const std::string metric = a.metric.empty() ? cfg.value("metric", std::string()) : a.metric;
    for (const auto& w : harness::plot_horizon_curves(rows, a.common.out.empty() ? "." : a.common.out, metric)) {
        std::cout << "wrote " << w << '\n';
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    mmmf::tune_allocator();
    CLI::App app{"Multi-step multivariate forecasting with known future predictors"};
    app.require_subcommand(1);

    PrepareArgs pa;
    auto* prep = app.add_subcommand("prepare-data", "Ingest a CSV, derive features, split and normalize");
    pa.common.attach(prep, true);
    prep->add_option("--input", pa.input, "Raw CSV")->required()->check(CLI::ExistingFile);
    prep->add_option("--schema", pa.schema, "JSON column schema")->check(CLI::ExistingFile);
    prep->add_flag("--daily-max", pa.daily_max, "Downsample sub-daily rows to the daily maximum");
    prep->add_flag("--calendar", pa.calendar, "Add month, day-of-month and day-of-week predictors");
    prep->add_option("--monthly", pa.monthly, "CSV of month,value to broadcast onto every row")->check(CLI::ExistingFile);
    prep->add_option("--monthly-name", pa.monthly_name, "Name of the broadcast predictor");
    prep->add_option("--test-fraction", pa.test_fraction, "Tail fraction held out for testing");
    prep->add_option("--test-start", pa.test_start, "First test timestamp (overrides --test-fraction)");
    prep->add_option("--train-fraction", pa.train_fraction, "Training share of the pre-test period");
    prep->add_option("--normalization", pa.normalization, "zscore or minmax");

    SynthArgs sa;
    auto* syn = app.add_subcommand("generate-synthetic", "Write a synthetic dataset with known future structure");
    sa.common.attach(syn, true);
    syn->add_option("--steps", sa.steps, "Number of rows");
    syn->add_option("--forecast-vars", sa.forecast_vars, "Number of forecast variables");
    syn->add_option("--future-weight", sa.future_weight, "Weight of the predictor-driven term, in [0, 1]");
    syn->add_option("--ar", sa.ar, "Autoregressive coefficient, in (-1, 1)");
    syn->add_option("--noise", sa.noise, "Noise standard deviation");
    syn->add_option("--period", sa.period, "Seasonal period");

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Train one model with one formulation");
    ta.common.attach(tr, true);
    tr->add_option("--data", ta.data, "Dataset CSV with metadata sidecar")->required()->check(CLI::ExistingFile);
    tr->add_option("--formulation", ta.formulation, "mmmf, rsf, dmf, sbf or mmmf-<n>s");
    tr->add_option("--model", ta.model, "recurrent, temporal-conv, attention-encoder or feed-forward");
    tr->add_option("--history", ta.history, "Past steps T");
    tr->add_option("--k", ta.k, "Forecast steps minus one");
    tr->add_option("--max-mask-length", ta.max_mask, "Largest mask length (MMMF)");
    tr->add_option("--epochs", ta.epochs, "Training epochs");
    tr->add_option("--batch-size", ta.batch_size, "Mini-batch size");
    tr->add_option("--learning-rate", ta.learning_rate, "Adam learning rate");
    tr->add_option("--hidden", ta.hidden, "Hidden width of the recurrent, convolutional and feed-forward models");
    tr->add_option("--clip-norm", ta.clip_norm, "Gradient norm clip (0 disables)");
    tr->add_flag("--keep-best", ta.keep_best, "Keep the parameters with the lowest validation loss");
    tr->add_option("--metrics", ta.metrics, "Per-epoch metrics CSV");
    tr->add_flag("--quiet", ta.quiet, "No per-epoch output");

    EvalArgs ea;
    auto* ev = app.add_subcommand("evaluate", "Score checkpoints on the test period");
    ea.common.attach(ev);
    ev->add_option("--data", ea.data, "Dataset CSV with metadata sidecar")->check(CLI::ExistingFile);
    ev->add_option("--checkpoint", ea.checkpoints, "Checkpoint file, one per seed")->check(CLI::ExistingFile);
    ev->add_option("--experiment", ea.experiment, "Re-evaluate an experiment directory from its checkpoints")->check(CLI::ExistingDirectory);
    ev->add_option("--horizon", ea.horizon, "Forecast length");
    ev->add_option("--metric", ea.metric, "mse or mape");
    ev->add_option("--repeats", ea.repeats, "Timed inference runs");
    ev->add_option("--timing-batch", ea.timing_batch, "Forecasts per timed run");
    ev->add_option("--stride", ea.stride, "Spacing of test origins");
    ev->add_option("--mask-fills", ea.mask_fills, "MMMF: average over this many random mask fills");
    ev->add_option("--method", ea.method, "Method label in the report");

    CompareArgs ca;
    auto* cmp = app.add_subcommand("compare", "Run an experiment grid, or tabulate existing reports");
    ca.common.attach(cmp);
    cmp->add_option("--reports", ca.reports, "Report CSV files")->check(CLI::ExistingFile);
    cmp->add_option("--paired", ca.paired, "Reports of a second dataset variant")->check(CLI::ExistingFile);
    cmp->add_option("--labels", ca.labels, "Column labels in paired mode")->delimiter(',');
    cmp->add_option("--step", ca.step, "Forecast step to tabulate (0 = average over steps)");
    cmp->add_option("--metric", ca.metric, "Metric to tabulate");
    cmp->add_option("--variable", ca.variable, "Variable to tabulate");
    cmp->add_option("--parallelism", ca.parallelism, "Cells trained concurrently");
    cmp->add_flag("--quiet", ca.quiet, "No progress output");

    PlotArgs pl;
    auto* plot = app.add_subcommand("plot", "Render per-step error curves and per-variable bars as SVG");
    pl.common.attach(plot);
    plot->add_option("--reports", pl.reports, "Report CSV files")->required()->check(CLI::ExistingFile);
    plot->add_option("--metric", pl.metric, "Metric to plot");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*prep) return run_prepare(pa);
        if (*syn) return run_synthetic(sa);
        if (*tr) return run_train(ta);
        if (*ev) return run_evaluate(ea);
        if (*cmp) return run_compare(ca);
        if (*plot) return run_plot(pl);
    } catch (const mmmf::DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return divergence;
    } catch (const mmmf::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const mmmf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const mmmf::ContractError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const mmmf::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return data_error;
    }
    return ok;
}
