#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mmmf/eval/evaluate.hpp"
#include "mmmf/harness/config.hpp"
#include "mmmf/harness/plot.hpp"
#include "mmmf/harness/table.hpp"
#include "mmmf/train/trainer.hpp"

namespace mmmf::harness {

namespace fs = std::filesystem;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// One (method, base model, seed) training run.
struct CellSpec {
    MethodSpec method;
    nn::Architecture base_model = nn::Architecture::recurrent;
    nn::HyperParams hyper_params;
    TrainConfig train;
    std::string id;   ///< hash of the resolved cell description
    fs::path dir;

    fs::path checkpoint() const { return dir / "checkpoint.json"; }
};

enum class CellStatus { trained, reused, failed };

struct CellOutcome {
    CellSpec spec;
    CellStatus status = CellStatus::failed;
    std::string error;
    bool diverged = false;
};

struct ExperimentResult {
    std::vector<CellOutcome> cells;
    std::vector<EvalReport> reports;  ///< every (pair, horizon) with at least one checkpoint
    std::vector<std::string> written; ///< report, table and plot files

    std::size_t failures() const {
        std::size_t n = 0;
        for (const auto& c : cells) n += c.status == CellStatus::failed ? 1 : 0;
        return n;
    }
};

using Logger = std::function<void(const std::string&)>;

/// Loads the configured dataset; prepares it unless the sidecar already carries a split.
inline PreparedData resolve_dataset(const DatasetSource& src) {
    if (src.path) {
        auto stored = load_dataset(*src.path);
        if (stored.normalizer && stored.split) return load_prepared(*src.path);
        return prepare(stored.data, src.prepare);
    }
    if (!src.synthetic) throw ConfigError("dataset source is empty");
    return prepare(generate(*src.synthetic), src.prepare);
}

/// Hash input describing the dataset contents.
inline std::string dataset_fingerprint(const PreparedData& data) {
    std::ostringstream s;
    write_dataset_csv(s, data.data);
    s << json(data.normalizer).dump() << json(data.data.specs()).dump() << data.train_end << ',' << data.validation_end;
    return hex16(fnv1a64(s.str()));
}

/// Resolved cells of the grid; directory names hash the resolved cell configuration and seed.
inline std::vector<CellSpec> resolve_cells(const ExperimentConfig& cfg, const std::string& fingerprint) {
    std::vector<CellSpec> out;
    for (const auto& pair : grid_pairs(cfg)) {
        for (std::uint64_t seed : cfg.seeds) {
            CellSpec c;
            c.method = pair.method;
            c.base_model = pair.base_model;
            c.hyper_params = cfg.hyper_params;
            c.hyper_params.architecture = pair.base_model;
            c.train = cfg.train;
            c.train.formulation = pair.method.formulation;
            c.train.max_mask_length = pair.method.max_mask_length;
            c.train.seed = seed;
            const json desc{{"method", pair.method.name}, {"hyper_params", c.hyper_params}, {"train", c.train}, {"data", fingerprint}};
            c.id = hex16(fnv1a64(desc.dump()));
            c.dir = fs::path(cfg.output_dir) / "cells" /
                    (pair.method.name + "-" + std::string(nn::to_string(pair.base_model)) + "-s" + std::to_string(seed) + "-" + c.id);
            out.push_back(std::move(c));
        }
    }
    return out;
}

/// Trains one cell and writes checkpoint.json, metrics.csv and cell.json into its directory.
inline void train_cell(const CellSpec& c, const PreparedData& data) {
    fs::create_directories(c.dir);
    auto model = make_model<float>(c.hyper_params, data.data.specs(), c.train.formulation, c.train.seed);
    auto f = train<float>(std::move(model), data, c.train);
    {
        std::ofstream m(c.dir / "metrics.csv");
        write_metrics_csv(m, f.history);
    }
    write_json_file((c.dir / "cell.json").string(),
                    json{{"method", c.method.name}, {"base_model", std::string(nn::to_string(c.base_model))}, {"id", c.id},
                         {"hyper_params", c.hyper_params}, {"train", c.train}});
    const auto tmp = c.dir / "checkpoint.json.tmp";
    save_checkpoint(tmp.string(), f);
    fs::rename(tmp, c.checkpoint());
}

namespace detail {

inline void write_text(const fs::path& p, const std::string& body, std::vector<std::string>& written) {
    std::ofstream out(p);
    if (!out) throw DataError("cannot write '" + p.string() + "'");
    out << body;
    written.push_back(p.string());
}

}  // namespace detail

/**
 * @brief Evaluates every grid pair from the checkpoints present in the
 * experiment directory and writes reports, tables and plots per horizon.
 */
inline void evaluate_experiment(const ExperimentConfig& cfg, const PreparedData& data, ExperimentResult& result,
                                const Logger& log = {}) {
    const fs::path out(cfg.output_dir);
    const auto cells = resolve_cells(cfg, dataset_fingerprint(data));
    std::vector<TrainConfig> configs;
    for (const auto& c : cells) configs.push_back(c.train);

    for (int horizon : cfg.horizons()) {
        std::vector<EvalReport> reports;
        const auto origins = common_test_origins(data, configs, horizon, cfg.eval.stride);
        for (const auto& pair : grid_pairs(cfg)) {
            std::vector<TrainedForecaster<float>> loaded;
            for (const auto& c : cells) {
                if (c.method.name != pair.method.name || c.base_model != pair.base_model) continue;
                if (!fs::exists(c.checkpoint())) continue;
                loaded.push_back(load_checkpoint<float>(c.checkpoint().string()));
            }
            if (loaded.empty()) {
                if (log) log("no checkpoints for " + pair.method.name + "/" + std::string(nn::to_string(pair.base_model)) + "; skipped");
                continue;
            }
            std::vector<TrainedForecaster<float>*> ptrs;
            for (auto& f : loaded) ptrs.push_back(&f);
            EvalOptions eo;
            eo.horizon = horizon;
            eo.metric = cfg.eval.metric;
            eo.origins = origins;
            eo.timing_repeats = cfg.eval.timing_repeats;
            eo.timing_batch = cfg.eval.timing_batch;
            eo.inference.mask_fills = cfg.eval.mask_fills;
            reports.push_back(evaluate(ptrs, data, eo, pair.method.name, std::string(nn::to_string(pair.base_model))));
        }
        if (reports.empty()) continue;
        const std::string tag = "_h" + std::to_string(horizon);
        std::ostringstream errors, timing, summary, table_txt, table_csv;
        write_report_csv(errors, reports, ReportRows::errors);
        write_report_csv(timing, reports, ReportRows::timing);
        write_summary(summary, reports);
        std::vector<EvalRow> rows;
        for (const auto& r : reports) {
            const auto rr = r.rows();
            rows.insert(rows.end(), rr.begin(), rr.end());
        }
        const auto table = build_comparison(rows);
        write_table_text(table_txt, table);
        write_table_csv(table_csv, table);
        detail::write_text(out / ("reports" + tag + ".csv"), errors.str(), result.written);
        detail::write_text(out / ("timing" + tag + ".csv"), timing.str(), result.written);
        detail::write_text(out / ("summary" + tag + ".txt"), summary.str(), result.written);
        detail::write_text(out / ("table" + tag + ".txt"), table_txt.str(), result.written);
        detail::write_text(out / ("table" + tag + ".csv"), table_csv.str(), result.written);
        const auto plots = plot_horizon_curves(rows, (out / ("plots" + tag)).string());
        result.written.insert(result.written.end(), plots.begin(), plots.end());
        result.reports.insert(result.reports.end(), reports.begin(), reports.end());
    }
}

/**
 * @brief Trains every missing cell, then evaluates the whole grid.
 *
 * Cells whose checkpoint already exists are reused. A failing cell is
 * recorded (error.txt in its directory and the manifest) and the remaining
 * cells still run.
 */
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const Logger& log = {}) {
    cfg.validate();
    const fs::path out(cfg.output_dir);
    fs::create_directories(out / "cells");
    const PreparedData data = resolve_dataset(cfg.dataset);
    save_prepared((out / "data.csv").string(), data);
    const auto cells = resolve_cells(cfg, dataset_fingerprint(data));

    ExperimentResult result;
    result.cells.resize(cells.size());
    std::mutex log_mutex;
    auto say = [&](const std::string& msg) {
        if (!log) return;
        std::lock_guard lock(log_mutex);
        log(msg);
    };
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const auto& c = cells[i];
            auto& outcome = result.cells[i];
            outcome.spec = c;
            const std::string name = c.dir.filename().string();
            if (fs::exists(c.checkpoint())) {
                outcome.status = CellStatus::reused;
                say("reuse " + name);
                continue;
            }
            try {
                say("train " + name);
                fs::remove(c.dir / "error.txt");
                train_cell(c, data);
                outcome.status = CellStatus::trained;
            } catch (const std::exception& e) {
                outcome.status = CellStatus::failed;
                outcome.error = e.what();
                outcome.diverged = dynamic_cast<const DivergenceError*>(&e) != nullptr;
                fs::create_directories(c.dir);
                std::ofstream(c.dir / "error.txt") << e.what() << '\n';
                say("FAILED " + name + ": " + e.what());
            }
        }
    };
    const int threads = std::min<int>(cfg.parallelism, static_cast<int>(cells.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    json manifest{{"config", to_json(cfg)}, {"cells", json::array()}};
    for (const auto& o : result.cells) {
        json cj{{"dir", o.spec.dir.filename().string()}, {"method", o.spec.method.name},
                {"base_model", std::string(nn::to_string(o.spec.base_model))}, {"seed", o.spec.train.seed},
                {"status", o.status == CellStatus::trained ? "trained" : o.status == CellStatus::reused ? "reused" : "failed"}};
        if (!o.error.empty()) cj["error"] = o.error;
        manifest["cells"].push_back(std::move(cj));
    }
    write_json_file((out / "experiment.json").string(), manifest);

    evaluate_experiment(cfg, data, result, say);
    return result;
}

}  // namespace mmmf::harness
