#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mmmf/data/pipeline.hpp"
#include "mmmf/eval/metrics.hpp"
#include "mmmf/io/checkpoint.hpp"
#include "mmmf/synthetic.hpp"

namespace mmmf::harness {

/// A named training recipe; `max_mask_length` only applies to MMMF.
struct MethodSpec {
    std::string name;
    Formulation formulation = Formulation::mmmf;
    int max_mask_length = 0;

    friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

/// "mmmf", "rsf", "dmf", "sbf", or "mmmf-<n>s" for MMMF with maximum mask length n.
inline MethodSpec parse_method(const std::string& s) {
    if (s.rfind("mmmf-", 0) == 0 && s.size() > 6 && s.back() == 's') {
        const std::string n = s.substr(5, s.size() - 6);
        if (n.find_first_not_of("0123456789") != std::string::npos) throw ConfigError("unknown method '" + s + "'");
        return {s, Formulation::mmmf, std::stoi(n)};
    }
    return {s, parse_formulation(s), 0};
}

struct DatasetSource {
    std::optional<std::string> path;           ///< CSV with metadata sidecar
    std::optional<SyntheticConfig> synthetic;  ///< generated when no path is given
    PrepareOptions prepare;
};

struct EvalSettings {
    std::vector<int> horizons;  ///< forecast lengths; empty means {k + 1}
    Metric metric = Metric::mse;
    int timing_repeats = 100;
    std::size_t timing_batch = 1;
    std::size_t stride = 1;
    int mask_fills = 1;
};

/**
 * @brief Everything one comparison run needs.
 *
 * The grid is methods x base models, except that SBF pairs only with the
 * feed-forward model and the feed-forward model only with SBF. Every cell
 * shares `hyper_params` and `train`, apart from architecture, formulation,
 * mask cap and seed.
 */
struct ExperimentConfig {
    DatasetSource dataset;
    std::vector<MethodSpec> methods;
    std::vector<nn::Architecture> base_models;
    nn::HyperParams hyper_params;
    TrainConfig train;
    std::vector<std::uint64_t> seeds{0};
    EvalSettings eval;
    std::string output_dir = "experiment";
    int parallelism = 1;

    void validate() const {
        if (methods.empty()) throw ConfigError("experiment lists no methods");
        if (base_models.empty()) throw ConfigError("experiment lists no base models");
        if (seeds.empty()) throw ConfigError("experiment lists no seeds");
        if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
        if (!dataset.path && !dataset.synthetic) throw ConfigError("experiment needs a dataset path or a synthetic section");
        for (std::size_t i = 0; i < methods.size(); ++i) {
            for (std::size_t j = i + 1; j < methods.size(); ++j) {
                if (methods[i].name == methods[j].name) throw ConfigError("duplicate method '" + methods[i].name + "'");
            }
            TrainConfig c = train;
            c.formulation = methods[i].formulation;
            c.max_mask_length = methods[i].max_mask_length;
            c.validate();
        }
        for (auto a : base_models) {
            nn::HyperParams hp = hyper_params;
            hp.architecture = a;
            hp.validate();
        }
        for (int h : eval.horizons) {
            if (h < 1 || h > train.horizon()) {
                throw ConfigError("evaluation horizon " + std::to_string(h) + " outside [1, " + std::to_string(train.horizon()) + "]");
            }
        }
    }

    std::vector<int> horizons() const { return eval.horizons.empty() ? std::vector<int>{train.horizon()} : eval.horizons; }
};

/// One (method, base model) pair of the grid.
struct GridPair {
    MethodSpec method;
    nn::Architecture base_model;
};

inline std::vector<GridPair> grid_pairs(const ExperimentConfig& cfg) {
    std::vector<GridPair> out;
    for (const auto& m : cfg.methods) {
        if (m.formulation == Formulation::sbf) {
            out.push_back({m, nn::Architecture::feed_forward});
            continue;
        }
        for (auto a : cfg.base_models) {
            if (a != nn::Architecture::feed_forward) out.push_back({m, a});
        }
    }
    return out;
}

}  // namespace mmmf::harness

namespace mmmf {

inline void to_json(json& j, const SyntheticConfig& s) {
    j = json{{"num_steps", s.num_steps},        {"num_forecast", s.num_forecast}, {"future_weight", s.future_weight},
             {"ar_coefficient", s.ar_coefficient}, {"noise_std", s.noise_std},     {"period", s.period},
             {"seed", s.seed},                   {"burn_in", s.burn_in}};
}

inline void from_json(const json& j, SyntheticConfig& s) {
    s.num_steps = j.value("num_steps", s.num_steps);
    s.num_forecast = j.value("num_forecast", s.num_forecast);
    s.future_weight = j.value("future_weight", s.future_weight);
    s.ar_coefficient = j.value("ar_coefficient", s.ar_coefficient);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.period = j.value("period", s.period);
    s.seed = j.value("seed", s.seed);
    s.burn_in = j.value("burn_in", s.burn_in);
}

inline void to_json(json& j, const PrepareOptions& p) {
    j = json{{"test_fraction", p.test_fraction}, {"train_fraction", p.train_fraction},
             {"normalization", std::string(to_string(p.method))}, {"min_train_rows", p.min_train_rows}};
    if (p.test_start) j["test_start"] = *p.test_start;
}

inline void from_json(const json& j, PrepareOptions& p) {
    p.test_fraction = j.value("test_fraction", p.test_fraction);
    p.train_fraction = j.value("train_fraction", p.train_fraction);
    if (j.contains("normalization")) p.method = parse_norm_method(j.at("normalization").get<std::string>());
    p.min_train_rows = j.value("min_train_rows", p.min_train_rows);
    if (j.contains("test_start")) p.test_start = j.at("test_start").get<std::string>();
}

}  // namespace mmmf

namespace mmmf::harness {

inline json to_json(const ExperimentConfig& c) {
    json ds = json::object();
    if (c.dataset.path) ds["path"] = *c.dataset.path;
    if (c.dataset.synthetic) ds["synthetic"] = *c.dataset.synthetic;
    ds["prepare"] = c.dataset.prepare;
    json methods = json::array();
    for (const auto& m : c.methods) {
        methods.push_back(json{{"name", m.name}, {"formulation", std::string(to_string(m.formulation))},
                               {"max_mask_length", m.max_mask_length}});
    }
    json bases = json::array();
    for (auto a : c.base_models) bases.push_back(std::string(nn::to_string(a)));
    return json{{"dataset", ds},
                {"methods", methods},
                {"base_models", bases},
                {"hyper_params", c.hyper_params},
                {"train", c.train},
                {"seeds", c.seeds},
                {"eval",
                 {{"horizons", c.eval.horizons},
                  {"metric", std::string(to_string(c.eval.metric))},
                  {"timing_repeats", c.eval.timing_repeats},
                  {"timing_batch", c.eval.timing_batch},
                  {"stride", c.eval.stride},
                  {"mask_fills", c.eval.mask_fills}}},
                {"output_dir", c.output_dir},
                {"parallelism", c.parallelism}};
}

/// Reads an experiment description; absent keys keep their defaults.
inline ExperimentConfig experiment_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    static const std::set<std::string> known{"dataset", "methods", "base_models", "hyper_params", "train",
                                             "seeds", "eval", "output_dir", "parallelism"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown experiment config key '" + key + "'");
    }
    try {
        ExperimentConfig c;
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            if (d.contains("path")) c.dataset.path = d.at("path").get<std::string>();
            if (d.contains("synthetic")) c.dataset.synthetic = d.at("synthetic").get<SyntheticConfig>();
            if (d.contains("prepare")) c.dataset.prepare = d.at("prepare").get<PrepareOptions>();
        }
        if (j.contains("methods")) {
            for (const auto& m : j.at("methods")) {
                if (m.is_string()) {
                    c.methods.push_back(parse_method(m.get<std::string>()));
                } else {
                    MethodSpec s;
                    s.formulation = parse_formulation(m.at("formulation").get<std::string>());
                    s.name = m.value("name", std::string(to_string(s.formulation)));
                    s.max_mask_length = m.value("max_mask_length", 0);
                    c.methods.push_back(s);
                }
            }
        }
        if (j.contains("base_models")) {
            for (const auto& b : j.at("base_models")) c.base_models.push_back(nn::parse_architecture(b.get<std::string>()));
        }
        if (j.contains("hyper_params")) c.hyper_params = j.at("hyper_params").get<nn::HyperParams>();
        if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("eval")) {
            const auto& e = j.at("eval");
            c.eval.horizons = e.value("horizons", c.eval.horizons);
            if (e.contains("metric")) c.eval.metric = parse_metric(e.at("metric").get<std::string>());
            c.eval.timing_repeats = e.value("timing_repeats", c.eval.timing_repeats);
            c.eval.timing_batch = e.value("timing_batch", c.eval.timing_batch);
            c.eval.stride = e.value("stride", c.eval.stride);
            c.eval.mask_fills = e.value("mask_fills", c.eval.mask_fills);
        }
        c.output_dir = j.value("output_dir", c.output_dir);
        c.parallelism = j.value("parallelism", c.parallelism);
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    return experiment_from_json(read_json_file(path));
}

}  // namespace mmmf::harness
