#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "mmmf/data/csv.hpp"
#include "mmmf/data/dataset.hpp"
#include "mmmf/data/normalizer.hpp"
#include "mmmf/data/transforms.hpp"
#include "mmmf/io/json.hpp"

namespace mmmf {

inline constexpr const char* kDatasetFormat = "mmmf-dataset/1";

/**
 * @brief Model-ready dataset: normalized values, the normalizer that produced
 * them, and the chronological train / validation / test boundaries.
 *
 * Observed ranges of continuous variables are expressed in normalized units and
 * fitted on the training rows only.
 */
struct PreparedData {
    TimeSeriesDataset data;
    Normalizer normalizer;
    std::size_t train_end = 0;
    std::size_t validation_end = 0;

    RowRange train() const { return {0, train_end}; }
    RowRange validation() const { return {train_end, validation_end}; }
    RowRange test() const { return {validation_end, data.num_steps()}; }
};

struct PrepareOptions {
    double test_fraction = 0.2;               ///< tail fraction held out for testing (ignored if test_start set)
    std::optional<std::string> test_start;    ///< first test timestamp (inclusive)
    double train_fraction = 0.8;              ///< share of the pre-test period used for training
    NormMethod method = NormMethod::zscore;
    std::size_t min_train_rows = 1;
};

/// Splits chronologically, fits the normalizer and observed ranges on training rows, normalizes.
inline PreparedData prepare(const TimeSeriesDataset& raw, const PrepareOptions& opt = {}) {
    require_valid(raw, "prepare");
    const std::size_t n = raw.num_steps();
    std::size_t test_begin = n;
    if (opt.test_start) {
        const auto& ts = raw.timestamps();
        test_begin = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), *opt.test_start) - ts.begin());
    } else if (opt.test_fraction > 0.0) {
        if (opt.test_fraction >= 1.0) throw ConfigError("test fraction must be < 1");
        test_begin = chrono_split(n, 1.0 - opt.test_fraction).train.end;
    }
    const auto split = chrono_split(test_begin, opt.train_fraction, opt.min_train_rows);

    PreparedData out;
    out.train_end = split.train.end;
    out.validation_end = test_begin;
    out.normalizer = fit_normalizer(raw, split.train, opt.method);
    out.data = fit_observed_ranges(out.normalizer.apply(raw), split.train);
    return out;
}

inline std::string metadata_path_for(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    p.replace_extension(".meta.json");
    return p.string();
}

/// Writes `<csv_path>` and its metadata sidecar (`<stem>.meta.json`).
inline void save_dataset(const std::string& csv_path, const TimeSeriesDataset& ds,
                         const std::optional<Normalizer>& normalizer = std::nullopt,
                         std::optional<std::pair<std::size_t, std::size_t>> split = std::nullopt) {
    {
        std::ofstream out(csv_path);
        if (!out) throw DataError("cannot write '" + csv_path + "'");
        write_dataset_csv(out, ds);
    }
    json meta{{"format", kDatasetFormat}, {"timestamp_column", "timestamp"}, {"variables", ds.specs()},
              {"num_steps", ds.num_steps()}};
    if (normalizer) meta["normalizer"] = *normalizer;
    if (split) meta["split"] = json{{"train_end", split->first}, {"validation_end", split->second}};
    write_json_file(metadata_path_for(csv_path), meta);
}

inline void save_prepared(const std::string& csv_path, const PreparedData& p) {
    save_dataset(csv_path, p.data, p.normalizer, std::pair{p.train_end, p.validation_end});
}

/// Dataset plus whatever the sidecar carried.
struct StoredDataset {
    TimeSeriesDataset data;
    std::optional<Normalizer> normalizer;
    std::optional<std::pair<std::size_t, std::size_t>> split;
};

inline StoredDataset load_dataset(const std::string& csv_path) {
    json meta;
    try {
        meta = read_json_file(metadata_path_for(csv_path));
    } catch (const ConfigError& e) {
        throw DataError(csv_path + ": metadata sidecar: " + e.what());
    }
    if (meta.value("format", std::string()) != kDatasetFormat) {
        throw DataError(csv_path + ": metadata format tag is not '" + std::string(kDatasetFormat) + "'");
    }
    const auto specs = meta.at("variables").get<std::vector<VariableSpec>>();
    CsvSchema schema;
    schema.timestamp_column = meta.value("timestamp_column", std::string("timestamp"));
    for (const auto& s : specs) schema.columns.push_back({s.name, s.role, s.kind, s.cardinality});

    StoredDataset out{load_csv(csv_path, schema).with_specs(specs), std::nullopt, std::nullopt};
    require_valid(out.data, csv_path);
    if (meta.contains("normalizer")) out.normalizer = meta.at("normalizer").get<Normalizer>();
    if (meta.contains("split")) {
        out.split = std::pair{meta["split"].at("train_end").get<std::size_t>(),
                              meta["split"].at("validation_end").get<std::size_t>()};
    }
    return out;
}

inline PreparedData load_prepared(const std::string& csv_path) {
    auto stored = load_dataset(csv_path);
    if (!stored.normalizer || !stored.split) {
        throw DataError(csv_path + ": metadata lacks normalizer or split boundaries; run prepare-data first");
    }
    PreparedData p{std::move(stored.data), *stored.normalizer, stored.split->first, stored.split->second};
    if (p.train_end > p.validation_end || p.validation_end > p.data.num_steps()) {
        throw DataError(csv_path + ": split boundaries out of range");
    }
    return p;
}

}  // namespace mmmf
