#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "mmmf/data/csv.hpp"
#include "mmmf/data/dataset.hpp"
#include "mmmf/data/normalizer.hpp"
#include "mmmf/error.hpp"
#include "mmmf/tensor.hpp"

namespace mmmf {

using json = nlohmann::json;

inline void to_json(json& j, const Range& r) { j = json::array({r.min, r.max}); }
inline void from_json(const json& j, Range& r) {
    r.min = j.at(0).get<double>();
    r.max = j.at(1).get<double>();
}

inline void to_json(json& j, const VariableSpec& s) {
    j = json{{"name", s.name}, {"role", std::string(to_string(s.role))}, {"kind", std::string(to_string(s.kind))}};
    if (s.is_categorical()) {
        j["cardinality"] = s.cardinality;
    } else {
        j["observed_range"] = s.observed_range;
    }
}
inline void from_json(const json& j, VariableSpec& s) {
    s.name = j.at("name").get<std::string>();
    s.role = parse_role(j.at("role").get<std::string>());
    s.kind = parse_kind(j.value("kind", std::string("continuous")));
    s.cardinality = s.is_categorical() ? j.at("cardinality").get<int>() : 0;
    s.observed_range = j.contains("observed_range") ? j.at("observed_range").get<Range>() : Range{};
}

inline void to_json(json& j, const ColumnDecl& c) {
    j = json{{"name", c.name}, {"role", std::string(to_string(c.role))}, {"kind", std::string(to_string(c.kind))}};
    if (c.kind == Kind::categorical) j["cardinality"] = c.cardinality;
}
inline void from_json(const json& j, ColumnDecl& c) {
    c.name = j.at("name").get<std::string>();
    c.role = parse_role(j.at("role").get<std::string>());
    c.kind = parse_kind(j.value("kind", std::string("continuous")));
    c.cardinality = c.kind == Kind::categorical ? j.at("cardinality").get<int>() : 0;
    if (c.kind == Kind::categorical && c.cardinality < 1) {
        throw ConfigError("column '" + c.name + "': categorical cardinality must be >= 1");
    }
}

inline void to_json(json& j, const CsvSchema& s) {
    j = json{{"timestamp_column", s.timestamp_column}, {"columns", s.columns}};
}
inline void from_json(const json& j, CsvSchema& s) {
    s.timestamp_column = j.value("timestamp_column", std::string("timestamp"));
    s.columns = j.at("columns").get<std::vector<ColumnDecl>>();
}

inline void to_json(json& j, const Normalizer& n) {
    j = json{{"method", std::string(to_string(n.method))}, {"params", json::array()}};
    for (const auto& p : n.params) {
        j["params"].push_back(json{{"shift", p.shift}, {"scale", p.scale}, {"active", p.active}});
    }
}
inline void from_json(const json& j, Normalizer& n) {
    n.method = parse_norm_method(j.at("method").get<std::string>());
    n.params.clear();
    for (const auto& p : j.at("params")) {
        n.params.push_back({p.at("shift").get<double>(), p.at("scale").get<double>(), p.at("active").get<bool>()});
    }
}

template <typename S>
json matrix_to_json(const Matrix<S>& m) {
    std::vector<double> data(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i) data[static_cast<std::size_t>(i)] = static_cast<double>(m.data()[i]);
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

template <typename S>
Matrix<S> matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw DataError("matrix payload has " + std::to_string(data.size()) + " values, expected " +
                        std::to_string(rows * cols));
    }
    Matrix<S> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(data[static_cast<std::size_t>(i)].get<double>());
    return m;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

}  // namespace mmmf
