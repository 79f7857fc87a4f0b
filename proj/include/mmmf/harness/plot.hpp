#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mmmf/eval/evaluate.hpp"

namespace mmmf::harness {

struct Curve {
    std::string method;
    std::vector<double> mean;  ///< index j is forecast step j + 1
    std::vector<double> std;
};

struct Panel {
    std::string base_model;
    std::vector<Curve> curves;
};

struct BarGroup {
    std::string variable;
    std::vector<std::string> labels;  ///< "base_model/method"
    std::vector<double> mean;
    std::vector<double> std;
};

namespace detail {

inline int max_step(const std::vector<EvalRow>& rows, const std::string& base, const std::string& method, const std::string& metric) {
    int h = 0;
    for (const auto& r : rows) {
        if (r.base_model == base && r.method == method && r.metric == metric) h = std::max(h, r.horizon);
    }
    return h;
}

}  // namespace detail

/**
 * @brief Per-step error curves (variable "all"), one panel per base model.
 *
 * Throws ContractError when the reports cover different numbers of steps.
 */
inline std::vector<Panel> horizon_panels(const std::vector<EvalRow>& rows, const std::string& metric) {
    std::vector<Panel> panels;
    int horizon = -1;
    for (const auto& r : rows) {
        if (r.metric != metric || r.variable != "all" || r.horizon < 1) continue;
        auto pit = std::find_if(panels.begin(), panels.end(), [&](const Panel& p) { return p.base_model == r.base_model; });
        if (pit == panels.end()) {
            panels.push_back({r.base_model, {}});
            pit = panels.end() - 1;
        }
        auto cit = std::find_if(pit->curves.begin(), pit->curves.end(), [&](const Curve& c) { return c.method == r.method; });
        if (cit == pit->curves.end()) {
            const int h = detail::max_step(rows, r.base_model, r.method, metric);
            if (horizon < 0) horizon = h;
            if (h != horizon) {
                throw ContractError("plot: reports have mismatched horizons (" + std::to_string(horizon) + " vs " +
                                    std::to_string(h) + " for " + r.base_model + "/" + r.method + ")");
            }
            pit->curves.push_back({r.method, std::vector<double>(static_cast<std::size_t>(h), std::nan("")),
                                   std::vector<double>(static_cast<std::size_t>(h), 0.0)});
            cit = pit->curves.end() - 1;
        }
        cit->mean[static_cast<std::size_t>(r.horizon - 1)] = r.mean;
        cit->std[static_cast<std::size_t>(r.horizon - 1)] = r.std;
    }
    return panels;
}

/// Step-1 error per forecast variable, one bar per (base model, method).
inline std::vector<BarGroup> step_one_bars(const std::vector<EvalRow>& rows, const std::string& metric) {
    std::vector<BarGroup> groups;
    for (const auto& r : rows) {
        if (r.metric != metric || r.horizon != 1 || r.variable == "all") continue;
        auto git = std::find_if(groups.begin(), groups.end(), [&](const BarGroup& g) { return g.variable == r.variable; });
        if (git == groups.end()) {
            groups.push_back({r.variable, {}, {}, {}});
            git = groups.end() - 1;
        }
        git->labels.push_back(r.base_model + "/" + r.method);
        git->mean.push_back(r.mean);
        git->std.push_back(r.std);
    }
    return groups;
}

namespace detail {

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    return colors[i % 8];
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

/// Line chart with shaded +/- one standard deviation bands.
inline std::string render_horizon_svg(const std::vector<Panel>& panels, const std::string& metric) {
    using detail::num;
    const double pw = 360, ph = 260, ml = 60, mr = 20, mt = 40, mb = 50;
    const double width = static_cast<double>(std::max<std::size_t>(1, panels.size())) * pw;
    const double height = ph + 40;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const double x0 = static_cast<double>(p) * pw + ml, x1 = static_cast<double>(p + 1) * pw - mr;
        const double y0 = mt, y1 = ph - mb + mt;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        std::size_t steps = 1;
        for (const auto& c : panel.curves) {
            steps = std::max(steps, c.mean.size());
            for (std::size_t j = 0; j < c.mean.size(); ++j) {
                if (!std::isfinite(c.mean[j])) continue;
                lo = std::min(lo, c.mean[j] - c.std[j]);
                hi = std::max(hi, c.mean[j] + c.std[j]);
            }
        }
        if (!std::isfinite(lo)) lo = 0, hi = 1;
        lo = std::min(lo, 0.0);
        if (hi <= lo) hi = lo + 1;
        auto X = [&](std::size_t j) { return steps == 1 ? (x0 + x1) / 2 : x0 + (x1 - x0) * static_cast<double>(j) / static_cast<double>(steps - 1); };
        auto Y = [&](double v) { return y1 - (y1 - y0) * (v - lo) / (hi - lo); };

        s << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">"
          << detail::escape(panel.base_model) << "</text>\n";
        s << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(y1) << "\" stroke=\"black\"/>\n";
        s << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(y1) << "\" stroke=\"black\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            const double v = lo + (hi - lo) * t / 4.0;
            s << "<text x=\"" << num(x0 - 4) << "\" y=\"" << num(Y(v) + 4) << "\" text-anchor=\"end\">" << detail::tick(v) << "</text>\n";
        }
        for (std::size_t j = 0; j < steps; j += std::max<std::size_t>(1, steps / 6)) {
            s << "<text x=\"" << num(X(j)) << "\" y=\"" << num(y1 + 14) << "\" text-anchor=\"middle\">" << j + 1 << "</text>\n";
        }
        s << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(y1 + 30) << "\" text-anchor=\"middle\">forecast step</text>\n";
        s << "<text x=\"" << num(x0 - 45) << "\" y=\"" << num((y0 + y1) / 2) << "\" transform=\"rotate(-90 " << num(x0 - 45) << ' '
          << num((y0 + y1) / 2) << ")\" text-anchor=\"middle\">" << detail::escape(metric) << "</text>\n";

        for (std::size_t ci = 0; ci < panel.curves.size(); ++ci) {
            const auto& c = panel.curves[ci];
            const char* color = detail::palette(ci);
            std::string upper, lower, line;
            for (std::size_t j = 0; j < c.mean.size(); ++j) {
                if (!std::isfinite(c.mean[j])) continue;
                upper += num(X(j)) + "," + num(Y(c.mean[j] + c.std[j])) + " ";
                line += num(X(j)) + "," + num(Y(c.mean[j])) + " ";
            }
            for (std::size_t j = c.mean.size(); j-- > 0;) {
                if (!std::isfinite(c.mean[j])) continue;
                lower += num(X(j)) + "," + num(Y(c.mean[j] - c.std[j])) + " ";
            }
            s << "<polygon class=\"band\" points=\"" << upper << lower << "\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
            s << "<polyline class=\"curve\" points=\"" << line << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n";
            s << "<text x=\"" << num(x0 + 8) << "\" y=\"" << num(y0 + 12 + 13 * static_cast<double>(ci)) << "\" fill=\"" << color << "\">"
              << detail::escape(c.method) << "</text>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

/// Grouped bar chart with error whiskers.
inline std::string render_bars_svg(const std::vector<BarGroup>& groups, const std::string& metric) {
    using detail::num;
    std::size_t nbars = 0;
    for (const auto& g : groups) nbars = std::max(nbars, g.mean.size());
    const double bw = 16, gap = 24, ml = 70, mt = 30, plot_h = 240;
    const double gw = static_cast<double>(std::max<std::size_t>(1, nbars)) * bw + gap;
    const double width = ml + static_cast<double>(std::max<std::size_t>(1, groups.size())) * gw + 220;
    const double height = mt + plot_h + 50;
    double hi = 0;
    for (const auto& g : groups) {
        for (std::size_t i = 0; i < g.mean.size(); ++i) hi = std::max(hi, g.mean[i] + g.std[i]);
    }
    if (!(hi > 0)) hi = 1;
    const double y1 = mt + plot_h;
    auto Y = [&](double v) { return y1 - plot_h * v / hi; };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << num(ml) << "\" y=\"18\" font-size=\"13\">step-1 " << detail::escape(metric) << " by variable</text>\n";
    s << "<line x1=\"" << num(ml) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(width - 220) << "\" y2=\"" << num(y1) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = hi * t / 4.0;
        s << "<text x=\"" << num(ml - 4) << "\" y=\"" << num(Y(v) + 4) << "\" text-anchor=\"end\">" << detail::tick(v) << "</text>\n";
    }
    std::vector<std::string> legend;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        const double gx = ml + gap / 2 + static_cast<double>(gi) * gw;
        for (std::size_t i = 0; i < g.mean.size(); ++i) {
            auto it = std::find(legend.begin(), legend.end(), g.labels[i]);
            if (it == legend.end()) it = legend.insert(legend.end(), g.labels[i]);
            const auto color = detail::palette(static_cast<std::size_t>(it - legend.begin()));
            const double x = gx + static_cast<double>(i) * bw;
            s << "<rect class=\"bar\" x=\"" << num(x) << "\" y=\"" << num(Y(g.mean[i])) << "\" width=\"" << num(bw - 2)
              << "\" height=\"" << num(y1 - Y(g.mean[i])) << "\" fill=\"" << color << "\"/>\n";
            s << "<line x1=\"" << num(x + bw / 2 - 1) << "\" y1=\"" << num(Y(g.mean[i] - g.std[i])) << "\" x2=\"" << num(x + bw / 2 - 1)
              << "\" y2=\"" << num(Y(g.mean[i] + g.std[i])) << "\" stroke=\"black\"/>\n";
        }
        s << "<text x=\"" << num(gx + static_cast<double>(g.mean.size()) * bw / 2) << "\" y=\"" << num(y1 + 14)
          << "\" text-anchor=\"middle\">" << detail::escape(g.variable) << "</text>\n";
    }
    for (std::size_t i = 0; i < legend.size(); ++i) {
        const double y = mt + 14 * static_cast<double>(i);
        s << "<rect x=\"" << num(width - 210) << "\" y=\"" << num(y) << "\" width=\"10\" height=\"10\" fill=\"" << detail::palette(i) << "\"/>\n";
        s << "<text x=\"" << num(width - 195) << "\" y=\"" << num(y + 9) << "\">" << detail::escape(legend[i]) << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

/**
 * @brief Writes `horizon_curves.svg` and, when step-1 per-variable rows exist,
 * `step1_by_variable.svg` into `out_dir`. Returns the written paths.
 */
inline std::vector<std::string> plot_horizon_curves(const std::vector<EvalRow>& rows, const std::string& out_dir,
                                                    std::string metric = {}) {
    if (metric.empty()) {
        for (const auto& r : rows) {
            if (r.metric != "inference_seconds") {
                metric = r.metric;
                break;
            }
        }
    }
    if (metric.empty()) throw ContractError("plot: reports contain no error metric");
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> written;
    auto write = [&](const std::string& name, const std::string& body) {
        const auto path = (std::filesystem::path(out_dir) / name).string();
        std::ofstream out(path);
        if (!out) throw DataError("cannot write '" + path + "'");
        out << body;
        written.push_back(path);
    };
    write("horizon_curves.svg", render_horizon_svg(horizon_panels(rows, metric), metric));
    const auto bars = step_one_bars(rows, metric);
    if (!bars.empty()) write("step1_by_variable.svg", render_bars_svg(bars, metric));
    return written;
}

}  // namespace mmmf::harness
