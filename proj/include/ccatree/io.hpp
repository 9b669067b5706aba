#pragma once

// Serializers for library results: JSON for fixed points, witnesses and
// trajectories; CSV for grids and threshold tables; SVG heatmaps. All output
// is a pure function of its input.

#include "ccatree/dynamics.hpp"
#include "ccatree/experiments.hpp"
#include "ccatree/numerics.hpp"
#include "ccatree/structures.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

namespace ccatree {

inline ordered_json to_json(const FixedPointResult& r) {
    ordered_json j;
    j["map"] = std::string(to_string(r.params.map));
    j["d"] = r.params.d;
    j["theta"] = r.params.theta;
    j["kappa"] = r.params.kappa;
    j["y_star"] = r.y_star;
    j["iterates"] = r.iterates;
    j["residual"] = r.residual;
    j["certificate"] = r.certificate ? ordered_json(*r.certificate) : ordered_json(nullptr);
    j["classification"] = std::string(to_string(r.classification));
    j["tol"] = r.tol;
    return j;
}

// Witness as node ids, parent links and initial colors (BFS order).
inline ordered_json to_json(const WitnessSubtree& w, const Coloring& initial) {
    ordered_json j;
    j["depth"] = w.depth;
    j["size"] = w.size();
    j["kappa"] = initial.kappa;
    ordered_json nodes = ordered_json::array();
    for (std::size_t i = 0; i < w.size(); ++i) {
        ordered_json n;
        n["id"] = w.nodes[i];
        n["parent"] = w.parent[i];
        n["color"] = static_cast<int>(initial.colors[static_cast<std::size_t>(w.nodes[i])]);
        n["children"] = w.selected_children[i];
        nodes.push_back(std::move(n));
    }
    j["nodes"] = std::move(nodes);
    return j;
}

inline ordered_json to_json(const Trajectory& t) {
    ordered_json j;
    j["model"] = std::string(to_string(t.model));
    j["horizon"] = t.horizon;
    j["lightcone_valid_upto"] = t.lightcone_valid_upto;
    j["root_colors"] = t.root_colors;
    j["excited_count"] = t.excited_count;
    if (t.model == Model::ghm) {
        const auto& le = t.last_excited;
        j["last_excited"] = {{"kind", le.kind == LastExcitation::Kind::never ? "never"
                                      : le.kind == LastExcitation::Kind::at  ? "at"
                                                                             : "censored"},
                             {"time", le.time}};
    }
    return j;
}

inline std::string phase_grid_csv(const PhaseGrid& g) {
    std::ostringstream os;
    os << "map,theta,d,kappa,y_star\n";
    for (std::size_t r = 0; r < g.d_values.size(); ++r) {
        for (std::size_t c = 0; c < g.kappa_values.size(); ++c) {
            os << to_string(g.map) << ',' << g.theta << ',' << g.d_values[r] << ',' << g.kappa_values[c] << ','
               << detail::csv_number(g.at(r, c)) << '\n';
        }
    }
    return os.str();
}

struct ThresholdRow {
    int theta = 2;
    int d = 2;
    Refinement refinement = Refinement::general;
    int kappa = 3;
};

inline std::string threshold_csv(const std::vector<ThresholdRow>& rows) {
    std::ostringstream os;
    os << "theta,d,refinement,min_kappa\n";
    for (const auto& r : rows) os << r.theta << ',' << r.d << ',' << to_string(r.refinement) << ',' << r.kappa << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// SVG heatmap

struct Rgb {
    int r, g, b;
};

// 256-step ramp, piecewise linear through five anchors (dark purple -> yellow).
inline constexpr std::array<std::pair<int, Rgb>, 5> kRampAnchors{{
    {0, {0x44, 0x01, 0x54}},
    {64, {0x3b, 0x52, 0x8b}},
    {128, {0x21, 0x91, 0x8c}},
    {192, {0x5e, 0xc9, 0x62}},
    {255, {0xfd, 0xe7, 0x25}},
}};

inline Rgb ramp_color(int index) {
    index = std::clamp(index, 0, 255);
    for (std::size_t a = 1; a < kRampAnchors.size(); ++a) {
        const auto [i1, c1] = kRampAnchors[a];
        if (index > i1) continue;
        const auto [i0, c0] = kRampAnchors[a - 1];
        const int span = i1 - i0, off = index - i0;
        return {c0.r + (c1.r - c0.r) * off / span, c0.g + (c1.g - c0.g) * off / span,
                c0.b + (c1.b - c0.b) * off / span};
    }
    return kRampAnchors.back().second;
}

inline int ramp_index(double y) {
    if (!(y > 0.0)) return 0;
    return std::min(255, static_cast<int>(std::floor(y * 256.0)));
}

inline std::string svg_heatmap(const PhaseGrid& g) {
    constexpr int cell = 10, left = 40, top = 30;
    const int cols = static_cast<int>(g.kappa_values.size());
    const int rows = static_cast<int>(g.d_values.size());
    const int width = left + cols * cell + 10;
    const int height = top + rows * cell + 10;
    char buf[256];
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<!-- smallest fixed point y* of " << to_string(g.map) << ", theta=" << g.theta << "; rows d="
       << g.d_values.front() << ".." << g.d_values.back() << " (top to bottom), columns kappa="
       << g.kappa_values.front() << ".." << g.kappa_values.back() << " (left to right) -->\n";
    os << "<!-- color ramp: index = min(255, floor(256*y*)), 256 steps, piecewise linear through";
    for (const auto& [i, c] : kRampAnchors) {
        std::snprintf(buf, sizeof buf, " %d:#%02x%02x%02x", i, c.r, c.g, c.b);
        os << buf;
    }
    os << " -->\n";
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                  width, height, width, height);
    os << buf;
    os << "<text x=\"" << left << "\" y=\"14\" font-size=\"10\" font-family=\"monospace\">" << to_string(g.map)
       << " theta=" << g.theta << " (x: kappa, y: d)</text>\n";
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double y = g.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
            const auto col = ramp_color(ramp_index(y));
            std::snprintf(buf, sizeof buf,
                          "<!-- d=%d kappa=%d y=%.9g -->\n<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                          "fill=\"#%02x%02x%02x\"/>\n",
                          g.d_values[static_cast<std::size_t>(r)], g.kappa_values[static_cast<std::size_t>(c)], y,
                          left + c * cell, top + r * cell, cell, cell, col.r, col.g, col.b);
            os << buf;
        }
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace ccatree
