#pragma once

// Versioned CSV reports and self-contained SVG plots.
//
// Every CSV starts with a "# radarpc <kind> v<N>" line followed by a header
// row. Missing values (undefined P_d, inconclusive BCD) are empty fields.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "radarpc/metrics.hpp"
#include "radarpc/nn/train.hpp"
#include "radarpc/util.hpp"

namespace radarpc::report {

inline constexpr int kCsvVersion = 1;

/// Shortest round-trippable decimal form, stable across runs.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // prefer a shorter form when it parses back exactly
    for (int p = 6; p < 17; ++p) {
        char s[32];
        std::snprintf(s, sizeof s, "%.*g", p, v);
        if (std::strtod(s, nullptr) == v) return s;
    }
    return buf;
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

inline std::string csv_header_line(std::string_view kind) {
    return "# radarpc " + std::string(kind) + " v" + std::to_string(kCsvVersion) + "\n";
}

// ---------------------------------------------------------------------------
// CSV reading

struct CsvTable {
    std::string kind;
    int version = 0;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw ValidationError(std::string(name), "column missing from " + kind + " CSV");
    }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else if (c != '\r') {
            out.back() += c;
        }
    }
    return out;
}

inline CsvTable parse_csv(std::string_view text) {
    CsvTable t;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line.rfind("# radarpc ", 0) != 0)
        throw ValidationError("csv", "missing '# radarpc <kind> v<N>' version line");
    std::istringstream head(line.substr(10));
    std::string ver;
    head >> t.kind >> ver;
    if (ver.size() < 2 || ver[0] != 'v') throw ValidationError("csv", "malformed version line");
    t.version = std::stoi(ver.substr(1));
    if (t.version != kCsvVersion)
        throw ValidationError("csv", "unsupported " + t.kind + " version " + std::to_string(t.version));
    if (!std::getline(in, line)) throw ValidationError("csv", "missing header row");
    t.columns = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split_csv_line(line);
        if (row.size() != t.columns.size())
            throw ValidationError("csv", "row " + std::to_string(t.rows.size() + 1) + " has " +
                                             std::to_string(row.size()) + " fields, expected " +
                                             std::to_string(t.columns.size()));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::optional<double> parse_optional(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
}

// ---------------------------------------------------------------------------
// Per-frame metrics: one row per frame plus a final "aggregate" row.

inline std::string metrics_csv(const MetricsReport& r) {
    std::string out = csv_header_line("report");
    out += "frame_id,pd,pfa,bcd,predicted_points,gt_points,empty\n";
    for (const auto& f : r.per_frame)
        out += std::to_string(f.frame_id) + "," + fmt(f.pd) + "," + fmt(f.pfa) + "," + fmt(f.bcd) + "," +
               std::to_string(f.predicted_points) + "," + std::to_string(f.gt_points) + "," +
               (f.predicted_points == 0 ? "1" : "0") + "\n";
    out += "aggregate," + fmt(r.mean_pd) + "," + fmt(r.mean_pfa) + "," + fmt(r.mean_bcd) + ",,," +
           fmt(r.empty_frame_fraction) + "\n";
    return out;
}

inline nlohmann::ordered_json metrics_json(const MetricsReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nullptr; };
    nlohmann::ordered_json frames = nlohmann::ordered_json::array();
    for (const auto& f : r.per_frame)
        frames.push_back({{"frame_id", f.frame_id},
                          {"pd", opt(f.pd)},
                          {"pfa", opt(f.pfa)},
                          {"bcd", opt(f.bcd)},
                          {"predicted_points", f.predicted_points},
                          {"gt_points", f.gt_points}});
    return {{"version", kCsvVersion},
            {"detector", r.detector},
            {"config_hash", r.config_hash},
            {"per_frame", frames},
            {"aggregate",
             {{"pd", opt(r.mean_pd)},
              {"pfa", opt(r.mean_pfa)},
              {"bcd", opt(r.mean_bcd)},
              {"empty_frame_fraction", r.empty_frame_fraction}}}};
}

// ---------------------------------------------------------------------------
// Training history

inline std::string history_csv(const std::vector<nn::EpochRecord>& h) {
    std::string out = csv_header_line("history");
    out += "epoch,train_focal,validation_focal,parameter_norm,learning_rate\n";
    for (const auto& e : h)
        out += std::to_string(e.epoch) + "," + fmt(e.train_focal) + "," + fmt(e.validation_focal) + "," +
               fmt(e.parameter_norm) + "," + fmt(e.learning_rate) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Sweep table: rows grouped by temporal layer count, then backbone depth.

struct SweepCell {
    std::size_t backbone_blocks = 0;
    std::size_t temporal_layers = 0;
    bool ok = false;
    std::optional<double> pd, pfa, bcd;
    double empty_frame_fraction = 0.0;
    std::size_t parameters = 0;
    std::optional<double> final_train_focal;
    std::string error;
};

inline void sort_cells(std::vector<SweepCell>& cells) {
    std::stable_sort(cells.begin(), cells.end(), [](const SweepCell& a, const SweepCell& b) {
        return std::tie(a.temporal_layers, a.backbone_blocks) < std::tie(b.temporal_layers, b.backbone_blocks);
    });
}

inline std::string sweep_csv(std::vector<SweepCell> cells) {
    sort_cells(cells);
    std::string out = csv_header_line("sweep");
    out += "temporal_layers,backbone_blocks,status,pd,pfa,bcd,empty_frame_fraction,parameters,final_train_focal,error\n";
    for (const auto& c : cells)
        out += std::to_string(c.temporal_layers) + "," + std::to_string(c.backbone_blocks) + "," +
               (c.ok ? "ok" : "failed") + "," + fmt(c.pd) + "," + fmt(c.pfa) + "," + fmt(c.bcd) + "," +
               (c.ok ? fmt(c.empty_frame_fraction) : std::string()) + "," +
               (c.ok ? std::to_string(c.parameters) : std::string()) + "," + fmt(c.final_train_focal) + "," +
               csv_field(c.error) + "\n";
    return out;
}

inline std::vector<SweepCell> parse_sweep_csv(const CsvTable& t) {
    if (t.kind != "sweep") throw ValidationError("csv", "expected a sweep CSV, got '" + t.kind + "'");
    const auto ik = t.column("temporal_layers"), ib = t.column("backbone_blocks"), is = t.column("status"),
               ipd = t.column("pd"), ipfa = t.column("pfa"), ibcd = t.column("bcd"),
               ie = t.column("empty_frame_fraction"), ip = t.column("parameters"),
               il = t.column("final_train_focal"), ierr = t.column("error");
    std::vector<SweepCell> cells;
    for (const auto& r : t.rows) {
        SweepCell c;
        c.temporal_layers = std::stoul(r[ik]);
        c.backbone_blocks = std::stoul(r[ib]);
        c.ok = r[is] == "ok";
        c.pd = parse_optional(r[ipd]);
        c.pfa = parse_optional(r[ipfa]);
        c.bcd = parse_optional(r[ibcd]);
        c.empty_frame_fraction = parse_optional(r[ie]).value_or(0.0);
        c.parameters = r[ip].empty() ? 0 : std::stoul(r[ip]);
        c.final_train_focal = parse_optional(r[il]);
        c.error = r[ierr];
        cells.push_back(std::move(c));
    }
    return cells;
}

struct FrameBcd {
    std::string frame;
    std::optional<double> bcd;
};

inline std::vector<FrameBcd> parse_report_csv(const CsvTable& t) {
    if (t.kind != "report") throw ValidationError("csv", "expected a report CSV, got '" + t.kind + "'");
    const auto iframe = t.column("frame_id"), ibcd = t.column("bcd");
    std::vector<FrameBcd> out;
    for (const auto& r : t.rows)
        if (r[iframe] != "aggregate") out.push_back({r[iframe], parse_optional(r[ibcd])});
    return out;
}

// ---------------------------------------------------------------------------
// SVG

inline std::string xml_escape(std::string_view s) {
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

namespace detail {

inline std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline double nice_max(double v) {
    if (!(v > 0.0)) return 1.0;
    const double mag = std::pow(10.0, std::floor(std::log10(v)));
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
        if (v <= m * mag) return m * mag;
    return 10.0 * mag;
}

inline std::string svg_open(double w, double h, std::string_view title) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(w) +
           "\" height=\"" + px(h) + "\" viewBox=\"0 0 " + px(w) + " " + px(h) +
           "\" font-family=\"sans-serif\" font-size=\"11\">\n<title>" + xml_escape(title) +
           "</title>\n<rect x=\"0\" y=\"0\" width=\"" + px(w) + "\" height=\"" + px(h) + "\" fill=\"white\"/>\n";
}

inline std::string text(double x, double y, std::string_view s, std::string_view anchor = "middle",
                        std::string_view extra = "") {
    return "<text x=\"" + px(x) + "\" y=\"" + px(y) + "\" text-anchor=\"" + std::string(anchor) + "\"" +
           std::string(extra) + ">" + xml_escape(s) + "</text>\n";
}

inline std::string y_axis(double left, double top, double plot_h, double plot_w, double ymax, std::string_view label) {
    std::string out;
    for (int i = 0; i <= 5; ++i) {
        const double v = ymax * i / 5.0;
        const double y = top + plot_h - plot_h * i / 5.0;
        out += "<line x1=\"" + px(left) + "\" y1=\"" + px(y) + "\" x2=\"" + px(left + plot_w) + "\" y2=\"" + px(y) +
               "\" stroke=\"#dddddd\"/>\n";
        out += text(left - 6, y + 4, fmt(std::round(v * 1000.0) / 1000.0), "end");
    }
    out += "<line x1=\"" + px(left) + "\" y1=\"" + px(top) + "\" x2=\"" + px(left) + "\" y2=\"" + px(top + plot_h) +
           "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + px(left) + "\" y1=\"" + px(top + plot_h) + "\" x2=\"" + px(left + plot_w) + "\" y2=\"" +
           px(top + plot_h) + "\" stroke=\"black\"/>\n";
    out += text(14, top + plot_h / 2, label, "middle",
                " transform=\"rotate(-90 14 " + px(top + plot_h / 2) + ")\"");
    return out;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};
    return colors[i % 6];
}

}  // namespace detail

/// Grouped bar chart of mean BCD: one group per temporal layer count, one
/// bar per backbone. Cells without a BCD get a zero-height bar labelled
/// "inconclusive" (or "failed").
inline std::string sweep_bar_chart(std::vector<SweepCell> cells, std::string_view title = "Mean BCD per cell") {
    sort_cells(cells);
    std::vector<std::size_t> ks, bs;
    for (const auto& c : cells) {
        if (std::find(ks.begin(), ks.end(), c.temporal_layers) == ks.end()) ks.push_back(c.temporal_layers);
        if (std::find(bs.begin(), bs.end(), c.backbone_blocks) == bs.end()) bs.push_back(c.backbone_blocks);
    }
    std::sort(bs.begin(), bs.end());
    double vmax = 0.0;
    for (const auto& c : cells)
        if (c.bcd) vmax = std::max(vmax, *c.bcd);
    const double ymax = detail::nice_max(vmax);

    const double left = 60, top = 40, bar_w = 22, gap = 30;
    const double group_w = std::max<std::size_t>(bs.size(), 1) * bar_w;
    const double plot_w = std::max(200.0, ks.size() * (group_w + gap) + gap);
    const double plot_h = 260, legend_w = 130;
    const double width = left + plot_w + legend_w, height = top + plot_h + 60;

    std::string svg = detail::svg_open(width, height, title);
    svg += detail::text(left + plot_w / 2, 22, title, "middle", " font-size=\"14\"");
    svg += detail::y_axis(left, top, plot_h, plot_w, ymax, "mean BCD (m)");
    for (std::size_t gi = 0; gi < ks.size(); ++gi) {
        const double gx = left + gap + gi * (group_w + gap);
        svg += detail::text(gx + group_w / 2, top + plot_h + 18, std::to_string(ks[gi]) + " temporal layers");
        for (const auto& c : cells) {
            if (c.temporal_layers != ks[gi]) continue;
            const std::size_t bi = std::find(bs.begin(), bs.end(), c.backbone_blocks) - bs.begin();
            const double x = gx + bi * bar_w;
            const double h = c.bcd ? plot_h * (*c.bcd / ymax) : 0.0;
            const std::string label = "B=" + std::to_string(c.backbone_blocks) + " K=" + std::to_string(c.temporal_layers);
            svg += "<rect class=\"bar\" x=\"" + detail::px(x + 2) + "\" y=\"" + detail::px(top + plot_h - h) +
                   "\" width=\"" + detail::px(bar_w - 4) + "\" height=\"" + detail::px(h) + "\" fill=\"" +
                   detail::palette(bi) + "\"><title>" + xml_escape(label) + ": " +
                   (c.bcd ? fmt(*c.bcd) + " m" : std::string(c.ok ? "inconclusive" : "failed")) + "</title></rect>\n";
            if (!c.bcd)
                svg += detail::text(x + bar_w / 2, top + plot_h - 4, c.ok ? "n/a" : "fail", "middle",
                                    " font-size=\"8\"");
        }
    }
    for (std::size_t bi = 0; bi < bs.size(); ++bi) {
        const double y = top + 10 + bi * 18;
        svg += "<rect x=\"" + detail::px(left + plot_w + 16) + "\" y=\"" + detail::px(y - 9) +
               "\" width=\"12\" height=\"12\" fill=\"" + detail::palette(bi) + "\"/>\n";
        svg += detail::text(left + plot_w + 34, y + 1, std::to_string(bs[bi]) + " blocks", "start");
    }
    return svg + "</svg>\n";
}

/// Per-frame BCD line plot. Inconclusive frames break the line.
inline std::string bcd_line_plot(const std::vector<FrameBcd>& frames, std::string_view title = "BCD per frame") {
    double vmax = 0.0;
    for (const auto& f : frames)
        if (f.bcd) vmax = std::max(vmax, *f.bcd);
    const double ymax = detail::nice_max(vmax);
    const double left = 60, top = 40, plot_w = 560, plot_h = 260;
    const double width = left + plot_w + 30, height = top + plot_h + 50;
    const double step = frames.size() > 1 ? plot_w / static_cast<double>(frames.size() - 1) : 0.0;

    std::string svg = detail::svg_open(width, height, title);
    svg += detail::text(left + plot_w / 2, 22, title, "middle", " font-size=\"14\"");
    svg += detail::y_axis(left, top, plot_h, plot_w, ymax, "BCD (m)");
    svg += detail::text(left + plot_w / 2, top + plot_h + 36, "frame");
    if (!frames.empty()) {
        svg += detail::text(left, top + plot_h + 16, frames.front().frame);
        svg += detail::text(left + step * (frames.size() - 1), top + plot_h + 16, frames.back().frame);
    }
    std::string points;
    auto flush = [&] {
        if (!points.empty())
            svg += "<polyline class=\"series\" fill=\"none\" stroke=\"#4c72b0\" stroke-width=\"1.5\" points=\"" +
                   points + "\"/>\n";
        points.clear();
    };
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const double x = left + step * i;
        if (!frames[i].bcd) {
            flush();
            svg += "<line class=\"inconclusive\" x1=\"" + detail::px(x) + "\" y1=\"" + detail::px(top) + "\" x2=\"" +
                   detail::px(x) + "\" y2=\"" + detail::px(top + plot_h) + "\" stroke=\"#c44e52\" stroke-dasharray=\"3,3\"/>\n";
            continue;
        }
        const double y = top + plot_h - plot_h * (*frames[i].bcd / ymax);
        if (!points.empty()) points += ' ';
        points += detail::px(x) + "," + detail::px(y);
        svg += "<circle cx=\"" + detail::px(x) + "\" cy=\"" + detail::px(y) + "\" r=\"2\" fill=\"#4c72b0\"/>\n";
    }
    flush();
    return svg + "</svg>\n";
}

}  // namespace radarpc::report
