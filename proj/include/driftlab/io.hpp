#pragma once

#include "driftlab/config.hpp"
#include "driftlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace driftlab {

/// RFC-4180 field: quoted only when it holds a comma, quote or line break.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Buffered CSV table; rows end in CRLF as the RFC asks.
class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) { row(header); }

    void row(const std::vector<std::string>& fields) {
        if (fields.size() != columns_) throw ConfigError("csv: row width does not match header");
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) buf_ << ',';
            buf_ << csv_field(fields[i]);
        }
        buf_ << "\r\n";
    }

    std::string str() const { return buf_.str(); }

    void save(const std::filesystem::path& path) const { write_text(path, str()); }

    static void write_text(const std::filesystem::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("output: cannot write '" + path.string() + "'");
        out << text;
        if (!out) throw ConfigError("output: write failed for '" + path.string() + "'");
    }

private:
    std::size_t columns_;
    std::ostringstream buf_;
};

inline std::string num(double v) { return config_detail::format_double(v); }
inline std::string num(std::optional<double> v) { return v ? num(*v) : std::string(); }

/**
 * Minimal standalone SVG line chart. Failed points are passed as NaN and break the line.
 * A log x axis is used when every finite x is positive and they span more than two decades.
 */
inline std::string svg_line_plot(const std::vector<double>& xs, const std::vector<double>& ys,
                                 const std::string& x_label, const std::string& y_label) {
    constexpr double W = 640, H = 420, ml = 70, mr = 20, mt = 20, mb = 60;
    double xmin = INFINITY, xmax = -INFINITY, ymin = 0.0, ymax = 1e-12;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i])) continue;
        xmin = std::min(xmin, xs[i]);
        xmax = std::max(xmax, xs[i]);
        if (i < ys.size() && std::isfinite(ys[i])) ymax = std::max(ymax, ys[i]);
    }
    if (!(xmin <= xmax)) xmin = 0.0, xmax = 1.0;
    const bool logx = xmin > 0.0 && xmax / xmin > 100.0;
    auto tx = [&](double x) { return logx ? std::log10(x) : x; };
    double a = tx(xmin), b = tx(xmax);
    if (a == b) a -= 0.5, b += 0.5;
    ymax *= 1.05;
    auto px = [&](double x) { return ml + (tx(x) - a) / (b - a) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double y = ymin + (ymax - ymin) * k / 4.0;
        s << "<text x=\"" << ml - 8 << "\" y=\"" << py(y) + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
          << num(std::round(y * 1000) / 1000) << "</text>\n";
    }
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (std::isfinite(xs[i]))
            s << "<text x=\"" << px(xs[i]) << "\" y=\"" << H - mb + 16
              << "\" font-size=\"10\" text-anchor=\"middle\">" << num(xs[i]) << "</text>\n";
    s << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 15 << "\" font-size=\"13\" text-anchor=\"middle\">"
      << x_label << (logx ? " (log scale)" : "") << "</text>\n"
      << "<text x=\"18\" y=\"" << (mt + H - mb) / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (mt + H - mb) / 2 << ")\">" << y_label << "</text>\n";

    std::string path;
    bool pen = false;
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
            pen = false;
            continue;
        }
        path += (pen ? " L " : " M ") + num(px(xs[i])) + " " + num(py(ys[i]));
        pen = true;
        s << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[i]) << "\" r=\"3\" fill=\"steelblue\"/>\n";
    }
    if (!path.empty()) s << "<path d=\"" << path << "\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace driftlab
