#include "alignaudit/report/svg.hpp"

#include "alignaudit/common/error.hpp"
#include "alignaudit/common/text.hpp"

#include <algorithm>
#include <cmath>

namespace alignaudit::report {

namespace {

const std::vector<std::string> kPalette{"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                        "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string f2(double v) { return format_fixed(v, 2); }

std::string header(const std::string& title, const std::string& note) {
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f2(kPlotWidth) + "\" height=\"" +
                      f2(kPlotHeight) + "\" viewBox=\"0 0 " + f2(kPlotWidth) + " " + f2(kPlotHeight) + "\">\n";
    out += "<title>" + xml_escape(title) + "</title>\n";
    if (!note.empty()) out += "<desc>" + xml_escape(note) + "</desc>\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + f2(kPlotWidth) + "\" height=\"" + f2(kPlotHeight) +
           "\" fill=\"#ffffff\"/>\n";
    out += "<text x=\"" + f2(kPlotWidth / 2) + "\" y=\"20.00\" text-anchor=\"middle\" font-size=\"14\">" +
           xml_escape(title) + "</text>\n";
    return out;
}

std::string axes(const PlotTransform& t, const std::string& x_label, const std::string& y_label) {
    const double x0 = kPlotMargin, y0 = kPlotHeight - kPlotMargin;
    std::string out;
    out += "<line x1=\"" + f2(x0) + "\" y1=\"" + f2(y0) + "\" x2=\"" + f2(kPlotWidth - kPlotMargin) + "\" y2=\"" +
           f2(y0) + "\" stroke=\"#000000\"/>\n";
    out += "<line x1=\"" + f2(x0) + "\" y1=\"" + f2(y0) + "\" x2=\"" + f2(x0) + "\" y2=\"" + f2(kPlotMargin) +
           "\" stroke=\"#000000\"/>\n";
    out += "<text x=\"" + f2(x0 - 4) + "\" y=\"" + f2(kPlotMargin + 4) + "\" text-anchor=\"end\" font-size=\"10\">" +
           format_fixed(t.y_max, 1) + "</text>\n";
    out += "<text x=\"" + f2(x0 - 4) + "\" y=\"" + f2(y0 + 4) + "\" text-anchor=\"end\" font-size=\"10\">0</text>\n";
    if (!x_label.empty()) {
        out += "<text x=\"" + f2(kPlotWidth / 2) + "\" y=\"" + f2(kPlotHeight - 10) +
               "\" text-anchor=\"middle\" font-size=\"11\">" + xml_escape(x_label) + "</text>\n";
    }
    if (!y_label.empty()) {
        out += "<text x=\"14.00\" y=\"" + f2(kPlotHeight / 2) + "\" text-anchor=\"middle\" font-size=\"11\" "
               "transform=\"rotate(-90 14.00 " + f2(kPlotHeight / 2) + ")\">" + xml_escape(y_label) + "</text>\n";
    }
    return out;
}

}  // namespace

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

double axis_max(double max_value) {
    if (!std::isfinite(max_value)) throw DegenerateInputError("axis_max: non-finite value");
    double m = std::ceil(max_value * 10.0 - 1e-9) / 10.0;
    return std::max(0.1, m);
}

double PlotTransform::px(double x) const { return kPlotMargin + x / x_max * (kPlotWidth - 2 * kPlotMargin); }

double PlotTransform::py(double y) const {
    return (kPlotHeight - kPlotMargin) - y / y_max * (kPlotHeight - 2 * kPlotMargin);
}

PlotTransform scatter_transform(const std::vector<ScatterPoint>& points) {
    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx = std::max(mx, p.x);
        my = std::max(my, p.y);
    }
    return {axis_max(mx), axis_max(my)};
}

std::string scatter_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                        const std::vector<ScatterPoint>& points, const std::string& note) {
    const auto t = scatter_transform(points);
    std::string out = header(title, note);
    out += axes(t, x_label, y_label);
    out += "<text x=\"" + f2(kPlotWidth - kPlotMargin) + "\" y=\"" + f2(kPlotHeight - kPlotMargin + 14) +
           "\" text-anchor=\"end\" font-size=\"10\">" + format_fixed(t.x_max, 1) + "</text>\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        out += "<circle cx=\"" + f2(t.px(p.x)) + "\" cy=\"" + f2(t.py(p.y)) + "\" r=\"5.00\" fill=\"" +
               kPalette[i % kPalette.size()] + "\"/>\n";
        out += "<text x=\"" + f2(t.px(p.x) + 7) + "\" y=\"" + f2(t.py(p.y) - 7) + "\" font-size=\"10\">" +
               xml_escape(p.label) + "</text>\n";
    }
    return out + "</svg>\n";
}

std::string bar_svg(const std::string& title, const std::string& y_label, const std::vector<std::string>& labels,
                    const std::vector<double>& values, const std::string& note) {
    if (labels.size() != values.size()) throw StructuralError("bar_svg: labels and values differ in length");
    double mv = 0.0;
    for (double v : values) mv = std::max(mv, v);
    const PlotTransform t{1.0, axis_max(mv)};
    std::string out = header(title, note);
    out += axes(t, "", y_label);
    const double span = kPlotWidth - 2 * kPlotMargin;
    const double slot = labels.empty() ? span : span / static_cast<double>(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double v = std::max(0.0, values[i]);
        const double x = kPlotMargin + slot * static_cast<double>(i) + slot * 0.15;
        const double top = t.py(v);
        out += "<rect x=\"" + f2(x) + "\" y=\"" + f2(top) + "\" width=\"" + f2(slot * 0.7) + "\" height=\"" +
               f2(t.py(0.0) - top) + "\" fill=\"" + kPalette[i % kPalette.size()] + "\"/>\n";
        out += "<text x=\"" + f2(x + slot * 0.35) + "\" y=\"" + f2(top - 3) +
               "\" text-anchor=\"middle\" font-size=\"9\">" + format_fixed(values[i], 3) + "</text>\n";
        out += "<text x=\"" + f2(x + slot * 0.35) + "\" y=\"" + f2(kPlotHeight - kPlotMargin + 12) +
               "\" text-anchor=\"middle\" font-size=\"9\">" + xml_escape(labels[i]) + "</text>\n";
    }
    return out + "</svg>\n";
}

std::string stacked_bar_svg(const std::string& title, const std::vector<std::string>& labels,
                            const std::vector<std::string>& series, const std::vector<std::vector<double>>& values,
                            const std::string& note) {
    if (labels.size() != values.size()) throw StructuralError("stacked_bar_svg: labels and values differ in length");
    double mv = 0.0;
    for (const auto& row : values) {
        if (row.size() != series.size()) throw StructuralError("stacked_bar_svg: row width != series count");
        double s = 0.0;
        for (double v : row) s += std::max(0.0, v);
        mv = std::max(mv, s);
    }
    const PlotTransform t{1.0, axis_max(mv)};
    std::string out = header(title, note);
    out += axes(t, "", "");
    const double span = kPlotWidth - 2 * kPlotMargin;
    const double slot = labels.empty() ? span : span / static_cast<double>(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double x = kPlotMargin + slot * static_cast<double>(i) + slot * 0.15;
        double acc = 0.0;
        for (std::size_t s = 0; s < series.size(); ++s) {
            const double v = std::max(0.0, values[i][s]);
            const double top = t.py(acc + v);
            out += "<rect x=\"" + f2(x) + "\" y=\"" + f2(top) + "\" width=\"" + f2(slot * 0.7) + "\" height=\"" +
                   f2(t.py(acc) - top) + "\" fill=\"" + kPalette[s % kPalette.size()] + "\"/>\n";
            acc += v;
        }
        out += "<text x=\"" + f2(x + slot * 0.35) + "\" y=\"" + f2(kPlotHeight - kPlotMargin + 12) +
               "\" text-anchor=\"middle\" font-size=\"9\">" + xml_escape(labels[i]) + "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = 36.0 + 12.0 * static_cast<double>(s);
        out += "<rect x=\"" + f2(kPlotWidth - kPlotMargin - 90) + "\" y=\"" + f2(y - 8) +
               "\" width=\"8.00\" height=\"8.00\" fill=\"" + kPalette[s % kPalette.size()] + "\"/>\n";
        out += "<text x=\"" + f2(kPlotWidth - kPlotMargin - 78) + "\" y=\"" + f2(y) + "\" font-size=\"9\">" +
               xml_escape(series[s]) + "</text>\n";
    }
    return out + "</svg>\n";
}

}  // namespace alignaudit::report
