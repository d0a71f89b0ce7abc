#pragma once

#include <string>
#include <vector>

namespace alignaudit::report {

inline constexpr double kPlotWidth = 480.0;
inline constexpr double kPlotHeight = 360.0;
inline constexpr double kPlotMargin = 50.0;

/// Axis upper bound: the value rounded up to the next 0.1, at least 0.1.
double axis_max(double max_value);

/// Data-to-pixel mapping of a plot area: x in [0, x_max] spans
/// [margin, width - margin], y in [0, y_max] spans [height - margin, margin].
struct PlotTransform {
    double x_max = 0.1;
    double y_max = 0.1;
    double px(double x) const;
    double py(double y) const;
};

struct ScatterPoint {
    std::string label;
    double x = 0.0;
    double y = 0.0;
};

PlotTransform scatter_transform(const std::vector<ScatterPoint>& points);

std::string scatter_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                        const std::vector<ScatterPoint>& points, const std::string& note = {});

/// Vertical bars from zero; negative values are drawn as zero-height bars
/// (the value label still shows the number).
std::string bar_svg(const std::string& title, const std::string& y_label, const std::vector<std::string>& labels,
                    const std::vector<double>& values, const std::string& note = {});

/// One stacked bar per label; values[i][s] is series s of bar i.
std::string stacked_bar_svg(const std::string& title, const std::vector<std::string>& labels,
                            const std::vector<std::string>& series, const std::vector<std::vector<double>>& values,
                            const std::string& note = {});

std::string xml_escape(const std::string& s);

}  // namespace alignaudit::report
