#pragma once

#include <map>
#include <string>
#include <vector>

namespace fracback {

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

/// Shortest round-trip decimal form.
std::string format_double(double x);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    std::string str() const;
};

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
};

/// Minimal standalone SVG line chart.
std::string svg_line_plot(const std::vector<PlotSeries>& series, const PlotSpec& spec);

std::string manifest_text(const std::map<std::string, std::string>& m);
std::string manifest_json(const std::map<std::string, std::string>& m);

}  // namespace fracback
