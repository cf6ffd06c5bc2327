#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spdcmux/errors.hpp"

namespace spdcmux::io {

// Plot-ready tabular output. Metadata lines are emitted as leading
// '# key=value' comments so the CSV body stays machine-trivial.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::string>> metadata;
};

// Shortest round-trippable decimal representation; identical config and seed
// therefore produce identical bytes.
std::string format_double(double v);

void ensure_dir(const std::string& path);
void write_csv(const std::string& path, const Table& table);

std::uint64_t fnv1a64(std::string_view data);

// Complex matrix as JSON with row-major [re, im] pairs.
std::string matrix_to_json(const Eigen::MatrixXcd& m);
void write_matrix_json(const std::string& path, const Eigen::MatrixXcd& m,
                       const std::vector<std::pair<std::string, std::string>>& extra = {});
Eigen::MatrixXcd matrix_from_json_text(const std::string& text);

// Minimal self-contained SVG line chart: one polyline per series.
struct SvgSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series);

}  // namespace spdcmux::io
