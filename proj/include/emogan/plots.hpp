#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emogan/linalg.hpp"

namespace emogan {

// Fixed palette; entry k colours class k.
inline constexpr const char* kPalette[] = {"#d62728", "#1f77b4", "#7f7f7f", "#2ca02c",
                                           "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
inline constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

const char* palette_color(int index);

struct ScatterSeries {
  std::string name;
  Matrix points;  // n x 2
  Labels classes;  // empty: every point takes `color_index`
  int color_index = 0;
  char marker = 'o';  // 'o' circle, 'x' cross, 's' square
};

struct LineSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  int color_index = 0;
  bool dashed = false;
};

struct PlotFrame {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 480;
};

// Deterministic SVG text: fixed viewport, coordinates printed with two
// decimals, series drawn in the order given.
std::string scatter_svg(const PlotFrame& frame, const std::vector<ScatterSeries>& series);
std::string line_svg(const PlotFrame& frame, const std::vector<LineSeries>& series);

void write_text(const std::filesystem::path& path, const std::string& text);

// Two-component principal projection fitted on `fit_rows`. Component signs
// are fixed so the largest-magnitude loading is positive.
struct Projection {
  RowVector mean;
  Matrix components;  // dim x 2

  Matrix apply(const Matrix& rows) const;
};

Projection pca2(const Matrix& fit_rows);

}  // namespace emogan
