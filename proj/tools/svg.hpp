#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace roughevo::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
};

/// Static SVG line chart with markers; nonpositive values are skipped on log axes.
void write_svg_plot(const std::filesystem::path& file, const PlotSpec& spec, const std::vector<Series>& series);

}  // namespace roughevo::cli
