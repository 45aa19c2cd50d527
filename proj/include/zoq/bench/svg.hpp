#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace zoq::bench {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label = "queries";
  std::string y_label;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

/// Self-contained SVG: axes, ticks, one polyline per series and a legend.
std::string render_svg(const PlotSpec& spec);

/// Reads summary CSVs, overlays their combos and writes one SVG per budget
/// into out_dir. All inputs must cover the same budgets. Returns the files
/// written.
std::vector<std::filesystem::path> plot_summaries(const std::vector<std::filesystem::path>& inputs,
                                                  const std::filesystem::path& out_dir);

}  // namespace zoq::bench
