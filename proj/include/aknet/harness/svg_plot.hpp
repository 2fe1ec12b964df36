#pragma once

#include "aknet/harness/results.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace aknet {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = true;
  std::vector<PlotSeries> series;
};

std::string render_svg(const PlotSpec& spec);
void write_svg(const std::filesystem::path& path, const PlotSpec& spec);

// Rebuilds the experiment figures from a results table alone. Returns the
// files written.
std::vector<std::filesystem::path> plot_results(const ResultTable& table,
                                                const std::filesystem::path& out_dir);

}  // namespace aknet
