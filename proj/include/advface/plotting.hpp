#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace advface {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart PNG (640x400): axes, tick labels, one coloured polyline per series and a
/// legend when there is more than one series. Non-finite points are skipped.
void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::vector<Series>& series, const std::string& x_label = "step");

/// Bar chart PNG with optional +-error whiskers (empty `errors` draws none).
void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<std::string>& labels, const std::vector<double>& values,
                     const std::vector<double>& errors = {});

}  // namespace advface
