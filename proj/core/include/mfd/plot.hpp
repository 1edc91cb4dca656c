#pragma once

#include <string>
#include <vector>

#include "mfd/io.hpp"

namespace mfd {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Line chart with a left and a right y axis; output bytes depend only on the input.
std::string dual_axis_svg(const std::string& title, const std::string& x_label, const Series& left,
                          const Series& right);

// Two panels: loss + alignment, manifold error + memorization. Throws EmptyTrace.
std::vector<std::pair<std::string, std::string>> trace_svgs(const MetricTrace& trace);
// Writes trace_*.svg into out_dir and returns the paths.
std::vector<std::string> emit_plots(const MetricTrace& trace, const std::string& out_dir);

}  // namespace mfd
