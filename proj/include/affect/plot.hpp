#pragma once

#include "affect/image.hpp"

#include <vector>

namespace affect {

/// Line plot of a ground-truth series (blue) against predictions (red) over a
/// fixed [-10, 10] value range, with axes and a zero line.
Image render_trace_plot(const std::vector<double>& truth, const std::vector<double>& pred,
                        int width = 480, int height = 240);

}  // namespace affect
