#pragma once

#include <string>
#include <vector>

#include "sheafq/sheaf_model.hpp"

namespace sq::cli {

struct Series {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;
  double radius = 1.5;
};

// Scatter plot in the (x, t)-plane; fronts and Cerf diagrams.
std::string svg_scatter(const std::string& title, const std::vector<Series>& series);

// Barcode as a stack of intervals, infinite bars drawn to the right edge.
std::string svg_barcode(const std::string& title, const Barcode& bc);

// Codirections tau (dt - p dx) over a one-dimensional base drawn as short
// normal arrows at (x, t); the reference set is drawn underneath as dots.
std::string svg_cones(const std::string& title, const ConeSet& ss, const ConeSet& reference);

}  // namespace sq::cli
