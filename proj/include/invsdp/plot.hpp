#pragma once

#include <array>
#include <string>
#include <vector>

#include "invsdp/cluster.hpp"

namespace invsdp {

// One h = 0 contour, drawn only inside its own box.
struct PlotLayer {
  Polynomial h;
  Box box;
  std::string label;
};

// SVG of the zero contours of two-parameter polynomials on a grid x grid
// lattice over `view`, traced by marching squares. Output is a pure function
// of the inputs.
std::string sublevel_svg(const std::vector<PlotLayer>& layers, const Box& view, int grid = 400,
                         const std::vector<std::string>& axes = {"a1", "a2"});

// Line segments (x0, y0, x1, y1) of the zero contour of values sampled on an
// (nx+1) x (ny+1) lattice, row-major in y. Exposed for tests.
std::vector<std::array<double, 4>> marching_squares(const std::vector<double>& values, int nx, int ny);

}  // namespace invsdp
