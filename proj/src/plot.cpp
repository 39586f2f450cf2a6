#include "invsdp/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "invsdp/kernels.hpp"

namespace invsdp {

namespace {

// Edge e of cell (i, j): 0 bottom, 1 right, 2 top, 3 left.
std::array<double, 2> edge_point(int e, int i, int j, const double c[4]) {
  // Corners: 0 (i,j), 1 (i+1,j), 2 (i+1,j+1), 3 (i,j+1).
  static constexpr int ends[4][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3}};
  static constexpr int off[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  int a = ends[e][0], b = ends[e][1];
  double t = c[a] == c[b] ? 0.5 : c[a] / (c[a] - c[b]);
  t = std::clamp(t, 0.0, 1.0);
  return {i + off[a][0] + t * (off[b][0] - off[a][0]), j + off[a][1] + t * (off[b][1] - off[a][1])};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::vector<std::array<double, 4>> marching_squares(const std::vector<double>& values, int nx, int ny) {
  static constexpr int table[8][2] = {{-1, -1}, {3, 0}, {0, 1}, {3, 1}, {1, 2}, {-1, -1}, {0, 2}, {3, 2}};
  std::vector<std::array<double, 4>> out;
  auto at = [&](int i, int j) { return values[static_cast<std::size_t>(j) * (nx + 1) + i]; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double c[4] = {at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
      if (std::isnan(c[0]) || std::isnan(c[1]) || std::isnan(c[2]) || std::isnan(c[3])) continue;
      int code = 0;
      for (int k = 0; k < 4; ++k)
        if (c[k] <= 0) code |= 1 << k;
      auto seg = [&](int e0, int e1) {
        auto p = edge_point(e0, i, j, c), q = edge_point(e1, i, j, c);
        out.push_back({p[0], p[1], q[0], q[1]});
      };
      if (code == 0 || code == 15) continue;
      if (code == 5 || code == 10) {
        bool center_in = (c[0] + c[1] + c[2] + c[3]) <= 0;
        if ((code == 5) == center_in) {
          seg(0, 1);
          seg(2, 3);
        } else {
          seg(3, 0);
          seg(1, 2);
        }
        continue;
      }
      int k = code < 8 ? code : 15 - code;
      seg(table[k][0], table[k][1]);
    }
  return out;
}

std::string sublevel_svg(const std::vector<PlotLayer>& layers, const Box& view, int grid,
                         const std::vector<std::string>& axes) {
  if (view.dim() != 2) throw StructuralError("plots need exactly two parameters");
  if (grid < 16) throw StructuralError("plot grid must be at least 16");
  const double size = 480, margin = 40, span = size - 2 * margin;
  const double wx = view.hi[0] - view.lo[0], wy = view.hi[1] - view.lo[1];
  auto sx = [&](double a) { return margin + (a - view.lo[0]) / wx * span; };
  auto sy = [&](double b) { return size - margin - (b - view.lo[1]) / wy * span; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"480\" height=\"480\" fill=\"white\"/>\n";
  svg += "<rect x=\"" + fmt(margin) + "\" y=\"" + fmt(margin) + "\" width=\"" + fmt(span) + "\" height=\"" + fmt(span) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"240\" y=\"470\" text-anchor=\"middle\" font-size=\"12\">" + axes.at(0) + "</text>\n";
  svg += "<text x=\"12\" y=\"240\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 12 240)\">" +
         axes.at(1) + "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    double a = view.lo[0] + wx * k / 4, b = view.lo[1] + wy * k / 4;
    svg += "<text x=\"" + fmt(sx(a)) + "\" y=\"" + fmt(size - margin + 14) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + fmt(a) + "</text>\n";
    svg += "<text x=\"" + fmt(margin - 4) + "\" y=\"" + fmt(sy(b) + 3) + "\" text-anchor=\"end\" font-size=\"10\">" +
           fmt(b) + "</text>\n";
  }

  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::vector<double> pts(static_cast<std::size_t>(grid + 1) * (grid + 1) * 2);
  for (int j = 0; j <= grid; ++j)
    for (int i = 0; i <= grid; ++i) {
      std::size_t k = static_cast<std::size_t>(j) * (grid + 1) + i;
      pts[2 * k] = view.lo[0] + wx * i / grid;
      pts[2 * k + 1] = view.lo[1] + wy * j / grid;
    }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    const char* col = colours[l % 6];
    std::vector<double> vals(pts.size() / 2);
    kernels::eval_batch(kernels::pack(L.h), pts.data(), vals.size(), vals.data());
    const double slack = 1e-12;
    for (std::size_t k = 0; k < vals.size(); ++k) {
      double a = pts[2 * k], b = pts[2 * k + 1];
      if (a < L.box.lo[0] - slack || a > L.box.hi[0] + slack || b < L.box.lo[1] - slack || b > L.box.hi[1] + slack)
        vals[k] = std::numeric_limits<double>::quiet_NaN();
    }
    svg += "<g id=\"layer" + std::to_string(l + 1) + "\">\n";
    if (!L.label.empty()) svg += "<title>" + L.label + "</title>\n";
    svg += "<rect x=\"" + fmt(sx(L.box.lo[0])) + "\" y=\"" + fmt(sy(L.box.hi[1])) + "\" width=\"" +
           fmt(sx(L.box.hi[0]) - sx(L.box.lo[0])) + "\" height=\"" + fmt(sy(L.box.lo[1]) - sy(L.box.hi[1])) +
           "\" fill=\"none\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    std::string d;
    for (const auto& s : marching_squares(vals, grid, grid)) {
      d += "M" + fmt(sx(view.lo[0] + wx * s[0] / grid)) + " " + fmt(sy(view.lo[1] + wy * s[1] / grid)) + "L" +
           fmt(sx(view.lo[0] + wx * s[2] / grid)) + " " + fmt(sy(view.lo[1] + wy * s[3] / grid));
    }
    if (!d.empty())
      svg += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"1.5\"/>\n";
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace invsdp
