#ifndef STK_GEOMETRY_HPP
#define STK_GEOMETRY_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sketch.hpp"

namespace stk {

// Fixed-resolution grayscale grid. Ink is 1.0, background 0.0; rasterize()
// never produces intermediate values (no anti-aliasing).
struct RasterSketch {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;  // row-major, pixels[y * width + x]

  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  std::size_t ink_count() const;
};

struct SimplifyReport {
  double epsilon = 0.0;
  std::size_t points_before = 0;
  std::size_t points_after = 0;
};

using Point2 = std::pair<double, double>;

// Ramer-Douglas-Peucker with perpendicular point-to-segment distance and an
// explicit work stack. Output is a subsequence of the input containing both
// endpoints; a point survives only if some pending segment sees it at
// distance > epsilon (so exactly collinear points drop even at epsilon 0).
std::vector<Point2> rdp_simplify(const std::vector<Point2>& polyline, double epsilon);

// Same algorithm, returning indices into the input polyline.
std::vector<std::size_t> rdp_simplify_indices(const std::vector<Point2>& polyline,
                                              double epsilon);

// Applies RDP per stroke; stroke count and order are unchanged. epsilon is in
// the sketch's own coordinate units.
std::pair<VectorSketch, SimplifyReport> simplify_sketch(const VectorSketch& sketch,
                                                        double epsilon);

// Smallest epsilon (up to search resolution) whose simplified sketch has at
// most target_points points in total. The paper-style point budgets depend on
// the data, so the budget is searched rather than hard-coded.
std::pair<VectorSketch, SimplifyReport> simplify_to_budget(const VectorSketch& sketch,
                                                           std::size_t target_points);

// Sum of Euclidean segment lengths in the stroke's coordinate units; 0 for a
// single-point stroke.
double stroke_length(const Stroke& stroke);

// Integer line drawing (Bresenham) with square dilation for thickness.
// Coordinates are normalized first; pixel index = round(coord * size - 0.5),
// clamped to the grid. Deterministic, no anti-aliasing.
RasterSketch rasterize(const VectorSketch& sketch, std::size_t width, std::size_t height,
                       std::size_t thickness);

// P5 PGM with ink black (0) on white (255). Bit-exact layout in docs/FORMAT.md.
std::string pgm_encode(const RasterSketch& raster);
RasterSketch pgm_decode(const std::string& bytes);

}  // namespace stk

#endif
