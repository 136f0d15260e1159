#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "error.hpp"
#include "util.hpp"

namespace stk {

std::size_t RasterSketch::ink_count() const {
  std::size_t n = 0;
  for (double v : pixels)
    if (v > 0.0) ++n;
  return n;
}

namespace {

double perpendicular_distance(const Point2& p, const Point2& a, const Point2& b) {
  const double abx = b.first - a.first;
  const double aby = b.second - a.second;
  const double len2 = abx * abx + aby * aby;
  if (len2 == 0.0) {
    const double dx = p.first - a.first;
    const double dy = p.second - a.second;
    return std::sqrt(dx * dx + dy * dy);
  }
  // Distance to the infinite line through a and b (the classic RDP variant).
  const double cross = abx * (p.second - a.second) - aby * (p.first - a.first);
  return std::abs(cross) / std::sqrt(len2);
}

}  // namespace

std::vector<std::size_t> rdp_simplify_indices(const std::vector<Point2>& polyline,
                                              double epsilon) {
  if (epsilon < 0.0) fail_validation("rdp_simplify: epsilon must be >= 0");
  const std::size_t n = polyline.size();
  if (n <= 2) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  std::vector<char> keep(n, 0);
  keep[0] = keep[n - 1] = 1;
  // Explicit stack; input strokes can run to thousands of points.
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  stack.emplace_back(0, n - 1);
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    if (hi <= lo + 1) continue;
    double max_dist = -1.0;
    std::size_t split = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double d = perpendicular_distance(polyline[i], polyline[lo], polyline[hi]);
      if (d > max_dist) {
        max_dist = d;
        split = i;
      }
    }
    if (max_dist > epsilon) {
      keep[split] = 1;
      stack.emplace_back(lo, split);
      stack.emplace_back(split, hi);
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

std::vector<Point2> rdp_simplify(const std::vector<Point2>& polyline, double epsilon) {
  std::vector<Point2> out;
  for (std::size_t i : rdp_simplify_indices(polyline, epsilon)) out.push_back(polyline[i]);
  return out;
}

std::pair<VectorSketch, SimplifyReport> simplify_sketch(const VectorSketch& sketch,
                                                        double epsilon) {
  if (epsilon < 0.0) fail_validation("simplify_sketch: epsilon must be >= 0");
  validate(sketch);
  VectorSketch out = sketch;
  SimplifyReport report;
  report.epsilon = epsilon;
  for (Stroke& s : out.strokes) {
    report.points_before += s.points.size();
    std::vector<Point2> poly;
    poly.reserve(s.points.size());
    for (const SketchPoint& p : s.points) poly.emplace_back(p.x, p.y);
    const std::vector<std::size_t> kept = rdp_simplify_indices(poly, epsilon);
    std::vector<SketchPoint> pts;
    pts.reserve(kept.size());
    for (std::size_t idx : kept) pts.push_back(s.points[idx]);
    s.points = std::move(pts);
    report.points_after += s.points.size();
  }
  return {out, report};
}

std::pair<VectorSketch, SimplifyReport> simplify_to_budget(const VectorSketch& sketch,
                                                           std::size_t target_points) {
  validate(sketch);
  if (target_points == 0) fail_validation("simplify_to_budget: target must be >= 1");
  auto at_eps = [&](double eps) { return simplify_sketch(sketch, eps); };
  auto base = at_eps(0.0);
  if (base.second.points_after <= target_points) return base;
  // points_after is non-increasing in epsilon, so bisect on epsilon. The
  // upper bound is the canvas diagonal: everything collapses to endpoints.
  double lo = 0.0;
  double hi = std::sqrt(static_cast<double>(sketch.canvas_w) * sketch.canvas_w +
                        static_cast<double>(sketch.canvas_h) * sketch.canvas_h);
  auto best = at_eps(hi);
  for (int iter = 0; iter < 64; ++iter) {
    const double mid = 0.5 * (lo + hi);
    auto r = at_eps(mid);
    if (r.second.points_after <= target_points) {
      best = std::move(r);
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return best;
}

double stroke_length(const Stroke& stroke) {
  if (stroke.points.empty()) fail_validation("stroke_length: stroke has no points");
  double len = 0.0;
  for (std::size_t i = 1; i < stroke.points.size(); ++i) {
    const double dx = stroke.points[i].x - stroke.points[i - 1].x;
    const double dy = stroke.points[i].y - stroke.points[i - 1].y;
    len += std::sqrt(dx * dx + dy * dy);
  }
  return len;
}

namespace {

void stamp(RasterSketch& raster, long long x, long long y, std::size_t thickness) {
  // Square dilation: offsets in [-(t-1)/2, t/2].
  const long long lo = -static_cast<long long>((thickness - 1) / 2);
  const long long hi = static_cast<long long>(thickness / 2);
  for (long long dy = lo; dy <= hi; ++dy) {
    for (long long dx = lo; dx <= hi; ++dx) {
      const long long px = x + dx;
      const long long py = y + dy;
      if (px < 0 || py < 0 || px >= static_cast<long long>(raster.width) ||
          py >= static_cast<long long>(raster.height))
        continue;
      raster.pixels[static_cast<std::size_t>(py) * raster.width +
                    static_cast<std::size_t>(px)] = 1.0;
    }
  }
}

void draw_segment(RasterSketch& raster, long long x0, long long y0, long long x1,
                  long long y1, std::size_t thickness) {
  const long long dx = std::llabs(x1 - x0);
  const long long dy = -std::llabs(y1 - y0);
  const long long sx = x0 < x1 ? 1 : -1;
  const long long sy = y0 < y1 ? 1 : -1;
  long long err = dx + dy;
  while (true) {
    stamp(raster, x0, y0, thickness);
    if (x0 == x1 && y0 == y1) break;
    const long long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

long long to_pixel(double coord, std::size_t size) {
  // Pixel centers sit at (k + 0.5) / size in normalized coordinates.
  long long p = round_half_away(coord * static_cast<double>(size) - 0.5);
  if (p < 0) p = 0;
  if (p >= static_cast<long long>(size)) p = static_cast<long long>(size) - 1;
  return p;
}

}  // namespace

RasterSketch rasterize(const VectorSketch& sketch, std::size_t width, std::size_t height,
                       std::size_t thickness) {
  if (width < 8 || height < 8) fail_validation("rasterize: width and height must be >= 8");
  if (thickness < 1) fail_validation("rasterize: thickness must be >= 1");
  validate(sketch, /*allow_empty=*/true);
  const VectorSketch norm = normalize(sketch);
  RasterSketch raster;
  raster.width = width;
  raster.height = height;
  raster.pixels.assign(width * height, 0.0);
  for (const Stroke& s : norm.strokes) {
    if (s.points.size() == 1) {
      stamp(raster, to_pixel(s.points[0].x, width), to_pixel(s.points[0].y, height),
            thickness);
      continue;
    }
    for (std::size_t j = 1; j < s.points.size(); ++j) {
      draw_segment(raster, to_pixel(s.points[j - 1].x, width),
                   to_pixel(s.points[j - 1].y, height), to_pixel(s.points[j].x, width),
                   to_pixel(s.points[j].y, height), thickness);
    }
  }
  return raster;
}

std::string pgm_encode(const RasterSketch& raster) {
  if (raster.pixels.size() != raster.width * raster.height)
    fail_validation("pgm_encode: pixel buffer does not match dimensions");
  std::string out = "P5\n" + std::to_string(raster.width) + " " +
                    std::to_string(raster.height) + "\n255\n";
  out.reserve(out.size() + raster.pixels.size());
  for (double v : raster.pixels) {
    if (v < 0.0 || v > 1.0) fail_validation("pgm_encode: pixel value outside [0,1]");
    const int gray = 255 - static_cast<int>(round_half_away(v * 255.0));
    out.push_back(static_cast<char>(static_cast<unsigned char>(gray)));
  }
  return out;
}

RasterSketch pgm_decode(const std::string& bytes) {
  std::size_t pos = 0;
  auto skip_ws = [&]() {
    while (pos < bytes.size() &&
           (bytes[pos] == ' ' || bytes[pos] == '\n' || bytes[pos] == '\r' ||
            bytes[pos] == '\t'))
      ++pos;
  };
  auto read_int = [&]() -> std::size_t {
    skip_ws();
    std::size_t v = 0;
    bool any = false;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      ++pos;
      any = true;
    }
    if (!any) fail_validation("pgm_decode: malformed header");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    fail_validation("pgm_decode: not a P5 PGM");
  pos = 2;
  const std::size_t w = read_int();
  const std::size_t h = read_int();
  const std::size_t maxval = read_int();
  if (maxval != 255) fail_validation("pgm_decode: expected maxval 255");
  ++pos;  // single whitespace byte after maxval
  if (bytes.size() - pos < w * h) fail_validation("pgm_decode: truncated pixel data");
  RasterSketch raster;
  raster.width = w;
  raster.height = h;
  raster.pixels.resize(w * h);
  for (std::size_t i = 0; i < w * h; ++i) {
    const auto gray = static_cast<unsigned char>(bytes[pos + i]);
    raster.pixels[i] = (255.0 - static_cast<double>(gray)) / 255.0;
  }
  return raster;
}

}  // namespace stk
