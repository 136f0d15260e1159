#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "error.hpp"
#include "geometry.hpp"
#include "rng.hpp"

namespace stk {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMargin = 0.02;  // keep primitives inside the canvas

double clamp01(double v) { return std::clamp(v, kMargin, 1.0 - kMargin); }

std::vector<std::pair<double, double>> make_box(Rng& rng, std::uint32_t points_per_edge) {
  const double cx = rng.uniform(0.2, 0.8);
  const double cy = rng.uniform(0.2, 0.8);
  const double w = rng.uniform(0.08, 0.3);
  const double h = rng.uniform(0.08, 0.3);
  const std::pair<double, double> corners[4] = {
      {clamp01(cx - w / 2), clamp01(cy - h / 2)},
      {clamp01(cx + w / 2), clamp01(cy - h / 2)},
      {clamp01(cx + w / 2), clamp01(cy + h / 2)},
      {clamp01(cx - w / 2), clamp01(cy + h / 2)},
  };
  std::vector<std::pair<double, double>> pts;
  for (int e = 0; e < 4; ++e) {
    const auto& a = corners[e];
    const auto& b = corners[(e + 1) % 4];
    for (std::uint32_t s = 0; s < points_per_edge; ++s) {
      const double t = static_cast<double>(s) / static_cast<double>(points_per_edge);
      pts.emplace_back(a.first + t * (b.first - a.first),
                       a.second + t * (b.second - a.second));
    }
  }
  pts.push_back(corners[0]);
  return pts;
}

std::vector<std::pair<double, double>> make_circle(Rng& rng, std::uint32_t n_points) {
  const double cx = rng.uniform(0.25, 0.75);
  const double cy = rng.uniform(0.25, 0.75);
  const double r = rng.uniform(0.05, 0.18);
  std::vector<std::pair<double, double>> pts;
  for (std::uint32_t j = 0; j <= n_points; ++j) {
    const double a = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n_points);
    pts.emplace_back(clamp01(cx + r * std::cos(a)), clamp01(cy + r * std::sin(a)));
  }
  return pts;
}

std::vector<std::pair<double, double>> make_zigzag(Rng& rng, std::uint32_t segments) {
  const double x0 = rng.uniform(0.15, 0.5);
  const double y0 = rng.uniform(0.15, 0.85);
  const double angle = rng.uniform(0.0, 2.0 * kPi);
  const double length = rng.uniform(0.2, 0.45);
  const double amp = length / (2.0 * static_cast<double>(segments));
  const double dx = std::cos(angle), dy = std::sin(angle);
  std::vector<std::pair<double, double>> pts;
  for (std::uint32_t j = 0; j <= segments; ++j) {
    const double t = length * static_cast<double>(j) / static_cast<double>(segments);
    const double side = (j % 2 == 0) ? 0.0 : ((j / 2) % 2 == 0 ? amp : -amp);
    pts.emplace_back(clamp01(x0 + t * dx - side * dy), clamp01(y0 + t * dy + side * dx));
  }
  return pts;
}

std::string format_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, i);
  return buf;
}

}  // namespace

std::vector<PairedItem> generate_synthetic(std::uint64_t seed, std::size_t n,
                                           const SynthSpec& spec) {
  if (n < 1) fail_validation("generate_synthetic: n must be >= 1");
  if (spec.canvas == 0) fail_validation("generate_synthetic: canvas must be positive");
  if (spec.min_primitives < 1 || spec.max_primitives < spec.min_primitives)
    fail_validation("generate_synthetic: bad primitive range");
  if (spec.circle_points < 3 || spec.zigzag_segments < 1 || spec.box_points_per_edge < 1)
    fail_validation("generate_synthetic: primitive resolution too low");
  if (spec.jitter < 0.0) fail_validation("generate_synthetic: jitter must be >= 0");

  std::vector<PairedItem> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, i));
    const std::size_t n_prim =
        spec.min_primitives + rng.below(spec.max_primitives - spec.min_primitives + 1);

    std::vector<std::vector<std::pair<double, double>>> primitives;
    for (std::size_t p = 0; p < n_prim; ++p) {
      switch (rng.below(3)) {
        case 0: primitives.push_back(make_box(rng, spec.box_points_per_edge)); break;
        case 1: primitives.push_back(make_circle(rng, spec.circle_points)); break;
        default: primitives.push_back(make_zigzag(rng, spec.zigzag_segments)); break;
      }
    }

    const double canvas = static_cast<double>(spec.canvas);
    VectorSketch canonical;
    canonical.id = format_id("syn-", i);
    canonical.user = "u" + std::to_string(i % spec.users);
    canonical.canvas_w = spec.canvas;
    canonical.canvas_h = spec.canvas;
    for (std::size_t p = 0; p < primitives.size(); ++p) {
      Stroke stroke;
      for (std::size_t j = 0; j < primitives[p].size(); ++j)
        stroke.points.push_back(SketchPoint{primitives[p][j].first * canvas,
                                            primitives[p][j].second * canvas,
                                            1000 * p + 10 * j});
      canonical.strokes.push_back(std::move(stroke));
    }

    PairedItem item;
    item.photo = rasterize(canonical, spec.photo_size, spec.photo_size,
                           spec.photo_thickness);

    // The drawn sketch: jittered points, shuffled draw order, fresh timestamps.
    std::vector<std::size_t> order(primitives.size());
    for (std::size_t p = 0; p < order.size(); ++p) order[p] = p;
    rng.shuffle(order);
    item.sketch.id = canonical.id;
    item.sketch.user = canonical.user;
    item.sketch.canvas_w = spec.canvas;
    item.sketch.canvas_h = spec.canvas;
    for (std::size_t p = 0; p < order.size(); ++p) {
      const auto& prim = primitives[order[p]];
      Stroke stroke;
      for (std::size_t j = 0; j < prim.size(); ++j) {
        const double x = std::clamp(prim[j].first + rng.normal(0.0, spec.jitter), 0.0, 1.0);
        const double y = std::clamp(prim[j].second + rng.normal(0.0, spec.jitter), 0.0, 1.0);
        stroke.points.push_back(SketchPoint{x * canvas, y * canvas, 1000 * p + 10 * j});
      }
      item.sketch.strokes.push_back(std::move(stroke));
    }
    validate(item.sketch);
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace stk
