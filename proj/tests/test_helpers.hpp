#ifndef STK_TEST_HELPERS_HPP
#define STK_TEST_HELPERS_HPP

#include <string>
#include <vector>

#include "rng.hpp"
#include "sketch.hpp"

namespace stk::test {

// Random valid sketch: 1..max_strokes strokes of 1..max_points points each,
// coordinates inside the canvas, timestamps non-decreasing.
inline VectorSketch random_sketch(Rng& rng, std::uint32_t canvas_w = 1,
                                  std::uint32_t canvas_h = 1,
                                  std::size_t max_strokes = 6,
                                  std::size_t max_points = 8) {
  VectorSketch s;
  s.id = "rnd-" + std::to_string(rng.next_u64() % 1000000);
  s.user = "u" + std::to_string(rng.below(4));
  s.canvas_w = canvas_w;
  s.canvas_h = canvas_h;
  const std::size_t n_strokes = 1 + rng.below(max_strokes);
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < n_strokes; ++i) {
    Stroke stroke;
    const std::size_t n_points = 1 + rng.below(max_points);
    for (std::size_t j = 0; j < n_points; ++j) {
      stroke.points.push_back(SketchPoint{rng.next_double() * canvas_w,
                                          rng.next_double() * canvas_h, t});
      t += 1 + rng.below(20);
    }
    s.strokes.push_back(std::move(stroke));
  }
  return s;
}

}  // namespace stk::test

#endif
