#ifndef STK_SYNTHETIC_HPP
#define STK_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "retrieval.hpp"

namespace stk {

// Synthetic paired scenes standing in for photo datasets: each scene is a
// handful of primitives (boxes, circles, zigzags); the "photo" is a clean
// render and the "sketch" redraws the same primitives with per-point jitter
// in a shuffled stroke order.
struct SynthSpec {
  std::uint32_t canvas = 256;  // power of two keeps normalize() exact
  std::uint32_t users = 5;
  std::uint32_t min_primitives = 2;
  std::uint32_t max_primitives = 4;
  std::uint32_t circle_points = 16;       // points on a circle outline (closed)
  std::uint32_t zigzag_segments = 4;      // zigzag stroke has segments + 1 points
  std::uint32_t box_points_per_edge = 1;  // box outline has 4*k + 1 points
  double jitter = 0.003;                  // stddev in normalized units
  std::uint32_t photo_size = 32;
  std::uint32_t photo_thickness = 1;
};

// Deterministic per (seed, index): regenerating any prefix or suffix of a
// corpus reproduces the same items.
std::vector<PairedItem> generate_synthetic(std::uint64_t seed, std::size_t n,
                                           const SynthSpec& spec);

}  // namespace stk

#endif
