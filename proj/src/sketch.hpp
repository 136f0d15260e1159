#ifndef STK_SKETCH_HPP
#define STK_SKETCH_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace stk {

// Pen state attached to each stroke-5 point. It describes what happens
// *after* the current point: Down means the next point continues the stroke,
// Up closes the current stroke, End closes the whole sketch. Serialized as a
// one-hot triple (q1, q2, q3) in that order.
enum class Pen : int { Down = 0, Up = 1, End = 2 };

struct Point5 {
  double x = 0.0;  // normalized canvas coordinate in [0, 1]
  double y = 0.0;
  Pen pen = Pen::Down;

  std::array<double, 5> as_row() const {
    return {x, y, pen == Pen::Down ? 1.0 : 0.0, pen == Pen::Up ? 1.0 : 0.0,
            pen == Pen::End ? 1.0 : 0.0};
  }
};

struct SketchPoint {
  double x = 0.0;
  double y = 0.0;
  std::uint64_t t_ms = 0;
};

struct Stroke {
  std::vector<SketchPoint> points;
};

// Canonical sketch object: ordered strokes of ordered timestamped points.
// Stroke order is drawing order; all analyses that talk about "time" lean on
// it. Coordinates are in canvas pixels until normalize() is applied.
struct VectorSketch {
  std::string id;
  std::string user;
  std::uint32_t canvas_w = 1;
  std::uint32_t canvas_h = 1;
  std::vector<Stroke> strokes;

  bool normalized() const { return canvas_w == 1 && canvas_h == 1; }
};

struct Stroke5Sequence {
  std::vector<Point5> points;
};

struct SketchStats {
  std::size_t stroke_count = 0;
  std::size_t point_count = 0;
  double mean_points_per_stroke = 0.0;
  std::vector<double> stroke_lengths;  // normalized canvas units, per stroke
};

struct CorpusStats {
  std::size_t sketch_count = 0;
  std::size_t total_strokes = 0;
  std::size_t total_points = 0;
  double median_stroke_count = 0.0;  // even count: mean of the two middles
  double mean_points_per_stroke = 0.0;
};

// Throws Error(Validation) when an invariant is broken. Zero-stroke sketches
// are only legal where explicitly allowed (the output of full masking).
void validate(const VectorSketch& sketch, bool allow_empty = false);
void validate(const Stroke5Sequence& seq);

// The decoder's fixed start token: (0, 0, pen down), i.e. (0,0,1,0,0).
Point5 start_token();

// Divides coordinates by the canvas dimensions and records a 1x1 canvas.
// Idempotent; rejects zero-sized canvases.
VectorSketch normalize(const VectorSketch& sketch);

// Stroke-5 codec. Encoding normalizes coordinates, keeps point order, marks
// the last point of each non-final stroke Up and the final point End.
// Timestamps are dropped; decode_stroke5 resynthesizes them at a fixed
// 10 ms/point cadence (see docs/FORMAT.md).
Stroke5Sequence encode_stroke5(const VectorSketch& sketch);
VectorSketch decode_stroke5(const Stroke5Sequence& seq);

SketchStats sketch_stats(const VectorSketch& sketch);
CorpusStats corpus_stats(const std::vector<VectorSketch>& corpus);

}  // namespace stk

#endif
