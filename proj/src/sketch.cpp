#include "sketch.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace stk {

namespace {

constexpr std::uint64_t kDecodeCadenceMs = 10;

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void validate(const VectorSketch& sketch, bool allow_empty) {
  if (sketch.canvas_w == 0 || sketch.canvas_h == 0)
    fail_validation("sketch '" + sketch.id + "': zero-sized canvas");
  if (sketch.strokes.empty()) {
    if (allow_empty) return;
    fail_validation("sketch '" + sketch.id + "': has no strokes");
  }
  std::uint64_t prev_start = 0;
  for (std::size_t i = 0; i < sketch.strokes.size(); ++i) {
    const Stroke& s = sketch.strokes[i];
    if (s.points.empty())
      fail_validation("sketch '" + sketch.id + "': stroke " + std::to_string(i) +
                      " has no points");
    std::uint64_t prev_t = s.points.front().t_ms;
    for (std::size_t j = 0; j < s.points.size(); ++j) {
      const SketchPoint& p = s.points[j];
      if (!finite(p.x) || !finite(p.y))
        fail_validation("sketch '" + sketch.id + "': non-finite coordinate at stroke " +
                        std::to_string(i) + ", point " + std::to_string(j));
      if (p.t_ms < prev_t)
        fail_validation("sketch '" + sketch.id + "': timestamps decrease within stroke " +
                        std::to_string(i));
      prev_t = p.t_ms;
    }
    const std::uint64_t start = s.points.front().t_ms;
    if (i > 0 && start < prev_start)
      fail_validation("sketch '" + sketch.id + "': stroke start timestamps decrease at stroke " +
                      std::to_string(i));
    prev_start = start;
  }
}

void validate(const Stroke5Sequence& seq) {
  if (seq.points.empty()) fail_structure("stroke-5 sequence is empty");
  for (std::size_t i = 0; i < seq.points.size(); ++i) {
    const Point5& p = seq.points[i];
    if (!finite(p.x) || !finite(p.y))
      fail_structure("stroke-5 point " + std::to_string(i) + ": non-finite coordinate");
    if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0)
      fail_structure("stroke-5 point " + std::to_string(i) +
                     ": coordinate outside [0,1]");
    if (p.pen == Pen::End && i + 1 != seq.points.size())
      fail_structure("stroke-5 point " + std::to_string(i) +
                     ": pen-end marker before the final point");
  }
  if (seq.points.back().pen != Pen::End)
    fail_structure("stroke-5 sequence does not end with a pen-end marker (point " +
                   std::to_string(seq.points.size() - 1) + ")");
}

Point5 start_token() { return Point5{0.0, 0.0, Pen::Down}; }

VectorSketch normalize(const VectorSketch& sketch) {
  if (sketch.canvas_w == 0 || sketch.canvas_h == 0)
    fail_validation("sketch '" + sketch.id + "': zero-sized canvas");
  if (sketch.normalized()) return sketch;
  VectorSketch out = sketch;
  const double w = static_cast<double>(sketch.canvas_w);
  const double h = static_cast<double>(sketch.canvas_h);
  for (Stroke& s : out.strokes) {
    for (SketchPoint& p : s.points) {
      p.x /= w;
      p.y /= h;
    }
  }
  out.canvas_w = 1;
  out.canvas_h = 1;
  return out;
}

Stroke5Sequence encode_stroke5(const VectorSketch& sketch) {
  validate(sketch);
  const VectorSketch norm = normalize(sketch);
  Stroke5Sequence seq;
  for (std::size_t i = 0; i < norm.strokes.size(); ++i) {
    const bool last_stroke = (i + 1 == norm.strokes.size());
    const Stroke& s = norm.strokes[i];
    for (std::size_t j = 0; j < s.points.size(); ++j) {
      const bool last_point = (j + 1 == s.points.size());
      Pen pen = Pen::Down;
      if (last_point) pen = last_stroke ? Pen::End : Pen::Up;
      seq.points.push_back(Point5{s.points[j].x, s.points[j].y, pen});
    }
  }
  return seq;
}

VectorSketch decode_stroke5(const Stroke5Sequence& seq) {
  validate(seq);
  VectorSketch out;
  out.canvas_w = 1;
  out.canvas_h = 1;
  Stroke current;
  std::uint64_t t = 0;
  for (const Point5& p : seq.points) {
    current.points.push_back(SketchPoint{p.x, p.y, t});
    t += kDecodeCadenceMs;
    if (p.pen == Pen::Up || p.pen == Pen::End) {
      out.strokes.push_back(std::move(current));
      current = Stroke{};
    }
  }
  return out;
}

SketchStats sketch_stats(const VectorSketch& sketch) {
  validate(sketch);
  const VectorSketch norm = normalize(sketch);
  SketchStats stats;
  stats.stroke_count = norm.strokes.size();
  for (const Stroke& s : norm.strokes) {
    stats.point_count += s.points.size();
    double len = 0.0;
    for (std::size_t j = 1; j < s.points.size(); ++j) {
      const double dx = s.points[j].x - s.points[j - 1].x;
      const double dy = s.points[j].y - s.points[j - 1].y;
      len += std::sqrt(dx * dx + dy * dy);
    }
    stats.stroke_lengths.push_back(len);
  }
  stats.mean_points_per_stroke =
      static_cast<double>(stats.point_count) / static_cast<double>(stats.stroke_count);
  return stats;
}

CorpusStats corpus_stats(const std::vector<VectorSketch>& corpus) {
  CorpusStats cs;
  cs.sketch_count = corpus.size();
  std::vector<std::size_t> stroke_counts;
  stroke_counts.reserve(corpus.size());
  for (const VectorSketch& s : corpus) {
    const SketchStats st = sketch_stats(s);
    cs.total_strokes += st.stroke_count;
    cs.total_points += st.point_count;
    stroke_counts.push_back(st.stroke_count);
  }
  if (!stroke_counts.empty()) {
    std::sort(stroke_counts.begin(), stroke_counts.end());
    const std::size_t n = stroke_counts.size();
    cs.median_stroke_count =
        (n % 2 == 1) ? static_cast<double>(stroke_counts[n / 2])
                     : 0.5 * (static_cast<double>(stroke_counts[n / 2 - 1]) +
                              static_cast<double>(stroke_counts[n / 2]));
  }
  if (cs.total_strokes > 0)
    cs.mean_points_per_stroke =
        static_cast<double>(cs.total_points) / static_cast<double>(cs.total_strokes);
  return cs;
}

}  // namespace stk
