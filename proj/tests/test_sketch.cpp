#include <doctest.h>

#include <algorithm>

#include "error.hpp"
#include "sketch.hpp"
#include "test_helpers.hpp"

using namespace stk;

namespace {

VectorSketch make_sketch(std::vector<std::vector<std::pair<double, double>>> strokes,
                         std::uint32_t w = 1, std::uint32_t h = 1) {
  VectorSketch s;
  s.id = "t";
  s.user = "u";
  s.canvas_w = w;
  s.canvas_h = h;
  std::uint64_t t = 0;
  for (const auto& pts : strokes) {
    Stroke stroke;
    for (const auto& [x, y] : pts) stroke.points.push_back(SketchPoint{x, y, t += 10});
    s.strokes.push_back(stroke);
  }
  return s;
}

std::vector<Pen> pens(const Stroke5Sequence& seq) {
  std::vector<Pen> out;
  for (const Point5& p : seq.points) out.push_back(p.pen);
  return out;
}

// Independent scan: stroke sizes by walking the sequence and cutting after
// every non-Down pen state.
std::vector<std::size_t> scan_partition(const Stroke5Sequence& seq) {
  std::vector<std::size_t> sizes;
  std::size_t run = 0;
  for (const Point5& p : seq.points) {
    ++run;
    if (p.pen != Pen::Down) {
      sizes.push_back(run);
      run = 0;
    }
  }
  return sizes;
}

}  // namespace

TEST_CASE("start token is (0,0,pen down), serialized (0,0,1,0,0)") {
  const Point5 p = start_token();
  CHECK(p.x == 0.0);
  CHECK(p.y == 0.0);
  CHECK(p.pen == Pen::Down);
  const auto row = p.as_row();
  CHECK(row == std::array<double, 5>{0.0, 0.0, 1.0, 0.0, 0.0});
  const Point5 q = start_token();
  CHECK(q.as_row() == row);
}

TEST_CASE("encode: single stroke of 3 points -> [Down, Down, End]") {
  const auto seq = encode_stroke5(
      make_sketch({{{0.1, 0.1}, {0.2, 0.2}, {0.3, 0.3}}}));
  CHECK(pens(seq) == std::vector<Pen>{Pen::Down, Pen::Down, Pen::End});
}

TEST_CASE("encode: two strokes of 2 points -> [Down, Up, Down, End]") {
  const auto seq = encode_stroke5(
      make_sketch({{{0.1, 0.1}, {0.2, 0.2}}, {{0.5, 0.5}, {0.6, 0.6}}}));
  CHECK(pens(seq) == std::vector<Pen>{Pen::Down, Pen::Up, Pen::Down, Pen::End});
}

TEST_CASE("encode rejects an empty sketch") {
  VectorSketch empty;
  empty.canvas_w = empty.canvas_h = 1;
  CHECK_THROWS_AS(encode_stroke5(empty), Error);
}

TEST_CASE("normalize: (400,300) on 800x600 -> (0.5,0.5); idempotent") {
  const VectorSketch s = make_sketch({{{400, 300}, {800, 600}}}, 800, 600);
  const VectorSketch n = normalize(s);
  CHECK(n.strokes[0].points[0].x == 0.5);
  CHECK(n.strokes[0].points[0].y == 0.5);
  CHECK(n.strokes[0].points[1].x == 1.0);
  CHECK(n.canvas_w == 1);
  CHECK(n.canvas_h == 1);

  const VectorSketch nn = normalize(n);
  CHECK(nn.strokes[0].points[0].x == n.strokes[0].points[0].x);
  CHECK(nn.strokes[0].points[1].y == n.strokes[0].points[1].y);

  VectorSketch bad = s;
  bad.canvas_w = 0;
  CHECK_THROWS_AS(normalize(bad), Error);
}

TEST_CASE("decode: [Down, Up, Down, End] -> 2 strokes of 2 points") {
  Stroke5Sequence seq;
  seq.points = {Point5{0.1, 0.1, Pen::Down}, Point5{0.2, 0.2, Pen::Up},
                Point5{0.5, 0.5, Pen::Down}, Point5{0.6, 0.6, Pen::End}};
  const VectorSketch s = decode_stroke5(seq);
  REQUIRE(s.strokes.size() == 2);
  CHECK(s.strokes[0].points.size() == 2);
  CHECK(s.strokes[1].points.size() == 2);
  // Synthesized timestamps: fixed 10 ms/point cadence across the sketch.
  CHECK(s.strokes[0].points[0].t_ms == 0);
  CHECK(s.strokes[0].points[1].t_ms == 10);
  CHECK(s.strokes[1].points[0].t_ms == 20);
  CHECK(s.strokes[1].points[1].t_ms == 30);
}

TEST_CASE("decode structural errors identify the offending index") {
  Stroke5Sequence missing_end;
  missing_end.points = {Point5{0.1, 0.1, Pen::Down}, Point5{0.2, 0.2, Pen::Up}};
  CHECK_THROWS_WITH_AS(decode_stroke5(missing_end),
                       doctest::Contains("point 1"), Error);

  Stroke5Sequence end_not_last;
  end_not_last.points = {Point5{0.1, 0.1, Pen::End}, Point5{0.2, 0.2, Pen::Down},
                         Point5{0.3, 0.3, Pen::End}};
  CHECK_THROWS_WITH_AS(decode_stroke5(end_not_last), doctest::Contains("point 0"), Error);

  Stroke5Sequence empty;
  CHECK_THROWS_AS(decode_stroke5(empty), Error);

  Stroke5Sequence out_of_range;
  out_of_range.points = {Point5{1.5, 0.0, Pen::End}};
  CHECK_THROWS_AS(decode_stroke5(out_of_range), Error);
}

TEST_CASE("a single pen-end point is a legal one-point stroke (a dot)") {
  Stroke5Sequence dot;
  dot.points = {Point5{0.4, 0.6, Pen::End}};
  const VectorSketch s = decode_stroke5(dot);
  REQUIRE(s.strokes.size() == 1);
  REQUIRE(s.strokes[0].points.size() == 1);
  CHECK(s.strokes[0].points[0].x == 0.4);

  // And it round-trips.
  const auto seq = encode_stroke5(s);
  REQUIRE(seq.points.size() == 1);
  CHECK(seq.points[0].pen == Pen::End);
}

TEST_CASE("round trip: decode(encode(s)) preserves geometry and partition exactly") {
  Rng rng(2024);
  for (int it = 0; it < 500; ++it) {
    const bool normalized = rng.below(2) == 0;
    const VectorSketch s = normalized
                               ? test::random_sketch(rng)
                               : test::random_sketch(rng, 640, 480);
    const VectorSketch expect = normalize(s);
    const Stroke5Sequence seq = encode_stroke5(s);

    // Up/End counts follow from the stroke count.
    std::size_t ups = 0, ends = 0;
    for (const Point5& p : seq.points) {
      if (p.pen == Pen::Up) ++ups;
      if (p.pen == Pen::End) ++ends;
      const auto row = p.as_row();
      CHECK(row[2] + row[3] + row[4] == 1.0);  // one-hot
    }
    CHECK(ups == s.strokes.size() - 1);
    CHECK(ends == 1);

    const VectorSketch back = decode_stroke5(seq);
    REQUIRE(back.strokes.size() == expect.strokes.size());
    for (std::size_t i = 0; i < back.strokes.size(); ++i) {
      REQUIRE(back.strokes[i].points.size() == expect.strokes[i].points.size());
      for (std::size_t j = 0; j < back.strokes[i].points.size(); ++j) {
        CHECK(back.strokes[i].points[j].x == expect.strokes[i].points[j].x);
        CHECK(back.strokes[i].points[j].y == expect.strokes[i].points[j].y);
      }
    }
  }
}

TEST_CASE("decode partition equals the naive scan oracle") {
  Rng rng(77);
  for (int it = 0; it < 200; ++it) {
    const VectorSketch s = test::random_sketch(rng);
    const Stroke5Sequence seq = encode_stroke5(s);
    const std::vector<std::size_t> expected = scan_partition(seq);
    const VectorSketch back = decode_stroke5(seq);
    REQUIRE(back.strokes.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
      CHECK(back.strokes[i].points.size() == expected[i]);
  }
}

TEST_CASE("sketch_stats counts strokes and points") {
  const VectorSketch s = make_sketch(
      {{{0.0, 0.0}, {0.5, 0.0}, {0.5, 0.5}}, {{0.1, 0.1}, {0.2, 0.2}, {0.3, 0.3}}});
  const SketchStats st = sketch_stats(s);
  CHECK(st.stroke_count == 2);
  CHECK(st.point_count == 6);
  CHECK(st.mean_points_per_stroke == 3.0);
  REQUIRE(st.stroke_lengths.size() == 2);
  CHECK(st.stroke_lengths[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("corpus stats: constant corpus median; random corpus matches sort oracle") {
  {
    std::vector<VectorSketch> corpus;
    for (int i = 0; i < 5; ++i) {
      std::vector<std::vector<std::pair<double, double>>> strokes;
      for (int k = 0; k < 64; ++k) strokes.push_back({{0.1, 0.1}, {0.2, 0.2}});
      corpus.push_back(make_sketch(strokes));
    }
    CHECK(corpus_stats(corpus).median_stroke_count == 64.0);
  }

  Rng rng(5);
  std::vector<VectorSketch> corpus;
  for (int i = 0; i < 37; ++i) corpus.push_back(test::random_sketch(rng));
  const CorpusStats cs = corpus_stats(corpus);

  std::vector<double> counts;
  std::size_t total_points = 0, total_strokes = 0;
  for (const auto& s : corpus) {
    counts.push_back(static_cast<double>(s.strokes.size()));
    total_strokes += s.strokes.size();
    for (const auto& st : s.strokes) total_points += st.points.size();
  }
  std::sort(counts.begin(), counts.end());
  const std::size_t n = counts.size();
  const double median =
      (n % 2 == 1) ? counts[n / 2] : 0.5 * (counts[n / 2 - 1] + counts[n / 2]);
  CHECK(cs.median_stroke_count == median);
  CHECK(cs.total_points == total_points);
  CHECK(cs.mean_points_per_stroke ==
        doctest::Approx(double(total_points) / double(total_strokes)).epsilon(1e-12));
}

TEST_CASE("validation rejects decreasing timestamps") {
  VectorSketch s = make_sketch({{{0.1, 0.1}, {0.2, 0.2}}});
  s.strokes[0].points[1].t_ms = 0;
  s.strokes[0].points[0].t_ms = 5;
  CHECK_THROWS_AS(validate(s), Error);
}
