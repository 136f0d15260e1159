#include "analysis.hpp"

#include <cmath>

#include "error.hpp"
#include "geometry.hpp"
#include "util.hpp"

namespace stk {

VectorSketch mask_strokes(const VectorSketch& sketch, double fraction, MaskEnd end) {
  if (fraction < 0.0 || fraction > 1.0)
    fail_validation("mask_strokes: fraction " + fmt_double(fraction) + " outside [0,1]");
  validate(sketch);
  const std::size_t n = sketch.strokes.size();
  std::size_t remove =
      static_cast<std::size_t>(round_half_away(fraction * static_cast<double>(n)));
  if (remove >= n && fraction < 1.0) remove = n - 1;
  if (fraction == 1.0) remove = n;

  VectorSketch out = sketch;
  if (end == MaskEnd::Early)
    out.strokes.erase(out.strokes.begin(),
                      out.strokes.begin() + static_cast<long>(remove));
  else
    out.strokes.erase(out.strokes.end() - static_cast<long>(remove), out.strokes.end());
  return out;
}

CoarseToFineCurve coarse_to_fine(const std::vector<VectorSketch>& corpus,
                                 std::size_t n_bins, bool use_timestamps) {
  if (corpus.empty()) fail_validation("coarse_to_fine: corpus is empty");
  if (n_bins < 2) fail_validation("coarse_to_fine: n_bins must be >= 2");

  std::vector<double> sums(n_bins, 0.0);
  std::vector<std::size_t> counts(n_bins, 0);
  for (const VectorSketch& raw : corpus) {
    validate(raw);
    const VectorSketch sketch = normalize(raw);
    const std::size_t n = sketch.strokes.size();
    const std::uint64_t t0 = sketch.strokes.front().points.front().t_ms;
    const std::uint64_t t1 = sketch.strokes.back().points.front().t_ms;
    for (std::size_t i = 0; i < n; ++i) {
      double time;
      if (use_timestamps && t1 > t0) {
        time = static_cast<double>(sketch.strokes[i].points.front().t_ms - t0) /
               static_cast<double>(t1 - t0);
      } else {
        time = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      }
      std::size_t bin = static_cast<std::size_t>(time * static_cast<double>(n_bins));
      if (bin >= n_bins) bin = n_bins - 1;
      sums[bin] += stroke_length(sketch.strokes[i]);
      ++counts[bin];
    }
  }

  CoarseToFineCurve curve;
  curve.n_bins = n_bins;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (counts[b] == 0) continue;
    CoarseToFineBin bin;
    bin.bin = b;
    bin.time_lo = static_cast<double>(b) / static_cast<double>(n_bins);
    bin.time_hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
    bin.mean_length = sums[b] / static_cast<double>(counts[b]);
    bin.n_strokes = counts[b];
    curve.bins.push_back(bin);
  }
  return curve;
}

}  // namespace stk
