#ifndef STK_ANALYSIS_HPP
#define STK_ANALYSIS_HPP

#include <cstdint>
#include <vector>

#include "sketch.hpp"

namespace stk {

enum class MaskEnd { Early, Late };

// Removes round(fraction * stroke_count) strokes from the chosen end of the
// drawing order (round half away from zero). Never removes every stroke
// unless fraction is exactly 1, in which case the returned sketch has zero
// strokes and is only meant for rasterization.
VectorSketch mask_strokes(const VectorSketch& sketch, double fraction, MaskEnd end);

struct CoarseToFineBin {
  std::size_t bin = 0;          // index into the [0,1] partition
  double time_lo = 0.0;         // bin boundaries in normalized drawing time
  double time_hi = 0.0;
  double mean_length = 0.0;     // normalized canvas units
  std::size_t n_strokes = 0;
};

struct CoarseToFineCurve {
  std::size_t n_bins = 0;
  std::vector<CoarseToFineBin> bins;  // empty bins are absent
};

// Mean stroke length against normalized drawing time. A stroke's time is its
// ordinal position: (index + 0.5) / stroke_count; with use_timestamps, the
// stroke's start time normalized into the sketch's time span instead.
CoarseToFineCurve coarse_to_fine(const std::vector<VectorSketch>& corpus,
                                 std::size_t n_bins, bool use_timestamps = false);

}  // namespace stk

#endif
