#ifndef STK_IO_HPP
#define STK_IO_HPP

#include <string>
#include <vector>

#include "analysis.hpp"
#include "hdecoder.hpp"
#include "retrieval.hpp"
#include "sketch.hpp"

namespace stk {

// NDJSON sketch corpus, one object per line:
//   {"id": str, "user": str, "canvas": [w,h], "strokes": [[[x,y,t],...],...]}
// Loading validates every sketch; a malformed line aborts the whole load with
// its line number. Saving is canonical: save(load(save(x))) is byte-identical.
std::vector<VectorSketch> load_sketches(const std::string& path);
void save_sketches(const std::string& path, const std::vector<VectorSketch>& sketches);

std::string sketch_to_json_line(const VectorSketch& sketch);
VectorSketch sketch_from_json_line(const std::string& line, std::size_t line_no = 0);

// Stroke-5 NDJSON: one flat JSON array of [x, y, q1, q2, q3] rows per line.
void save_stroke5(const std::string& path, const std::vector<Stroke5Sequence>& seqs);
std::vector<Stroke5Sequence> load_stroke5(const std::string& path);

void save_pgm(const std::string& path, const RasterSketch& raster);
RasterSketch load_pgm(const std::string& path);

// Photos live next to a corpus as <dir>/<sketch-id>.pgm.
void save_photos(const std::string& dir, const std::vector<PairedItem>& items);
std::vector<PairedItem> load_photos(const std::string& dir,
                                    const std::vector<VectorSketch>& sketches);

// CSV emitters (headers documented in docs/FORMAT.md).
std::string loss_curve_csv(const std::vector<EpochLoss>& curve);
std::string coarse_to_fine_csv(const CoarseToFineCurve& curve);
std::string mask_eval_csv(const std::vector<MaskEvalRow>& rows, std::size_t k);
std::string ranking_csv(const RetrievalResult& result);

// Versioned JSON checkpoints of named parameter tensors plus the model
// configuration needed to rebuild it.
void save_pretext_checkpoint(const std::string& path, const PretextModel& model);
PretextModel load_pretext_checkpoint(const std::string& path);
void save_retrieval_checkpoint(const std::string& path, const EmbeddingModel& model);
EmbeddingModel load_retrieval_checkpoint(const std::string& path);

// "pretext" or "retrieval" without fully loading the model.
std::string checkpoint_kind(const std::string& path);

}  // namespace stk

#endif
