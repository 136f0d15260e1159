#include "stroketk.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "config.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "hdecoder.hpp"
#include "io.hpp"
#include "retrieval.hpp"
#include "sketch.hpp"
#include "synthetic.hpp"
#include "util.hpp"

using ordered_json = nlohmann::ordered_json;

struct stk_corpus {
  std::vector<stk::VectorSketch> sketches;
  std::vector<stk::RasterSketch> photos;  // empty, or one per sketch

  bool has_photos() const { return !photos.empty(); }

  std::vector<stk::PairedItem> paired() const {
    if (photos.size() != sketches.size())
      stk::fail_validation("corpus has no paired photos; load or generate them first");
    std::vector<stk::PairedItem> out;
    out.reserve(sketches.size());
    for (std::size_t i = 0; i < sketches.size(); ++i)
      out.push_back(stk::PairedItem{sketches[i], photos[i]});
    return out;
  }
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

stk_status status_of(const stk::Error& e) {
  switch (e.kind()) {
    case stk::ErrorKind::Validation: return STK_ERR_VALIDATION;
    case stk::ErrorKind::Io: return STK_ERR_IO;
    case stk::ErrorKind::Structure: return STK_ERR_STRUCTURE;
    case stk::ErrorKind::Numeric: return STK_ERR_NUMERIC;
    case stk::ErrorKind::Config: return STK_ERR_CONFIG;
  }
  return STK_ERR_VALIDATION;
}

template <typename Fn>
stk_status guarded(Fn&& fn) {
  try {
    fn();
    return STK_OK;
  } catch (const stk::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return STK_ERR_VALIDATION;
  }
}

stk_status require(bool ok, const char* what) {
  if (ok) return STK_OK;
  g_last_error = std::string("invalid argument: ") + what;
  return STK_ERR_ARGUMENT;
}

#define STK_REQUIRE(cond, what)                                  \
  do {                                                           \
    stk_status s__ = require((cond), (what));                    \
    if (s__ != STK_OK) return s__;                               \
  } while (0)

ordered_json simplify_report_json(double epsilon_norm, std::size_t before,
                                  std::size_t after) {
  return ordered_json{{"format_version", 1},
                      {"epsilon_norm", epsilon_norm},
                      {"points_before", before},
                      {"points_after", after}};
}

}  // namespace

extern "C" {

const char* stk_version(void) { return "0.1.0"; }

const char* stk_last_error(void) { return g_last_error.c_str(); }

void stk_string_free(char* s) { std::free(s); }

void stk_corpus_free(stk_corpus* corpus) { delete corpus; }

stk_status stk_corpus_load(const char* ndjson_path, stk_corpus** out) {
  STK_REQUIRE(ndjson_path && out, "stk_corpus_load: null pointer");
  return guarded([&] {
    auto corpus = std::make_unique<stk_corpus>();
    corpus->sketches = stk::load_sketches(ndjson_path);
    *out = corpus.release();
  });
}

stk_status stk_corpus_save(const stk_corpus* corpus, const char* ndjson_path) {
  STK_REQUIRE(corpus && ndjson_path, "stk_corpus_save: null pointer");
  return guarded([&] { stk::save_sketches(ndjson_path, corpus->sketches); });
}

stk_status stk_corpus_generate(uint64_t seed, size_t n, const char* spec_json,
                               stk_corpus** out) {
  STK_REQUIRE(out, "stk_corpus_generate: null pointer");
  return guarded([&] {
    const stk::SynthSpec spec =
        stk::parse_synth_spec(spec_json && *spec_json ? spec_json : "{}");
    auto corpus = std::make_unique<stk_corpus>();
    for (auto& item : stk::generate_synthetic(seed, n, spec)) {
      corpus->sketches.push_back(std::move(item.sketch));
      corpus->photos.push_back(std::move(item.photo));
    }
    *out = corpus.release();
  });
}

size_t stk_corpus_size(const stk_corpus* corpus) {
  return corpus ? corpus->sketches.size() : 0;
}

stk_status stk_corpus_sketch_json(const stk_corpus* corpus, size_t index, char** out_json) {
  STK_REQUIRE(corpus && out_json, "stk_corpus_sketch_json: null pointer");
  return guarded([&] {
    if (index >= corpus->sketches.size())
      stk::fail_validation("sketch index " + std::to_string(index) +
                           " out of range (corpus has " +
                           std::to_string(corpus->sketches.size()) + ")");
    *out_json = dup_string(stk::sketch_to_json_line(corpus->sketches[index]));
  });
}

stk_status stk_corpus_save_photos(const stk_corpus* corpus, const char* dir) {
  STK_REQUIRE(corpus && dir, "stk_corpus_save_photos: null pointer");
  return guarded([&] { stk::save_photos(dir, corpus->paired()); });
}

stk_status stk_corpus_load_photos(stk_corpus* corpus, const char* dir) {
  STK_REQUIRE(corpus && dir, "stk_corpus_load_photos: null pointer");
  return guarded([&] {
    std::vector<stk::PairedItem> items = stk::load_photos(dir, corpus->sketches);
    corpus->photos.clear();
    for (auto& item : items) corpus->photos.push_back(std::move(item.photo));
  });
}

stk_status stk_corpus_stats_json(const stk_corpus* corpus, char** out_json) {
  STK_REQUIRE(corpus && out_json, "stk_corpus_stats_json: null pointer");
  return guarded([&] {
    const stk::CorpusStats cs = stk::corpus_stats(corpus->sketches);
    ordered_json per_sketch = ordered_json::array();
    for (const auto& s : corpus->sketches) {
      const stk::SketchStats st = stk::sketch_stats(s);
      per_sketch.push_back({{"id", s.id},
                            {"strokes", st.stroke_count},
                            {"points", st.point_count},
                            {"mean_points_per_stroke", st.mean_points_per_stroke}});
    }
    ordered_json j{{"format_version", 1},
                   {"sketches", cs.sketch_count},
                   {"total_strokes", cs.total_strokes},
                   {"total_points", cs.total_points},
                   {"median_stroke_count", cs.median_stroke_count},
                   {"mean_points_per_stroke", cs.mean_points_per_stroke},
                   {"per_sketch", std::move(per_sketch)}};
    *out_json = dup_string(j.dump());
  });
}

stk_status stk_corpus_normalize(stk_corpus* corpus) {
  STK_REQUIRE(corpus, "stk_corpus_normalize: null pointer");
  return guarded([&] {
    for (auto& s : corpus->sketches) s = stk::normalize(s);
  });
}

stk_status stk_corpus_simplify(stk_corpus* corpus, double epsilon_norm,
                               char** out_report_json) {
  STK_REQUIRE(corpus, "stk_corpus_simplify: null pointer");
  return guarded([&] {
    if (epsilon_norm < 0.0) stk::fail_validation("epsilon must be >= 0");
    std::size_t before = 0, after = 0;
    for (auto& s : corpus->sketches) {
      const double scale = static_cast<double>(std::max(s.canvas_w, s.canvas_h));
      auto [simplified, report] = stk::simplify_sketch(s, epsilon_norm * scale);
      s = std::move(simplified);
      before += report.points_before;
      after += report.points_after;
    }
    if (out_report_json)
      *out_report_json = dup_string(simplify_report_json(epsilon_norm, before, after).dump());
  });
}

stk_status stk_corpus_simplify_budget(stk_corpus* corpus, size_t target_points,
                                      char** out_report_json) {
  STK_REQUIRE(corpus, "stk_corpus_simplify_budget: null pointer");
  return guarded([&] {
    std::size_t before = 0, after = 0;
    double max_eps = 0.0;
    for (auto& s : corpus->sketches) {
      auto [simplified, report] = stk::simplify_to_budget(s, target_points);
      const double scale = static_cast<double>(std::max(s.canvas_w, s.canvas_h));
      max_eps = std::max(max_eps, report.epsilon / scale);
      s = std::move(simplified);
      before += report.points_before;
      after += report.points_after;
    }
    if (out_report_json)
      *out_report_json = dup_string(simplify_report_json(max_eps, before, after).dump());
  });
}

stk_status stk_corpus_mask_strokes(stk_corpus* corpus, double fraction, int late) {
  STK_REQUIRE(corpus, "stk_corpus_mask_strokes: null pointer");
  return guarded([&] {
    for (auto& s : corpus->sketches)
      s = stk::mask_strokes(s, fraction, late ? stk::MaskEnd::Late : stk::MaskEnd::Early);
  });
}

stk_status stk_corpus_split_by_user(const stk_corpus* corpus, double train_fraction,
                                    uint64_t seed, stk_corpus** out_train,
                                    stk_corpus** out_test, char** out_warnings_json) {
  STK_REQUIRE(corpus && out_train && out_test, "stk_corpus_split_by_user: null pointer");
  return guarded([&] {
    const stk::SplitResult split =
        stk::retrieval::split_by_user(corpus->sketches, train_fraction, seed);
    auto pick = [&](const std::vector<std::size_t>& idx) {
      auto part = std::make_unique<stk_corpus>();
      for (std::size_t i : idx) {
        part->sketches.push_back(corpus->sketches[i]);
        if (corpus->has_photos()) part->photos.push_back(corpus->photos[i]);
      }
      return part;
    };
    auto train = pick(split.train);
    auto test = pick(split.test);
    if (out_warnings_json) {
      ordered_json w = ordered_json::array();
      for (const std::string& msg : split.warnings) w.push_back(msg);
      *out_warnings_json = dup_string(w.dump());
    }
    *out_train = train.release();
    *out_test = test.release();
  });
}

stk_status stk_corpus_rasterize_dir(const stk_corpus* corpus, size_t width, size_t height,
                                    size_t thickness, const char* dir) {
  STK_REQUIRE(corpus && dir, "stk_corpus_rasterize_dir: null pointer");
  return guarded([&] {
    std::vector<stk::PairedItem> items;
    items.reserve(corpus->sketches.size());
    for (const auto& s : corpus->sketches)
      items.push_back(stk::PairedItem{s, stk::rasterize(s, width, height, thickness)});
    stk::save_photos(dir, items);
  });
}

stk_status stk_corpus_coarse_to_fine(const stk_corpus* corpus, size_t n_bins,
                                     int use_timestamps, const char* csv_path,
                                     char** out_json) {
  STK_REQUIRE(corpus, "stk_corpus_coarse_to_fine: null pointer");
  return guarded([&] {
    const stk::CoarseToFineCurve curve =
        stk::coarse_to_fine(corpus->sketches, n_bins, use_timestamps != 0);
    if (csv_path) stk::write_file_atomic(csv_path, stk::coarse_to_fine_csv(curve));
    if (out_json) {
      ordered_json bins = ordered_json::array();
      for (const auto& b : curve.bins)
        bins.push_back({{"bin", b.bin},
                        {"time_lo", b.time_lo},
                        {"time_hi", b.time_hi},
                        {"mean_length", b.mean_length},
                        {"n_strokes", b.n_strokes}});
      ordered_json j{{"format_version", 1}, {"n_bins", curve.n_bins}, {"bins", bins}};
      *out_json = dup_string(j.dump());
    }
  });
}

stk_status stk_corpus_save_stroke5(const stk_corpus* corpus, const char* path) {
  STK_REQUIRE(corpus && path, "stk_corpus_save_stroke5: null pointer");
  return guarded([&] {
    std::vector<stk::Stroke5Sequence> seqs;
    seqs.reserve(corpus->sketches.size());
    for (const auto& s : corpus->sketches) seqs.push_back(stk::encode_stroke5(s));
    stk::save_stroke5(path, seqs);
  });
}

stk_status stk_corpus_load_stroke5(const char* path, stk_corpus** out) {
  STK_REQUIRE(path && out, "stk_corpus_load_stroke5: null pointer");
  return guarded([&] {
    auto corpus = std::make_unique<stk_corpus>();
    const std::vector<stk::Stroke5Sequence> seqs = stk::load_stroke5(path);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      stk::VectorSketch sketch = stk::decode_stroke5(seqs[i]);
      sketch.id = "s5-" + std::to_string(i);
      sketch.user = "unknown";
      corpus->sketches.push_back(std::move(sketch));
    }
    *out = corpus.release();
  });
}

void stk_start_token(double out5[5]) {
  const auto row = stk::start_token().as_row();
  for (int i = 0; i < 5; ++i) out5[i] = row[i];
}

stk_status stk_rdp_simplify(const double* xs, const double* ys, size_t n, double epsilon,
                            size_t* keep_idx, size_t* keep_count) {
  STK_REQUIRE(keep_count && (n == 0 || (xs && ys && keep_idx)),
              "stk_rdp_simplify: null pointer");
  return guarded([&] {
    std::vector<stk::Point2> poly;
    poly.reserve(n);
    for (size_t i = 0; i < n; ++i) poly.emplace_back(xs[i], ys[i]);
    const std::vector<std::size_t> kept = stk::rdp_simplify_indices(poly, epsilon);
    for (std::size_t i = 0; i < kept.size(); ++i) keep_idx[i] = kept[i];
    *keep_count = kept.size();
  });
}

stk_status stk_train_pretext(const stk_corpus* corpus, const char* config_json,
                             const char* checkpoint_path, const char* curve_csv_path,
                             char** out_summary_json) {
  STK_REQUIRE(corpus && checkpoint_path, "stk_train_pretext: null pointer");
  return guarded([&] {
    const stk::PretextSetup setup =
        stk::parse_pretext_config(config_json && *config_json ? config_json : "{}");
    stk::PretextRun run = stk::train_pretext(corpus->sketches, setup.encoder,
                                             setup.decoder, setup.raster_thickness,
                                             setup.train);
    stk::save_pretext_checkpoint(checkpoint_path, run.model);
    if (curve_csv_path)
      stk::write_file_atomic(curve_csv_path, stk::loss_curve_csv(run.curve));
    if (out_summary_json) {
      ordered_json j{{"format_version", 1},
                     {"task", "train-pretext"},
                     {"items", corpus->sketches.size()},
                     {"epochs", setup.train.epochs},
                     {"initial_loss", run.curve.front().total},
                     {"final_loss", run.curve.back().total},
                     {"checkpoint", checkpoint_path}};
      *out_summary_json = dup_string(j.dump());
    }
  });
}

stk_status stk_sample(const char* checkpoint_path, const stk_corpus* corpus,
                      const char* options_json, stk_corpus** out_sampled,
                      char** out_summary_json) {
  STK_REQUIRE(checkpoint_path && corpus && out_sampled, "stk_sample: null pointer");
  return guarded([&] {
    const stk::SampleOptions opt =
        stk::parse_sample_options(options_json && *options_json ? options_json : "{}");
    const stk::PretextModel model = stk::load_pretext_checkpoint(checkpoint_path);

    std::vector<std::size_t> indices;
    if (opt.index >= 0) {
      if (static_cast<std::size_t>(opt.index) >= corpus->sketches.size())
        stk::fail_validation("sample index out of range");
      indices.push_back(static_cast<std::size_t>(opt.index));
    } else {
      for (std::size_t i = 0; i < corpus->sketches.size(); ++i) indices.push_back(i);
    }

    auto sampled = std::make_unique<stk_corpus>();
    std::size_t clamped = 0, forced_up = 0, forced_end = 0;
    for (std::size_t i : indices) {
      const stk::VectorSketch& src = corpus->sketches[i];
      const stk::RasterSketch raster = stk::rasterize(
          src, model.encoder.input_size, model.encoder.input_size, model.raster_thickness);
      const std::vector<double> latent =
          stk::encoder::encode(model.encoder, model.params, raster);
      const stk::SampleResult result =
          stk::hdecoder::sample(model.decoder, model.params, latent, opt.limits, opt.mode,
                                stk::mix_seed(opt.seed, i), opt.temperature);
      stk::VectorSketch out = stk::decode_stroke5(result.sequence);
      out.id = src.id + "-sample";
      out.user = src.user;
      sampled->sketches.push_back(std::move(out));
      clamped += result.clamped_coords;
      forced_up += result.forced_up;
      forced_end += result.forced_end;
    }
    if (out_summary_json) {
      ordered_json j{{"format_version", 1},
                     {"task", "sample"},
                     {"sampled", sampled->sketches.size()},
                     {"mode", opt.mode == stk::SampleMode::Greedy ? "greedy" : "stochastic"},
                     {"clamped_coords", clamped},
                     {"forced_up", forced_up},
                     {"forced_end", forced_end}};
      *out_summary_json = dup_string(j.dump());
    }
    *out_sampled = sampled.release();
  });
}

stk_status stk_train_retrieval(const stk_corpus* train_corpus, const char* config_json,
                               const char* warm_start_checkpoint,
                               const char* checkpoint_path, const char* curve_csv_path,
                               char** out_summary_json) {
  STK_REQUIRE(train_corpus && checkpoint_path, "stk_train_retrieval: null pointer");
  return guarded([&] {
    const stk::RetrievalSetup setup =
        stk::parse_retrieval_config(config_json && *config_json ? config_json : "{}");
    const std::vector<stk::PairedItem> pairs = train_corpus->paired();

    std::unique_ptr<stk::PretextModel> warm;
    if (warm_start_checkpoint && *warm_start_checkpoint)
      warm = std::make_unique<stk::PretextModel>(
          stk::load_pretext_checkpoint(warm_start_checkpoint));

    stk::retrieval::RetrievalRun run = stk::retrieval::train_retrieval(
        pairs, setup.encoder, setup.embed, setup.raster_thickness, setup.train,
        warm ? &warm->params : nullptr);
    stk::save_retrieval_checkpoint(checkpoint_path, run.model);
    if (curve_csv_path)
      stk::write_file_atomic(curve_csv_path, stk::loss_curve_csv(run.curve));
    if (out_summary_json) {
      ordered_json j{{"format_version", 1},
                     {"task", "train-retrieval"},
                     {"pairs", pairs.size()},
                     {"epochs", setup.train.epochs},
                     {"warm_start", warm != nullptr},
                     {"final_loss", run.curve.empty() ? 0.0 : run.curve.back().total},
                     {"checkpoint", checkpoint_path}};
      *out_summary_json = dup_string(j.dump());
    }
  });
}

stk_status stk_eval_retrieval(const char* checkpoint_path, const stk_corpus* test_corpus,
                              const char* ranking_csv_path, char** out_result_json) {
  STK_REQUIRE(checkpoint_path && test_corpus && out_result_json,
              "stk_eval_retrieval: null pointer");
  return guarded([&] {
    const stk::EmbeddingModel model = stk::load_retrieval_checkpoint(checkpoint_path);
    const stk::RetrievalResult result =
        stk::retrieval::evaluate(model, test_corpus->paired());
    if (ranking_csv_path)
      stk::write_file_atomic(ranking_csv_path, stk::ranking_csv(result));
    ordered_json j{{"format_version", 1},
                   {"task", "eval-retrieval"},
                   {"r_at_1", result.r_at_1},
                   {"r_at_10", result.r_at_10},
                   {"n_queries", result.rankings.size()},
                   {"gallery_size", result.gallery_size}};
    *out_result_json = dup_string(j.dump());
  });
}

stk_status stk_mask_eval(const char* checkpoint_path, const stk_corpus* test_corpus,
                         const char* mask_spec_json, const char* csv_path,
                         char** out_summary_json) {
  STK_REQUIRE(checkpoint_path && test_corpus, "stk_mask_eval: null pointer");
  return guarded([&] {
    const stk::MaskEvalSpec spec =
        stk::parse_mask_eval_spec(mask_spec_json && *mask_spec_json ? mask_spec_json : "{}");
    const stk::EmbeddingModel model = stk::load_retrieval_checkpoint(checkpoint_path);
    const std::vector<stk::MaskEvalRow> rows = stk::retrieval::masked_eval(
        model, test_corpus->paired(), spec.fractions, spec.ends_late, spec.k);
    if (csv_path) stk::write_file_atomic(csv_path, stk::mask_eval_csv(rows, spec.k));
    if (out_summary_json) {
      ordered_json rows_json = ordered_json::array();
      for (const auto& r : rows)
        rows_json.push_back({{"fraction", r.fraction},
                             {"end", r.late ? "late" : "early"},
                             {"r_at_k", r.r_at_k}});
      ordered_json j{{"format_version", 1},
                     {"task", "mask-eval"},
                     {"k", spec.k},
                     {"rows", std::move(rows_json)}};
      *out_summary_json = dup_string(j.dump());
    }
  });
}

}  // extern "C"
