#ifndef STK_RETRIEVAL_HPP
#define STK_RETRIEVAL_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "encoder.hpp"
#include "geometry.hpp"
#include "hdecoder.hpp"
#include "optim.hpp"
#include "sketch.hpp"

namespace stk {

// A sketch and the rendering it depicts. At this scale "photos" are clean
// renders from the synthetic scene generator; the model treats any grayscale
// raster uniformly.
struct PairedItem {
  VectorSketch sketch;
  RasterSketch photo;
};

enum class EmbedDistance { SquaredEuclidean, Cosine };

struct EmbedConfig {
  std::size_t dim = 32;
  bool normalize = false;
  EmbedDistance distance = EmbedDistance::SquaredEuclidean;
};

// One shared backbone embeds both domains (Siamese); an affine head maps the
// encoder latent to the embedding space.
struct EmbeddingModel {
  ConvEncoderConfig encoder;
  EmbedConfig embed;
  std::size_t raster_thickness = 1;
  ParamSet params;
};

struct Gallery {
  std::vector<std::pair<std::string, std::vector<double>>> items;

  void add(const std::string& item_id, std::vector<double> embedding);
};

struct QueryRanking {
  std::string query_id;
  std::string truth_id;
  std::vector<std::string> ranked_ids;
};

struct RetrievalResult {
  std::vector<QueryRanking> rankings;
  double r_at_1 = 0.0;   // percentages in [0, 100]
  double r_at_10 = 0.0;
  std::size_t gallery_size = 0;
};

struct SplitResult {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::string> warnings;
};

struct TripletTrainConfig {
  std::uint64_t seed = 1;
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double learning_rate = 0.003;
  double margin = 0.2;
  OptKind optimizer = OptKind::Adam;
};

struct MaskEvalRow {
  double fraction = 0.0;
  bool late = false;  // false: mask strokes drawn early; true: drawn late
  double r_at_k = 0.0;
};

namespace retrieval {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b);
double embed_distance(const EmbedConfig& config, const std::vector<double>& a,
                      const std::vector<double>& b);

// max(0, d(a,p) - d(a,n) + margin) with d = squared Euclidean.
double triplet_loss(const std::vector<double>& anchor, const std::vector<double>& positive,
                    const std::vector<double>& negative, double margin = 0.2);

void init_params(const ConvEncoderConfig& encoder_config, const EmbedConfig& embed,
                 ParamSet& params, Rng& rng);

// Differentiable raster -> embedding.
Tape::NodeId embed_forward(Tape& tape, const EmbeddingModel& model, const ParamNodes& nodes,
                           Tape::NodeId raster_input);

std::vector<double> embed(const EmbeddingModel& model, const RasterSketch& raster);

// Per-user stratified split: floor(train_fraction * n) of each user's
// sketches go to train (order shuffled by a per-user sub-seed), the rest to
// test. Users with fewer than 2 sketches go entirely to train with a warning.
SplitResult split_by_user(const std::vector<VectorSketch>& corpus, double train_fraction,
                          std::uint64_t seed);

// Ascending distance; ties broken by gallery insertion order.
std::vector<std::string> rank(const std::vector<double>& query, const Gallery& gallery,
                              const EmbedConfig& config);

// Percentage of queries whose ground-truth item appears in the top k.
double recall_at_k(const std::vector<QueryRanking>& rankings, std::size_t k);

// Copies encoder.* tensors from a pretext checkpoint into the model.
void warm_start_encoder(EmbeddingModel& model, const ParamSet& source);

// Triplet training with random in-batch negatives: within a batch, every
// other photo serves as a negative for each sketch anchor.
struct RetrievalRun {
  EmbeddingModel model;
  std::vector<EpochLoss> curve;  // coord_mse/pen_ce unused; total = triplet loss
};

RetrievalRun train_retrieval(const std::vector<PairedItem>& pairs,
                             const ConvEncoderConfig& encoder_config,
                             const EmbedConfig& embed_config, std::size_t raster_thickness,
                             const TripletTrainConfig& train,
                             const ParamSet* warm_start = nullptr);

// Embeds test photos as the gallery and test sketches as queries.
RetrievalResult evaluate(const EmbeddingModel& model, const std::vector<PairedItem>& test);

// R@k after masking a fraction of strokes from the chosen end of the drawing
// order; the gallery stays unmasked.
std::vector<MaskEvalRow> masked_eval(const EmbeddingModel& model,
                                     const std::vector<PairedItem>& test,
                                     const std::vector<double>& fractions,
                                     const std::vector<bool>& ends_late, std::size_t k);

}  // namespace retrieval

}  // namespace stk

#endif
