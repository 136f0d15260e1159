#ifndef STK_HDECODER_HPP
#define STK_HDECODER_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "encoder.hpp"
#include "nn.hpp"
#include "optim.hpp"
#include "sketch.hpp"
#include "tape.hpp"

namespace stk {

// Two-level recurrent decoder. A global LSTM walks strokes and emits one
// stroke embedding per step; a local LSTM walks points within the current
// stroke, conditioned on that embedding, and emits stroke-5 points through a
// 5-wide linear head (2 coordinates + 3 pen logits).
struct HDecoderConfig {
  std::size_t latent_dim = 128;       // must equal the encoder's latent_dim
  std::size_t hidden_global = 128;
  std::size_t hidden_local = 128;
  std::size_t stroke_embed_dim = 128;
};

struct PointPrediction {
  double x = 0.0;
  double y = 0.0;
  std::array<double, 3> pen_logits{};

  // Softmax with max subtraction; sums to 1 within 1e-12.
  std::array<double, 3> pen_probs(double temperature = 1.0) const;
  // Ties break toward the lower index (Down < Up < End).
  Pen pen_argmax() const;
};

struct UnrollLimits {
  std::size_t max_strokes = 64;
  std::size_t max_points_per_stroke = 256;
};

enum class SampleMode { Greedy, Stochastic };

struct SampleResult {
  Stroke5Sequence sequence;
  std::size_t clamped_coords = 0;  // coordinates clamped into [0,1] on emit
  std::size_t forced_up = 0;       // pen states overridden by the unroll limits
  std::size_t forced_end = 0;
  std::size_t local_steps = 0;
};

namespace hdecoder {

// Registers "decoder.*" parameters.
void init_params(const HDecoderConfig& config, ParamSet& params, Rng& rng);

// Affine init of the global hidden state from the latent; cell state is zero.
std::vector<double> init_global(const HDecoderConfig& config, const ParamSet& params,
                                const std::vector<double>& latent);

struct GlobalStep {
  LstmState state;
  std::vector<double> stroke_embed;
};

// One global step on [latent, prev_stroke_embed]; the first step uses a zero
// embedding as the previous one.
GlobalStep global_step(const HDecoderConfig& config, const ParamSet& params,
                       const LstmState& state, const std::vector<double>& latent,
                       const std::vector<double>& prev_stroke_embed);

std::vector<double> init_local(const HDecoderConfig& config, const ParamSet& params,
                               const std::vector<double>& stroke_embed);

struct LocalStep {
  LstmState state;
  PointPrediction prediction;
};

// One local step on [stroke_embed, prev_point5].
LocalStep local_step(const HDecoderConfig& config, const ParamSet& params,
                     const LstmState& state, const std::vector<double>& stroke_embed,
                     const std::array<double, 5>& prev_point);

struct LossNodes {
  Tape::NodeId total;
  Tape::NodeId coord_mse;
  Tape::NodeId pen_ce;
  std::size_t n_points = 0;
  std::size_t global_steps = 0;
};

// Teacher-forced loss on the tape: ground-truth stroke boundaries drive the
// unrolling and every step is conditioned on the ground-truth previous point.
// total = coord_mse + pen_weight * pen_ce, both components averaged over the
// target's points.
LossNodes teacher_forced_loss_graph(Tape& tape, const HDecoderConfig& config,
                                    const ParamNodes& nodes, Tape::NodeId latent,
                                    const Stroke5Sequence& target, double pen_weight);

struct LossBreakdown {
  double total = 0.0;
  double coord_mse = 0.0;
  double pen_ce = 0.0;
  std::size_t n_points = 0;
  std::size_t global_steps = 0;
};

LossBreakdown teacher_forced_loss(const HDecoderConfig& config, const ParamSet& params,
                                  const std::vector<double>& latent,
                                  const Stroke5Sequence& target, double pen_weight = 1.0);

// Autoregressive unroll. Emitting pen-up advances the global LSTM one step
// and re-seeds the local LSTM with the new stroke embedding, carrying the
// last emitted point; pen-end halts. Pen states are forced at the limits so
// the walk terminates within max_strokes * max_points_per_stroke local steps
// and the output always validates.
SampleResult sample(const HDecoderConfig& config, const ParamSet& params,
                    const std::vector<double>& latent, const UnrollLimits& limits,
                    SampleMode mode, std::uint64_t seed = 0, double temperature = 1.0);

}  // namespace hdecoder

// Encoder + decoder trained end to end on raster -> stroke-5 reconstruction.
struct PretextModel {
  ConvEncoderConfig encoder;
  HDecoderConfig decoder;
  std::size_t raster_thickness = 1;
  ParamSet params;
};

struct PretextTrainConfig {
  std::uint64_t seed = 1;
  std::size_t epochs = 100;
  std::size_t batch_size = 4;
  double learning_rate = 0.003;
  double pen_weight = 1.0;
  OptKind optimizer = OptKind::Adam;
};

struct EpochLoss {
  std::size_t epoch = 0;
  double total = 0.0;
  double coord_mse = 0.0;
  double pen_ce = 0.0;
};

struct PretextRun {
  PretextModel model;
  std::vector<EpochLoss> curve;
};

// Deterministic for a fixed seed: init, per-epoch shuffles, and batch
// gradient accumulation all run in a fixed order.
PretextRun train_pretext(const std::vector<VectorSketch>& corpus,
                         const ConvEncoderConfig& encoder_config,
                         const HDecoderConfig& decoder_config, std::size_t raster_thickness,
                         const PretextTrainConfig& train);

}  // namespace stk

#endif
