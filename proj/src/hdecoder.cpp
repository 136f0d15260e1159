#include "hdecoder.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "geometry.hpp"

namespace stk {

std::array<double, 3> PointPrediction::pen_probs(double temperature) const {
  if (temperature <= 0.0) fail_validation("pen_probs: temperature must be > 0");
  std::array<double, 3> p{};
  double mx = pen_logits[0];
  for (double v : pen_logits) mx = std::max(mx, v);
  double denom = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    p[i] = std::exp((pen_logits[i] - mx) / temperature);
    denom += p[i];
  }
  for (double& v : p) v /= denom;
  return p;
}

Pen PointPrediction::pen_argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (pen_logits[i] > pen_logits[best]) best = i;
  return static_cast<Pen>(best);
}

namespace hdecoder {

namespace {

LstmWeights lstm_from(const ParamSet& params, const std::string& base) {
  return LstmWeights{params.at(base + ".w_x"), params.at(base + ".w_h"),
                     params.at(base + ".bias")};
}

LstmNodes lstm_nodes(const ParamNodes& nodes, const std::string& base) {
  return LstmNodes{nodes.at(base + ".w_x"), nodes.at(base + ".w_h"),
                   nodes.at(base + ".bias")};
}

// Target stroke partition: spans of [start, end) indices into seq.points.
std::vector<std::pair<std::size_t, std::size_t>> stroke_spans(const Stroke5Sequence& seq) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t start = 0;
  for (std::size_t i = 0; i < seq.points.size(); ++i) {
    if (seq.points[i].pen != Pen::Down) {
      spans.emplace_back(start, i + 1);
      start = i + 1;
    }
  }
  return spans;
}

std::array<double, 5> one_hot_row(const Point5& p) { return p.as_row(); }

}  // namespace

void init_params(const HDecoderConfig& config, ParamSet& params, Rng& rng) {
  const std::size_t d = config.latent_dim;
  const std::size_t hg = config.hidden_global;
  const std::size_t hl = config.hidden_local;
  const std::size_t e = config.stroke_embed_dim;
  if (d == 0 || hg == 0 || hl == 0 || e == 0)
    fail_validation("decoder config has a zero dimension");

  params.add("decoder.global_init.weight", init_uniform({hg, d}, d, rng));
  params.add("decoder.global_init.bias", Tensor::zeros({hg}));
  const LstmWeights g = LstmWeights::init(d + e, hg, rng);
  params.add("decoder.global_lstm.w_x", g.w_x);
  params.add("decoder.global_lstm.w_h", g.w_h);
  params.add("decoder.global_lstm.bias", g.bias);
  params.add("decoder.global_out.weight", init_uniform({e, hg}, hg, rng));
  params.add("decoder.global_out.bias", Tensor::zeros({e}));

  params.add("decoder.local_init.weight", init_uniform({hl, e}, e, rng));
  params.add("decoder.local_init.bias", Tensor::zeros({hl}));
  const LstmWeights l = LstmWeights::init(e + 5, hl, rng);
  params.add("decoder.local_lstm.w_x", l.w_x);
  params.add("decoder.local_lstm.w_h", l.w_h);
  params.add("decoder.local_lstm.bias", l.bias);
  params.add("decoder.local_out.weight", init_uniform({5, hl}, hl, rng));
  params.add("decoder.local_out.bias", Tensor::zeros({5}));
}

std::vector<double> init_global(const HDecoderConfig& config, const ParamSet& params,
                                const std::vector<double>& latent) {
  if (latent.size() != config.latent_dim)
    fail_validation("init_global: latent length " + std::to_string(latent.size()) +
                    " does not match latent_dim " + std::to_string(config.latent_dim));
  return affine_forward(params.at("decoder.global_init.weight"),
                        params.at("decoder.global_init.bias"), latent);
}

GlobalStep global_step(const HDecoderConfig& config, const ParamSet& params,
                       const LstmState& state, const std::vector<double>& latent,
                       const std::vector<double>& prev_stroke_embed) {
  if (latent.size() != config.latent_dim ||
      prev_stroke_embed.size() != config.stroke_embed_dim)
    fail_validation("global_step: input lengths do not match config");
  std::vector<double> x;
  x.reserve(latent.size() + prev_stroke_embed.size());
  x.insert(x.end(), latent.begin(), latent.end());
  x.insert(x.end(), prev_stroke_embed.begin(), prev_stroke_embed.end());
  GlobalStep out;
  out.state = lstm_forward(lstm_from(params, "decoder.global_lstm"), x, state);
  out.stroke_embed = affine_forward(params.at("decoder.global_out.weight"),
                                    params.at("decoder.global_out.bias"), out.state.h);
  return out;
}

std::vector<double> init_local(const HDecoderConfig& config, const ParamSet& params,
                               const std::vector<double>& stroke_embed) {
  if (stroke_embed.size() != config.stroke_embed_dim)
    fail_validation("init_local: stroke embedding length does not match config");
  return affine_forward(params.at("decoder.local_init.weight"),
                        params.at("decoder.local_init.bias"), stroke_embed);
}

LocalStep local_step(const HDecoderConfig& config, const ParamSet& params,
                     const LstmState& state, const std::vector<double>& stroke_embed,
                     const std::array<double, 5>& prev_point) {
  if (stroke_embed.size() != config.stroke_embed_dim)
    fail_validation("local_step: stroke embedding length does not match config");
  std::vector<double> x;
  x.reserve(stroke_embed.size() + 5);
  x.insert(x.end(), stroke_embed.begin(), stroke_embed.end());
  x.insert(x.end(), prev_point.begin(), prev_point.end());
  LocalStep out;
  out.state = lstm_forward(lstm_from(params, "decoder.local_lstm"), x, state);
  const std::vector<double> head = affine_forward(
      params.at("decoder.local_out.weight"), params.at("decoder.local_out.bias"),
      out.state.h);
  out.prediction.x = head[0];
  out.prediction.y = head[1];
  out.prediction.pen_logits = {head[2], head[3], head[4]};
  return out;
}

LossNodes teacher_forced_loss_graph(Tape& tape, const HDecoderConfig& config,
                                    const ParamNodes& nodes, Tape::NodeId latent,
                                    const Stroke5Sequence& target, double pen_weight) {
  validate(target);
  if (tape.value(latent).numel() != config.latent_dim)
    fail_validation("teacher_forced_loss: latent does not match latent_dim");

  const LstmNodes global_lstm = lstm_nodes(nodes, "decoder.global_lstm");
  const LstmNodes local_lstm = lstm_nodes(nodes, "decoder.local_lstm");

  Tape::NodeId h_g = affine_node(tape, nodes.at("decoder.global_init.weight"),
                                 nodes.at("decoder.global_init.bias"), latent);
  Tape::NodeId c_g = tape.leaf(Tensor::zeros({config.hidden_global}));
  Tape::NodeId prev_embed = tape.leaf(Tensor::zeros({config.stroke_embed_dim}));

  Tape::NodeId sq_acc = tape.leaf(Tensor::scalar(0.0));
  Tape::NodeId ce_acc = tape.leaf(Tensor::scalar(0.0));

  const auto spans = stroke_spans(target);
  std::array<double, 5> prev_point = start_token().as_row();
  for (const auto& [start, end] : spans) {
    const Tape::NodeId x_g = tape.concat({latent, prev_embed});
    const LstmStepNodes g = lstm_step(tape, global_lstm, x_g, h_g, c_g);
    h_g = g.h;
    c_g = g.c;
    const Tape::NodeId stroke_embed = affine_node(
        tape, nodes.at("decoder.global_out.weight"), nodes.at("decoder.global_out.bias"),
        h_g);

    Tape::NodeId h_l = affine_node(tape, nodes.at("decoder.local_init.weight"),
                                   nodes.at("decoder.local_init.bias"), stroke_embed);
    Tape::NodeId c_l = tape.leaf(Tensor::zeros({config.hidden_local}));
    for (std::size_t t = start; t < end; ++t) {
      const Point5& tgt = target.points[t];
      const Tape::NodeId prev_leaf = tape.leaf(
          Tensor::vector({prev_point[0], prev_point[1], prev_point[2], prev_point[3],
                          prev_point[4]}));
      const Tape::NodeId x_l = tape.concat({stroke_embed, prev_leaf});
      const LstmStepNodes l = lstm_step(tape, local_lstm, x_l, h_l, c_l);
      h_l = l.h;
      c_l = l.c;
      const Tape::NodeId head =
          affine_node(tape, nodes.at("decoder.local_out.weight"),
                      nodes.at("decoder.local_out.bias"), h_l);
      const Tape::NodeId coords = tape.slice(head, 0, 2);
      const Tape::NodeId logits = tape.slice(head, 2, 3);
      const Tape::NodeId tgt_xy = tape.leaf(Tensor::vector({tgt.x, tgt.y}));
      const Tape::NodeId diff = tape.sub(coords, tgt_xy);
      sq_acc = tape.add(sq_acc, tape.sum(tape.mul(diff, diff)));
      const auto row = one_hot_row(tgt);
      const Tape::NodeId onehot = tape.leaf(Tensor::vector({row[2], row[3], row[4]}));
      ce_acc = tape.add(ce_acc, tape.cross_entropy_loss(logits, onehot));
      prev_point = row;
    }
    prev_embed = stroke_embed;
  }

  LossNodes out;
  out.n_points = target.points.size();
  out.global_steps = spans.size();
  const double n = static_cast<double>(out.n_points);
  out.coord_mse = tape.scale(sq_acc, 1.0 / (2.0 * n));
  out.pen_ce = tape.scale(ce_acc, 1.0 / n);
  out.total = tape.add(out.coord_mse, tape.scale(out.pen_ce, pen_weight));
  return out;
}

LossBreakdown teacher_forced_loss(const HDecoderConfig& config, const ParamSet& params,
                                  const std::vector<double>& latent,
                                  const Stroke5Sequence& target, double pen_weight) {
  Tape tape;
  const ParamNodes nodes = leaf_params(tape, params, /*requires_grad=*/false);
  const Tape::NodeId latent_leaf = tape.leaf(Tensor::vector(latent));
  const LossNodes nodes_out =
      teacher_forced_loss_graph(tape, config, nodes, latent_leaf, target, pen_weight);
  LossBreakdown out;
  out.total = tape.value(nodes_out.total).data[0];
  out.coord_mse = tape.value(nodes_out.coord_mse).data[0];
  out.pen_ce = tape.value(nodes_out.pen_ce).data[0];
  out.n_points = nodes_out.n_points;
  out.global_steps = nodes_out.global_steps;
  return out;
}

SampleResult sample(const HDecoderConfig& config, const ParamSet& params,
                    const std::vector<double>& latent, const UnrollLimits& limits,
                    SampleMode mode, std::uint64_t seed, double temperature) {
  if (limits.max_strokes < 1 || limits.max_points_per_stroke < 1)
    fail_validation("sample: unroll limits must be >= 1");
  Rng rng(seed);

  auto choose_pen = [&](const PointPrediction& pred) -> Pen {
    if (mode == SampleMode::Greedy) return pred.pen_argmax();
    const auto probs = pred.pen_probs(temperature);
    const double u = rng.next_double();
    double cum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      cum += probs[i];
      if (u < cum) return static_cast<Pen>(i);
    }
    return Pen::End;
  };

  SampleResult result;
  LstmState global_state{init_global(config, params, latent),
                         std::vector<double>(config.hidden_global, 0.0)};
  std::vector<double> prev_embed(config.stroke_embed_dim, 0.0);
  std::array<double, 5> prev_point = start_token().as_row();

  for (std::size_t stroke_idx = 0; stroke_idx < limits.max_strokes; ++stroke_idx) {
    const GlobalStep g = global_step(config, params, global_state, latent, prev_embed);
    global_state = g.state;
    prev_embed = g.stroke_embed;
    const bool last_stroke = (stroke_idx + 1 == limits.max_strokes);

    LstmState local_state{init_local(config, params, g.stroke_embed),
                          std::vector<double>(config.hidden_local, 0.0)};
    bool stroke_open = true;
    for (std::size_t point_idx = 0;
         stroke_open && point_idx < limits.max_points_per_stroke; ++point_idx) {
      const LocalStep l =
          local_step(config, params, local_state, g.stroke_embed, prev_point);
      local_state = l.state;
      ++result.local_steps;

      Pen pen = choose_pen(l.prediction);
      const bool last_point = (point_idx + 1 == limits.max_points_per_stroke);
      if (pen == Pen::Down && last_point) {
        pen = last_stroke ? Pen::End : Pen::Up;
        if (pen == Pen::End)
          ++result.forced_end;
        else
          ++result.forced_up;
      } else if (pen == Pen::Up && last_stroke) {
        pen = Pen::End;
        ++result.forced_end;
      }

      // Coordinates are raw affine outputs; clamp on emission and count it.
      double x = l.prediction.x;
      double y = l.prediction.y;
      if (x < 0.0 || x > 1.0) {
        x = std::clamp(x, 0.0, 1.0);
        ++result.clamped_coords;
      }
      if (y < 0.0 || y > 1.0) {
        y = std::clamp(y, 0.0, 1.0);
        ++result.clamped_coords;
      }
      const Point5 emitted{x, y, pen};
      result.sequence.points.push_back(emitted);
      prev_point = emitted.as_row();

      if (pen != Pen::Down) stroke_open = false;
      if (pen == Pen::End) {
        validate(result.sequence);
        return result;
      }
    }
  }
  // Unreachable: the final point of the final allowed stroke is forced to End.
  fail_validation("sample: unroll did not terminate");
}

}  // namespace hdecoder

PretextRun train_pretext(const std::vector<VectorSketch>& corpus,
                         const ConvEncoderConfig& encoder_config,
                         const HDecoderConfig& decoder_config, std::size_t raster_thickness,
                         const PretextTrainConfig& train) {
  if (corpus.empty()) fail_validation("train_pretext: corpus is empty");
  if (encoder_config.latent_dim != decoder_config.latent_dim)
    fail_validation("train_pretext: encoder latent_dim " +
                    std::to_string(encoder_config.latent_dim) +
                    " does not match decoder latent_dim " +
                    std::to_string(decoder_config.latent_dim));
  if (train.batch_size < 1) fail_validation("train_pretext: batch_size must be >= 1");
  if (train.epochs < 1) fail_validation("train_pretext: epochs must be >= 1");

  PretextRun run;
  run.model.encoder = encoder_config;
  run.model.decoder = decoder_config;
  run.model.raster_thickness = raster_thickness;

  Rng init_rng(mix_seed(train.seed, 0));
  encoder::init_params(encoder_config, run.model.params, init_rng);
  hdecoder::init_params(decoder_config, run.model.params, init_rng);

  // Rasters and targets are fixed; precompute once.
  std::vector<RasterSketch> rasters;
  std::vector<Stroke5Sequence> targets;
  rasters.reserve(corpus.size());
  targets.reserve(corpus.size());
  for (const VectorSketch& s : corpus) {
    rasters.push_back(rasterize(s, encoder_config.input_size, encoder_config.input_size,
                                raster_thickness));
    targets.push_back(encode_stroke5(s));
  }

  OptimizerState opt = train.optimizer == OptKind::Adam
                           ? OptimizerState::adam(train.learning_rate)
                           : OptimizerState::sgd(train.learning_rate);
  Rng shuffle_rng(mix_seed(train.seed, 1));

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<hdecoder::LossBreakdown> item_losses(corpus.size());
  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    shuffle_rng.shuffle(order);

    for (std::size_t batch_start = 0; batch_start < order.size();
         batch_start += train.batch_size) {
      const std::size_t batch_end =
          std::min(order.size(), batch_start + train.batch_size);
      std::vector<Tensor> grad_acc;
      grad_acc.reserve(run.model.params.size());
      for (const auto& [name, t] : run.model.params.items()) {
        (void)name;
        grad_acc.push_back(Tensor::zeros(t.shape));
      }

      for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
        const std::size_t item = order[bi];
        Tape tape;
        const ParamNodes nodes = leaf_params(tape, run.model.params, true);
        const Tape::NodeId latent = encoder::forward(
            tape, encoder_config, nodes, encoder::raster_leaf(tape, rasters[item]));
        const hdecoder::LossNodes loss = hdecoder::teacher_forced_loss_graph(
            tape, decoder_config, nodes, latent, targets[item], train.pen_weight);
        tape.backward(loss.total);
        std::size_t pi = 0;
        for (const auto& [name, t] : run.model.params.items()) {
          (void)t;
          const Tensor g = tape.grad(nodes.at(name));
          for (std::size_t j = 0; j < g.numel(); ++j) grad_acc[pi].data[j] += g.data[j];
          ++pi;
        }
        item_losses[item].total = tape.value(loss.total).data[0];
        item_losses[item].coord_mse = tape.value(loss.coord_mse).data[0];
        item_losses[item].pen_ce = tape.value(loss.pen_ce).data[0];
      }

      const double inv = 1.0 / static_cast<double>(batch_end - batch_start);
      for (Tensor& g : grad_acc)
        for (double& v : g.data) v *= inv;
      optimizer_step(opt, run.model.params, grad_acc);
    }

    // Epoch means reduce in item-index order so the curve does not depend on
    // the shuffle's summation order.
    EpochLoss epoch_loss;
    epoch_loss.epoch = epoch;
    for (const hdecoder::LossBreakdown& l : item_losses) {
      epoch_loss.total += l.total;
      epoch_loss.coord_mse += l.coord_mse;
      epoch_loss.pen_ce += l.pen_ce;
    }
    const double inv_n = 1.0 / static_cast<double>(order.size());
    epoch_loss.total *= inv_n;
    epoch_loss.coord_mse *= inv_n;
    epoch_loss.pen_ce *= inv_n;
    run.curve.push_back(epoch_loss);
  }
  return run;
}

}  // namespace stk
