#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "gradcheck.hpp"
#include "hdecoder.hpp"
#include "test_helpers.hpp"

using namespace stk;

namespace {

HDecoderConfig tiny_config(std::size_t d = 4, std::size_t hg = 5, std::size_t hl = 6,
                           std::size_t e = 3) {
  HDecoderConfig c;
  c.latent_dim = d;
  c.hidden_global = hg;
  c.hidden_local = hl;
  c.stroke_embed_dim = e;
  return c;
}

ParamSet make_params(const HDecoderConfig& config, std::uint64_t seed) {
  ParamSet params;
  Rng rng(seed);
  hdecoder::init_params(config, params, rng);
  return params;
}

// Hand-unrolled scalar LSTM cell, written directly from the update formulas.
struct OracleCell {
  const Tensor& w_x;
  const Tensor& w_h;
  const Tensor& bias;

  void step(const std::vector<double>& x, std::vector<double>& h,
            std::vector<double>& c) const {
    const std::size_t H = w_h.shape[1];
    std::vector<double> nh(H), nc(H);
    for (std::size_t i = 0; i < H; ++i) {
      auto gate = [&](std::size_t row) {
        double acc = bias.data[row];
        for (std::size_t k = 0; k < x.size(); ++k)
          acc += w_x.data[row * x.size() + k] * x[k];
        for (std::size_t k = 0; k < H; ++k) acc += w_h.data[row * H + k] * h[k];
        return acc;
      };
      const double gi = 1.0 / (1.0 + std::exp(-gate(i)));
      const double gf = 1.0 / (1.0 + std::exp(-gate(H + i)));
      const double gg = std::tanh(gate(2 * H + i));
      const double go = 1.0 / (1.0 + std::exp(-gate(3 * H + i)));
      nc[i] = gf * c[i] + gi * gg;
      nh[i] = go * std::tanh(nc[i]);
    }
    h = nh;
    c = nc;
  }
};

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

Stroke5Sequence toy_target() {
  Stroke5Sequence seq;
  seq.points = {Point5{0.1, 0.2, Pen::Down}, Point5{0.3, 0.4, Pen::Down},
                Point5{0.5, 0.6, Pen::Up},  Point5{0.7, 0.8, Pen::Down},
                Point5{0.9, 0.1, Pen::Down}, Point5{0.2, 0.3, Pen::End}};
  return seq;
}

}  // namespace

TEST_CASE("init_global: zero map -> zero state; identity map -> the latent itself") {
  const HDecoderConfig config = tiny_config(4, 4, 4, 3);
  ParamSet params = make_params(config, 1);

  auto& w = params.at("decoder.global_init.weight");
  auto& b = params.at("decoder.global_init.bias");
  for (double& v : w.data) v = 0.0;
  for (double& v : b.data) v = 0.0;
  CHECK(hdecoder::init_global(config, params, {1, 2, 3, 4}) ==
        std::vector<double>{0, 0, 0, 0});

  for (std::size_t i = 0; i < 4; ++i) w.at2(i, i) = 1.0;
  CHECK(hdecoder::init_global(config, params, {1, 2, 3, 4}) ==
        std::vector<double>{1, 2, 3, 4});

  CHECK_THROWS_AS(hdecoder::init_global(config, params, {1, 2}), Error);
}

TEST_CASE("init maps match a direct matrix-vector oracle") {
  const HDecoderConfig config = tiny_config();
  ParamSet params = make_params(config, 2);
  Rng rng(3);
  const auto latent = random_vec(rng, config.latent_dim);
  const auto got = hdecoder::init_global(config, params, latent);
  const Tensor& w = params.at("decoder.global_init.weight");
  const Tensor& b = params.at("decoder.global_init.bias");
  for (std::size_t r = 0; r < config.hidden_global; ++r) {
    double expect = b.data[r];
    for (std::size_t k = 0; k < config.latent_dim; ++k)
      expect += w.at2(r, k) * latent[k];
    CHECK(got[r] == doctest::Approx(expect).epsilon(1e-12));
  }

  const auto embed = random_vec(rng, config.stroke_embed_dim);
  const auto h0l = hdecoder::init_local(config, params, embed);
  const Tensor& wl = params.at("decoder.local_init.weight");
  const Tensor& bl = params.at("decoder.local_init.bias");
  for (std::size_t r = 0; r < config.hidden_local; ++r) {
    double expect = bl.data[r];
    for (std::size_t k = 0; k < config.stroke_embed_dim; ++k)
      expect += wl.at2(r, k) * embed[k];
    CHECK(h0l[r] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("global_step: zero weights emit the readout bias; deterministic") {
  const HDecoderConfig config = tiny_config();
  ParamSet params = make_params(config, 4);
  for (auto& [name, t] : params.items()) {
    if (name == "decoder.global_out.bias") continue;
    if (name.rfind("decoder.global", 0) == 0)
      for (double& v : t.data) v = 0.0;
  }
  auto& bias = params.at("decoder.global_out.bias");
  for (std::size_t i = 0; i < bias.numel(); ++i) bias.data[i] = 0.5 + double(i);

  Rng rng(5);
  const LstmState state{random_vec(rng, config.hidden_global),
                        random_vec(rng, config.hidden_global)};
  const auto latent = random_vec(rng, config.latent_dim);
  const auto prev = random_vec(rng, config.stroke_embed_dim);
  const auto step = hdecoder::global_step(config, params, state, latent, prev);
  // With zero LSTM and readout weights, S_i = b regardless of inputs. (h is
  // not zero because the forget/output gates still act on the carried state.)
  for (std::size_t i = 0; i < bias.numel(); ++i)
    CHECK(step.stroke_embed[i] == bias.data[i]);

  const auto again = hdecoder::global_step(config, params, state, latent, prev);
  CHECK(again.stroke_embed == step.stroke_embed);
  CHECK(again.state.h == step.state.h);
}

TEST_CASE("global and local steps match the hand-unrolled scalar cell oracle") {
  const HDecoderConfig config = tiny_config(4, 5, 6, 3);
  ParamSet params = make_params(config, 6);
  Rng rng(7);

  const auto latent = random_vec(rng, config.latent_dim);
  const auto prev_embed = random_vec(rng, config.stroke_embed_dim);
  LstmState state{random_vec(rng, config.hidden_global),
                  random_vec(rng, config.hidden_global)};

  const auto got = hdecoder::global_step(config, params, state, latent, prev_embed);

  std::vector<double> x = latent;
  x.insert(x.end(), prev_embed.begin(), prev_embed.end());
  std::vector<double> h = state.h, c = state.c;
  OracleCell{params.at("decoder.global_lstm.w_x"), params.at("decoder.global_lstm.w_h"),
             params.at("decoder.global_lstm.bias")}
      .step(x, h, c);
  for (std::size_t i = 0; i < h.size(); ++i) {
    CHECK(got.state.h[i] == doctest::Approx(h[i]).epsilon(1e-10));
    CHECK(got.state.c[i] == doctest::Approx(c[i]).epsilon(1e-10));
  }
  const Tensor& wy = params.at("decoder.global_out.weight");
  const Tensor& by = params.at("decoder.global_out.bias");
  for (std::size_t r = 0; r < config.stroke_embed_dim; ++r) {
    double expect = by.data[r];
    for (std::size_t k = 0; k < config.hidden_global; ++k)
      expect += wy.at2(r, k) * h[k];
    CHECK(got.stroke_embed[r] == doctest::Approx(expect).epsilon(1e-10));
  }

  // Local step against the same oracle, conditioned on the start token.
  const auto embed = random_vec(rng, config.stroke_embed_dim);
  LstmState lstate{random_vec(rng, config.hidden_local),
                   random_vec(rng, config.hidden_local)};
  const auto p0 = start_token().as_row();
  const auto lstep = hdecoder::local_step(config, params, lstate, embed, p0);

  std::vector<double> lx = embed;
  lx.insert(lx.end(), p0.begin(), p0.end());
  std::vector<double> lh = lstate.h, lc = lstate.c;
  OracleCell{params.at("decoder.local_lstm.w_x"), params.at("decoder.local_lstm.w_h"),
             params.at("decoder.local_lstm.bias")}
      .step(lx, lh, lc);
  const Tensor& wl = params.at("decoder.local_out.weight");
  const Tensor& bl = params.at("decoder.local_out.bias");
  std::vector<double> head(5);
  for (std::size_t r = 0; r < 5; ++r) {
    head[r] = bl.data[r];
    for (std::size_t k = 0; k < config.hidden_local; ++k)
      head[r] += wl.at2(r, k) * lh[k];
  }
  CHECK(lstep.prediction.x == doctest::Approx(head[0]).epsilon(1e-10));
  CHECK(lstep.prediction.y == doctest::Approx(head[1]).epsilon(1e-10));
  for (int i = 0; i < 3; ++i)
    CHECK(lstep.prediction.pen_logits[i] ==
          doctest::Approx(head[2 + i]).epsilon(1e-10));
}

TEST_CASE("local_step with zero weights emits the readout bias") {
  const HDecoderConfig config = tiny_config();
  ParamSet params = make_params(config, 8);
  for (auto& [name, t] : params.items())
    if (name.rfind("decoder.local", 0) == 0 && name != "decoder.local_out.bias")
      for (double& v : t.data) v = 0.0;
  auto& bias = params.at("decoder.local_out.bias");
  bias.data = {0.1, 0.2, 0.3, 0.4, 0.5};

  Rng rng(9);
  const LstmState state{std::vector<double>(config.hidden_local, 0.0),
                        std::vector<double>(config.hidden_local, 0.0)};
  const auto step = hdecoder::local_step(config, params, state,
                                         random_vec(rng, config.stroke_embed_dim),
                                         start_token().as_row());
  CHECK(step.prediction.x == 0.1);
  CHECK(step.prediction.y == 0.2);
  CHECK(step.prediction.pen_logits == std::array<double, 3>{0.3, 0.4, 0.5});
}

TEST_CASE("pen probabilities sum to one; argmax is shift invariant, ties go low") {
  PointPrediction p;
  p.pen_logits = {0.2, 1.7, -0.4};
  const auto probs = p.pen_probs();
  CHECK(std::abs(probs[0] + probs[1] + probs[2] - 1.0) < 1e-12);
  CHECK(p.pen_argmax() == Pen::Up);

  Rng rng(10);
  for (int it = 0; it < 200; ++it) {
    PointPrediction a;
    for (auto& l : a.pen_logits) l = rng.uniform(-5, 5);
    PointPrediction b = a;
    const double shift = rng.uniform(-10, 10);
    for (auto& l : b.pen_logits) l += shift;
    CHECK(a.pen_argmax() == b.pen_argmax());
  }

  PointPrediction tie;
  tie.pen_logits = {1.0, 1.0, 1.0};
  CHECK(tie.pen_argmax() == Pen::Down);
  tie.pen_logits = {0.0, 2.0, 2.0};
  CHECK(tie.pen_argmax() == Pen::Up);
}

TEST_CASE("teacher forcing: constructed model has zero MSE; uniform logits give ln 3") {
  const HDecoderConfig config = tiny_config();
  ParamSet params = make_params(config, 11);
  // Zero every weight; bias the local head to the single target point.
  for (auto& [name, t] : params.items())
    for (double& v : t.data) v = 0.0;
  params.at("decoder.local_out.bias").data = {0.4, 0.7, 0.0, 0.0, 0.0};

  Stroke5Sequence target;
  target.points = {Point5{0.4, 0.7, Pen::End}};
  const auto loss = hdecoder::teacher_forced_loss(config, params, {0, 0, 0, 0}, target);
  CHECK(loss.coord_mse == 0.0);
  CHECK(loss.pen_ce == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(loss.total == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(loss.global_steps == 1);
  CHECK(loss.n_points == 1);
}

TEST_CASE("teacher forcing: one global step per target stroke; loss nonnegative") {
  const HDecoderConfig config = tiny_config();
  ParamSet params = make_params(config, 12);
  Rng rng(13);
  const auto latent = random_vec(rng, config.latent_dim);
  const auto loss = hdecoder::teacher_forced_loss(config, params, latent, toy_target());
  CHECK(loss.global_steps == 2);
  CHECK(loss.n_points == 6);
  CHECK(loss.total >= 0.0);
  CHECK(loss.total == doctest::Approx(loss.coord_mse + loss.pen_ce).epsilon(1e-12));

  const double w = 2.5;
  const auto weighted =
      hdecoder::teacher_forced_loss(config, params, latent, toy_target(), w);
  CHECK(weighted.total ==
        doctest::Approx(weighted.coord_mse + w * weighted.pen_ce).epsilon(1e-12));
}

TEST_CASE("teacher-forced loss gradient matches finite differences on a toy") {
  const HDecoderConfig config = tiny_config(3, 4, 4, 3);
  ParamSet params = make_params(config, 14);
  Rng rng(15);
  const auto latent = random_vec(rng, config.latent_dim);

  std::vector<Tensor> tensors;
  std::vector<std::string> names;
  for (const auto& [name, t] : params.items()) {
    names.push_back(name);
    tensors.push_back(t);
  }
  const GradCheckResult r = grad_check(
      [&](Tape& tape, const std::vector<Tape::NodeId>& p) {
        ParamNodes nodes;
        for (std::size_t i = 0; i < names.size(); ++i) nodes[names[i]] = p[i];
        const auto latent_leaf = tape.leaf(Tensor::vector(latent));
        return hdecoder::teacher_forced_loss_graph(tape, config, nodes, latent_leaf,
                                                   toy_target(), 1.0)
            .total;
      },
      tensors);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("sample: limits (1,1) force a single pen-end point") {
  const HDecoderConfig config = tiny_config();
  ParamSet params = make_params(config, 16);
  Rng rng(17);
  const auto latent = random_vec(rng, config.latent_dim);
  const auto result = hdecoder::sample(config, params, latent, UnrollLimits{1, 1},
                                       SampleMode::Greedy);
  REQUIRE(result.sequence.points.size() == 1);
  CHECK(result.sequence.points[0].pen == Pen::End);
  CHECK(result.local_steps == 1);
}

TEST_CASE("sample: greedy is deterministic; stochastic is seed-deterministic") {
  const HDecoderConfig config = tiny_config();
  ParamSet params = make_params(config, 18);
  Rng rng(19);
  const auto latent = random_vec(rng, config.latent_dim);
  const UnrollLimits limits{5, 7};

  const auto a = hdecoder::sample(config, params, latent, limits, SampleMode::Greedy);
  const auto b = hdecoder::sample(config, params, latent, limits, SampleMode::Greedy);
  REQUIRE(a.sequence.points.size() == b.sequence.points.size());
  for (std::size_t i = 0; i < a.sequence.points.size(); ++i) {
    CHECK(a.sequence.points[i].x == b.sequence.points[i].x);
    CHECK(a.sequence.points[i].pen == b.sequence.points[i].pen);
  }

  const auto s1 =
      hdecoder::sample(config, params, latent, limits, SampleMode::Stochastic, 123, 0.8);
  const auto s2 =
      hdecoder::sample(config, params, latent, limits, SampleMode::Stochastic, 123, 0.8);
  CHECK(s1.sequence.points.size() == s2.sequence.points.size());
}

TEST_CASE("sample: fuzzing random models always yields valid, decodable sequences") {
  Rng rng(20);
  for (int it = 0; it < 200; ++it) {
    const HDecoderConfig config =
        tiny_config(1 + rng.below(4), 1 + rng.below(6), 1 + rng.below(6),
                    1 + rng.below(4));
    ParamSet params = make_params(config, rng.next_u64());
    // Stretch some weights so pen logits vary enough to hit all branches.
    for (auto& [name, t] : params.items()) {
      (void)name;
      for (double& v : t.data) v *= 1.0 + 3.0 * rng.next_double();
    }
    const auto latent = random_vec(rng, config.latent_dim, 2.0);
    const UnrollLimits limits{1 + rng.below(5), 1 + rng.below(6)};
    const SampleMode mode = rng.below(2) ? SampleMode::Greedy : SampleMode::Stochastic;
    const auto result = hdecoder::sample(config, params, latent, limits, mode,
                                         rng.next_u64(), 0.5 + rng.next_double());
    CHECK(result.local_steps <= limits.max_strokes * limits.max_points_per_stroke);
    const VectorSketch decoded = decode_stroke5(result.sequence);  // throws if invalid
    CHECK(decoded.strokes.size() <= limits.max_strokes);
    for (const Stroke& s : decoded.strokes)
      CHECK(s.points.size() <= limits.max_points_per_stroke);
  }
}

TEST_CASE("train_pretext: lr 0 leaves parameters and losses unchanged; seeds reproduce") {
  Rng rng(21);
  std::vector<VectorSketch> corpus;
  for (int i = 0; i < 3; ++i) corpus.push_back(test::random_sketch(rng, 1, 1, 3, 5));

  ConvEncoderConfig enc;
  enc.input_size = 8;
  enc.layers = {{2, 3, 2, 1}};
  enc.latent_dim = 3;
  const HDecoderConfig dec = tiny_config(3, 4, 4, 3);

  PretextTrainConfig train;
  train.seed = 5;
  train.epochs = 3;
  train.batch_size = 2;
  train.learning_rate = 0.0;

  const PretextRun run = train_pretext(corpus, enc, dec, 1, train);
  REQUIRE(run.curve.size() == 3);
  CHECK(run.curve[0].total == run.curve[1].total);
  CHECK(run.curve[1].total == run.curve[2].total);

  ParamSet fresh;
  Rng init_rng(mix_seed(train.seed, 0));
  encoder::init_params(enc, fresh, init_rng);
  hdecoder::init_params(dec, fresh, init_rng);
  for (std::size_t i = 0; i < fresh.size(); ++i)
    CHECK(run.model.params.items()[i].second.data == fresh.items()[i].second.data);

  train.learning_rate = 0.05;
  const PretextRun r1 = train_pretext(corpus, enc, dec, 1, train);
  const PretextRun r2 = train_pretext(corpus, enc, dec, 1, train);
  REQUIRE(r1.curve.size() == r2.curve.size());
  for (std::size_t i = 0; i < r1.curve.size(); ++i)
    CHECK(r1.curve[i].total == r2.curve[i].total);
  CHECK(r1.curve.back().total < r1.curve.front().total);  // it does optimize
}
