#include "retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "analysis.hpp"
#include "error.hpp"
#include "util.hpp"

namespace stk {

void Gallery::add(const std::string& item_id, std::vector<double> embedding) {
  for (const auto& [id, e] : items) {
    if (id == item_id) fail_validation("gallery: duplicate item id '" + item_id + "'");
    if (e.size() != embedding.size())
      fail_validation("gallery: embedding length " + std::to_string(embedding.size()) +
                      " does not match existing items (" + std::to_string(e.size()) + ")");
  }
  items.emplace_back(item_id, std::move(embedding));
}

namespace retrieval {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    fail_validation("distance: embedding lengths differ (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double embed_distance(const EmbedConfig& config, const std::vector<double>& a,
                      const std::vector<double>& b) {
  if (config.distance == EmbedDistance::SquaredEuclidean) return squared_distance(a, b);
  if (a.size() != b.size())
    fail_validation("distance: embedding lengths differ (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(na) * std::sqrt(nb);
  return denom == 0.0 ? 1.0 : 1.0 - dot / denom;
}

double triplet_loss(const std::vector<double>& anchor, const std::vector<double>& positive,
                    const std::vector<double>& negative, double margin) {
  const double dap = squared_distance(anchor, positive);
  const double dan = squared_distance(anchor, negative);
  return std::max(0.0, dap - dan + margin);
}

void init_params(const ConvEncoderConfig& encoder_config, const EmbedConfig& embed,
                 ParamSet& params, Rng& rng) {
  if (embed.dim == 0) fail_validation("embed config: dim must be >= 1");
  encoder::init_params(encoder_config, params, rng);
  params.add("embed.proj.weight",
             init_uniform({embed.dim, encoder_config.latent_dim},
                          encoder_config.latent_dim, rng));
  params.add("embed.proj.bias", Tensor::zeros({embed.dim}));
}

Tape::NodeId embed_forward(Tape& tape, const EmbeddingModel& model, const ParamNodes& nodes,
                           Tape::NodeId raster_input) {
  Tape::NodeId latent = encoder::forward(tape, model.encoder, nodes, raster_input);
  Tape::NodeId e = affine_node(tape, nodes.at("embed.proj.weight"),
                               nodes.at("embed.proj.bias"), latent);
  if (model.embed.normalize) e = tape.l2_normalize(e);
  return e;
}

std::vector<double> embed(const EmbeddingModel& model, const RasterSketch& raster) {
  Tape tape;
  const ParamNodes nodes = leaf_params(tape, model.params, false);
  const Tape::NodeId e =
      embed_forward(tape, model, nodes, encoder::raster_leaf(tape, raster));
  return tape.value(e).data;
}

SplitResult split_by_user(const std::vector<VectorSketch>& corpus, double train_fraction,
                          std::uint64_t seed) {
  if (train_fraction < 0.0 || train_fraction > 1.0)
    fail_validation("split_by_user: train_fraction must be in [0,1]");
  // Users keyed by first appearance so the split does not depend on any map
  // ordering subtleties.
  std::vector<std::string> user_order;
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].user.empty())
      fail_validation("split_by_user: sketch '" + corpus[i].id + "' has no user id");
    auto [it, inserted] = by_user.try_emplace(corpus[i].user);
    if (inserted) user_order.push_back(corpus[i].user);
    it->second.push_back(i);
  }

  SplitResult out;
  for (const std::string& user : user_order) {
    std::vector<std::size_t>& idx = by_user[user];
    if (idx.size() < 2) {
      out.warnings.push_back("user '" + user + "' has " + std::to_string(idx.size()) +
                             " sketch(es); assigned entirely to train");
      for (std::size_t i : idx) out.train.push_back(i);
      continue;
    }
    Rng rng(mix_seed(seed, fnv1a64(user)));
    rng.shuffle(idx);
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k < n_train)
        out.train.push_back(idx[k]);
      else
        out.test.push_back(idx[k]);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<std::string> rank(const std::vector<double>& query, const Gallery& gallery,
                              const EmbedConfig& config) {
  if (gallery.items.empty()) fail_validation("rank: gallery is empty");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(gallery.items.size());
  for (std::size_t i = 0; i < gallery.items.size(); ++i)
    scored.emplace_back(embed_distance(config, query, gallery.items[i].second), i);
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  out.reserve(scored.size());
  for (const auto& [dist, i] : scored) {
    (void)dist;
    out.push_back(gallery.items[i].first);
  }
  return out;
}

double recall_at_k(const std::vector<QueryRanking>& rankings, std::size_t k) {
  if (k < 1) fail_validation("recall_at_k: k must be >= 1");
  if (rankings.empty()) fail_validation("recall_at_k: no queries");
  std::size_t hits = 0;
  for (const QueryRanking& r : rankings) {
    if (r.truth_id.empty())
      fail_validation("recall_at_k: query '" + r.query_id + "' has no ground truth");
    const std::size_t top = std::min(k, r.ranked_ids.size());
    for (std::size_t i = 0; i < top; ++i) {
      if (r.ranked_ids[i] == r.truth_id) {
        ++hits;
        break;
      }
    }
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(rankings.size());
}

void warm_start_encoder(EmbeddingModel& model, const ParamSet& source) {
  std::size_t copied = 0;
  for (auto& [name, tensor] : model.params.items()) {
    if (name.rfind("encoder.", 0) != 0) continue;
    if (!source.has(name))
      fail_validation("warm start: checkpoint lacks parameter '" + name + "'");
    const Tensor& src = source.at(name);
    if (!src.same_shape(tensor))
      fail_validation("warm start: parameter '" + name + "' shape " + src.shape_str() +
                      " does not match model " + tensor.shape_str());
    tensor = src;
    ++copied;
  }
  if (copied == 0) fail_validation("warm start: no encoder parameters copied");
}

namespace {

RasterSketch render_query(const EmbeddingModel& model, const VectorSketch& sketch) {
  return rasterize(sketch, model.encoder.input_size, model.encoder.input_size,
                   model.raster_thickness);
}

}  // namespace

RetrievalRun train_retrieval(const std::vector<PairedItem>& pairs,
                             const ConvEncoderConfig& encoder_config,
                             const EmbedConfig& embed_config, std::size_t raster_thickness,
                             const TripletTrainConfig& train, const ParamSet* warm_start) {
  if (train.batch_size < 2)
    fail_validation("train_retrieval: batch_size must be >= 2 for in-batch negatives");
  if (pairs.size() < 2) fail_validation("train_retrieval: need at least 2 pairs");
  if (train.epochs < 1) fail_validation("train_retrieval: epochs must be >= 1");

  RetrievalRun run;
  run.model.encoder = encoder_config;
  run.model.embed = embed_config;
  run.model.raster_thickness = raster_thickness;

  Rng init_rng(mix_seed(train.seed, 0));
  init_params(encoder_config, embed_config, run.model.params, init_rng);
  if (warm_start) warm_start_encoder(run.model, *warm_start);

  std::vector<RasterSketch> sketch_rasters;
  sketch_rasters.reserve(pairs.size());
  for (const PairedItem& p : pairs) {
    if (p.photo.width != encoder_config.input_size ||
        p.photo.height != encoder_config.input_size)
      fail_validation("train_retrieval: photo raster " + std::to_string(p.photo.width) +
                      "x" + std::to_string(p.photo.height) + " does not match encoder size " +
                      std::to_string(encoder_config.input_size));
    sketch_rasters.push_back(render_query(run.model, p.sketch));
  }

  OptimizerState opt = train.optimizer == OptKind::Adam
                           ? OptimizerState::adam(train.learning_rate)
                           : OptimizerState::sgd(train.learning_rate);
  Rng shuffle_rng(mix_seed(train.seed, 1));
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_total = 0.0;
    std::size_t n_batches = 0;

    for (std::size_t batch_start = 0; batch_start + 1 < order.size();
         batch_start += train.batch_size) {
      const std::size_t batch_end = std::min(order.size(), batch_start + train.batch_size);
      const std::size_t b = batch_end - batch_start;
      if (b < 2) break;  // a trailing singleton has no in-batch negative

      Tape tape;
      const ParamNodes nodes = leaf_params(tape, run.model.params, true);
      std::vector<Tape::NodeId> anchors(b), positives(b);
      for (std::size_t i = 0; i < b; ++i) {
        const PairedItem& item = pairs[order[batch_start + i]];
        anchors[i] = embed_forward(tape, run.model, nodes,
                                   encoder::raster_leaf(tape, sketch_rasters[order[batch_start + i]]));
        positives[i] =
            embed_forward(tape, run.model, nodes, encoder::raster_leaf(tape, item.photo));
      }

      // mean over anchors i and in-batch negatives j != i of
      // max(0, d(a_i, p_i) - d(a_i, p_j) + margin)
      Tape::NodeId loss_acc = tape.leaf(Tensor::scalar(0.0));
      std::size_t n_terms = 0;
      for (std::size_t i = 0; i < b; ++i) {
        const Tape::NodeId dp = tape.sub(anchors[i], positives[i]);
        const Tape::NodeId dap = tape.sum(tape.mul(dp, dp));
        for (std::size_t j = 0; j < b; ++j) {
          if (j == i) continue;
          const Tape::NodeId dn = tape.sub(anchors[i], positives[j]);
          const Tape::NodeId dan = tape.sum(tape.mul(dn, dn));
          const Tape::NodeId hinge =
              tape.relu(tape.add_scalar(tape.sub(dap, dan), train.margin));
          loss_acc = tape.add(loss_acc, hinge);
          ++n_terms;
        }
      }
      const Tape::NodeId loss = tape.scale(loss_acc, 1.0 / static_cast<double>(n_terms));
      tape.backward(loss);

      std::vector<Tensor> grads;
      grads.reserve(run.model.params.size());
      for (const auto& [name, t] : run.model.params.items()) {
        (void)t;
        grads.push_back(tape.grad(nodes.at(name)));
      }
      optimizer_step(opt, run.model.params, grads);
      epoch_total += tape.value(loss).data[0];
      ++n_batches;
    }

    EpochLoss e;
    e.epoch = epoch;
    e.total = n_batches ? epoch_total / static_cast<double>(n_batches) : 0.0;
    run.curve.push_back(e);
  }
  return run;
}

RetrievalResult evaluate(const EmbeddingModel& model, const std::vector<PairedItem>& test) {
  if (test.empty()) fail_validation("evaluate: test set is empty");
  Gallery gallery;
  for (const PairedItem& p : test) gallery.add(p.sketch.id, embed(model, p.photo));

  RetrievalResult result;
  result.gallery_size = gallery.items.size();
  for (const PairedItem& p : test) {
    QueryRanking r;
    r.query_id = p.sketch.id;
    r.truth_id = p.sketch.id;  // pairing by index: photo shares the sketch id
    r.ranked_ids = rank(embed(model, render_query(model, p.sketch)), gallery, model.embed);
    result.rankings.push_back(std::move(r));
  }
  result.r_at_1 = recall_at_k(result.rankings, 1);
  result.r_at_10 = recall_at_k(result.rankings, 10);
  return result;
}

std::vector<MaskEvalRow> masked_eval(const EmbeddingModel& model,
                                     const std::vector<PairedItem>& test,
                                     const std::vector<double>& fractions,
                                     const std::vector<bool>& ends_late, std::size_t k) {
  if (test.empty()) fail_validation("masked_eval: test set is empty");
  for (double f : fractions)
    if (f < 0.0 || f > 1.0)
      fail_validation("masked_eval: fraction " + fmt_double(f) + " outside [0,1]");

  Gallery gallery;
  for (const PairedItem& p : test) gallery.add(p.sketch.id, embed(model, p.photo));

  std::vector<MaskEvalRow> rows;
  for (bool late : ends_late) {
    for (double fraction : fractions) {
      std::vector<QueryRanking> rankings;
      for (const PairedItem& p : test) {
        const VectorSketch masked =
            mask_strokes(p.sketch, fraction, late ? MaskEnd::Late : MaskEnd::Early);
        QueryRanking r;
        r.query_id = p.sketch.id;
        r.truth_id = p.sketch.id;
        r.ranked_ids = rank(embed(model, render_query(model, masked)), gallery, model.embed);
        rankings.push_back(std::move(r));
      }
      rows.push_back(MaskEvalRow{fraction, late, recall_at_k(rankings, k)});
    }
  }
  return rows;
}

}  // namespace retrieval

}  // namespace stk
