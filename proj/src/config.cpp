#include "config.hpp"

#include <set>

#include <json.hpp>

#include "error.hpp"

namespace stk {

namespace {

using json = nlohmann::json;

json parse_object(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail_config(std::string(what) + ": malformed JSON");
  if (!j.is_object()) fail_config(std::string(what) + ": expected a JSON object");
  return j;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& scope) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key))
      fail_config("unknown key '" + (scope.empty() ? key : scope + "." + key) + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail_config(std::string("key '") + key + "' has the wrong type");
  }
}

double get_positive(const json& j, const char* key, double fallback) {
  const double v = get_or<double>(j, key, fallback);
  if (!(v > 0.0)) fail_config(std::string("key '") + key + "' must be > 0");
  return v;
}

void check_version(const json& j, const char* what) {
  if (j.contains("format_version") && j.at("format_version").get<int>() != 1)
    fail_config(std::string(what) + ": unsupported format_version");
}

OptKind parse_optimizer(const json& j) {
  const std::string name = get_or<std::string>(j, "optimizer", "adam");
  if (name == "adam") return OptKind::Adam;
  if (name == "sgd") return OptKind::Sgd;
  fail_config("optimizer must be 'adam' or 'sgd', got '" + name + "'");
}

struct RasterBlock {
  std::size_t size = 32;
  std::size_t thickness = 1;
};

RasterBlock parse_raster(const json& parent) {
  RasterBlock r;
  if (!parent.contains("raster")) return r;
  const json& j = parent.at("raster");
  reject_unknown(j, {"size", "thickness"}, "raster");
  r.size = get_or<std::size_t>(j, "size", r.size);
  r.thickness = get_or<std::size_t>(j, "thickness", r.thickness);
  if (r.size < 8) fail_config("raster.size must be >= 8");
  if (r.thickness < 1) fail_config("raster.thickness must be >= 1");
  return r;
}

ConvEncoderConfig parse_encoder(const json& parent, std::size_t input_size) {
  ConvEncoderConfig c;
  c.input_size = input_size;
  if (!parent.contains("encoder")) return c;
  const json& j = parent.at("encoder");
  reject_unknown(j, {"layers", "latent_dim"}, "encoder");
  if (j.contains("layers")) {
    if (!j.at("layers").is_array() || j.at("layers").empty())
      fail_config("encoder.layers must be a non-empty array");
    c.layers.clear();
    for (const auto& l : j.at("layers")) {
      reject_unknown(l, {"channels", "kernel", "stride", "pad"}, "encoder.layers[]");
      ConvLayerSpec spec;
      spec.channels = get_or<std::size_t>(l, "channels", spec.channels);
      spec.kernel = get_or<std::size_t>(l, "kernel", spec.kernel);
      spec.stride = get_or<std::size_t>(l, "stride", spec.stride);
      spec.pad = get_or<std::size_t>(l, "pad", spec.pad);
      c.layers.push_back(spec);
    }
  }
  c.latent_dim = get_or<std::size_t>(j, "latent_dim", c.latent_dim);
  if (c.latent_dim == 0) fail_config("encoder.latent_dim must be >= 1");
  return c;
}

}  // namespace

PretextSetup parse_pretext_config(const std::string& json_text) {
  const json j = parse_object(json_text, "pretext config");
  reject_unknown(j, {"format_version", "seed", "raster", "encoder", "decoder", "train"},
                 "");
  check_version(j, "pretext config");

  PretextSetup setup;
  const RasterBlock raster = parse_raster(j);
  setup.raster_size = raster.size;
  setup.raster_thickness = raster.thickness;
  setup.encoder = parse_encoder(j, raster.size);

  if (j.contains("decoder")) {
    const json& d = j.at("decoder");
    reject_unknown(d, {"hidden_global", "hidden_local", "stroke_embed_dim"}, "decoder");
    setup.decoder.hidden_global =
        get_or<std::size_t>(d, "hidden_global", setup.decoder.hidden_global);
    setup.decoder.hidden_local =
        get_or<std::size_t>(d, "hidden_local", setup.decoder.hidden_local);
    setup.decoder.stroke_embed_dim =
        get_or<std::size_t>(d, "stroke_embed_dim", setup.decoder.stroke_embed_dim);
  }
  setup.decoder.latent_dim = setup.encoder.latent_dim;

  setup.train.seed = get_or<std::uint64_t>(j, "seed", setup.train.seed);
  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(
        t, {"epochs", "batch_size", "learning_rate", "pen_weight", "optimizer"}, "train");
    setup.train.epochs = get_or<std::size_t>(t, "epochs", setup.train.epochs);
    setup.train.batch_size = get_or<std::size_t>(t, "batch_size", setup.train.batch_size);
    setup.train.learning_rate =
        get_or<double>(t, "learning_rate", setup.train.learning_rate);
    if (setup.train.learning_rate < 0.0) fail_config("train.learning_rate must be >= 0");
    setup.train.pen_weight = get_or<double>(t, "pen_weight", setup.train.pen_weight);
    if (setup.train.pen_weight < 0.0) fail_config("train.pen_weight must be >= 0");
    setup.train.optimizer = parse_optimizer(t);
  }
  return setup;
}

RetrievalSetup parse_retrieval_config(const std::string& json_text) {
  const json j = parse_object(json_text, "retrieval config");
  reject_unknown(
      j, {"format_version", "seed", "raster", "encoder", "embed", "train", "split"}, "");
  check_version(j, "retrieval config");

  RetrievalSetup setup;
  const RasterBlock raster = parse_raster(j);
  setup.raster_size = raster.size;
  setup.raster_thickness = raster.thickness;
  setup.encoder = parse_encoder(j, raster.size);

  if (j.contains("embed")) {
    const json& e = j.at("embed");
    reject_unknown(e, {"dim", "normalize", "distance"}, "embed");
    setup.embed.dim = get_or<std::size_t>(e, "dim", setup.embed.dim);
    if (setup.embed.dim == 0) fail_config("embed.dim must be >= 1");
    setup.embed.normalize = get_or<bool>(e, "normalize", setup.embed.normalize);
    const std::string dist = get_or<std::string>(e, "distance", "sqeuclidean");
    if (dist == "sqeuclidean")
      setup.embed.distance = EmbedDistance::SquaredEuclidean;
    else if (dist == "cosine")
      setup.embed.distance = EmbedDistance::Cosine;
    else
      fail_config("embed.distance must be 'sqeuclidean' or 'cosine'");
  }

  setup.train.seed = get_or<std::uint64_t>(j, "seed", setup.train.seed);
  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t, {"epochs", "batch_size", "learning_rate", "margin", "optimizer"},
                   "train");
    setup.train.epochs = get_or<std::size_t>(t, "epochs", setup.train.epochs);
    setup.train.batch_size = get_or<std::size_t>(t, "batch_size", setup.train.batch_size);
    setup.train.learning_rate =
        get_or<double>(t, "learning_rate", setup.train.learning_rate);
    if (setup.train.learning_rate < 0.0) fail_config("train.learning_rate must be >= 0");
    setup.train.margin = get_or<double>(t, "margin", setup.train.margin);
    if (setup.train.margin < 0.0) fail_config("train.margin must be >= 0");
    setup.train.optimizer = parse_optimizer(t);
  }

  if (j.contains("split")) {
    const json& s = j.at("split");
    reject_unknown(s, {"train_fraction", "seed"}, "split");
    setup.split_fraction = get_or<double>(s, "train_fraction", setup.split_fraction);
    if (setup.split_fraction < 0.0 || setup.split_fraction > 1.0)
      fail_config("split.train_fraction must be in [0,1]");
    setup.split_seed = get_or<std::uint64_t>(s, "seed", setup.split_seed);
  }
  return setup;
}

SynthSpec parse_synth_spec(const std::string& json_text) {
  const json j = parse_object(json_text, "synthetic spec");
  reject_unknown(j,
                 {"format_version", "canvas", "users", "min_primitives", "max_primitives",
                  "circle_points", "zigzag_segments", "box_points_per_edge", "jitter",
                  "photo_size", "photo_thickness"},
                 "");
  check_version(j, "synthetic spec");
  SynthSpec spec;
  spec.canvas = get_or<std::uint32_t>(j, "canvas", spec.canvas);
  spec.users = get_or<std::uint32_t>(j, "users", spec.users);
  if (spec.users == 0) fail_config("users must be >= 1");
  spec.min_primitives = get_or<std::uint32_t>(j, "min_primitives", spec.min_primitives);
  spec.max_primitives = get_or<std::uint32_t>(j, "max_primitives", spec.max_primitives);
  spec.circle_points = get_or<std::uint32_t>(j, "circle_points", spec.circle_points);
  spec.zigzag_segments = get_or<std::uint32_t>(j, "zigzag_segments", spec.zigzag_segments);
  spec.box_points_per_edge =
      get_or<std::uint32_t>(j, "box_points_per_edge", spec.box_points_per_edge);
  spec.jitter = get_or<double>(j, "jitter", spec.jitter);
  spec.photo_size = get_or<std::uint32_t>(j, "photo_size", spec.photo_size);
  spec.photo_thickness = get_or<std::uint32_t>(j, "photo_thickness", spec.photo_thickness);
  return spec;
}

SampleOptions parse_sample_options(const std::string& json_text) {
  const json j = parse_object(json_text, "sample options");
  reject_unknown(j,
                 {"format_version", "index", "mode", "seed", "temperature", "max_strokes",
                  "max_points_per_stroke"},
                 "");
  check_version(j, "sample options");
  SampleOptions opt;
  opt.index = get_or<long>(j, "index", opt.index);
  const std::string mode = get_or<std::string>(j, "mode", "greedy");
  if (mode == "greedy")
    opt.mode = SampleMode::Greedy;
  else if (mode == "stochastic")
    opt.mode = SampleMode::Stochastic;
  else
    fail_config("mode must be 'greedy' or 'stochastic'");
  opt.seed = get_or<std::uint64_t>(j, "seed", opt.seed);
  opt.temperature = get_positive(j, "temperature", opt.temperature);
  opt.limits.max_strokes = get_or<std::size_t>(j, "max_strokes", opt.limits.max_strokes);
  opt.limits.max_points_per_stroke =
      get_or<std::size_t>(j, "max_points_per_stroke", opt.limits.max_points_per_stroke);
  if (opt.limits.max_strokes < 1 || opt.limits.max_points_per_stroke < 1)
    fail_config("unroll limits must be >= 1");
  return opt;
}

MaskEvalSpec parse_mask_eval_spec(const std::string& json_text) {
  const json j = parse_object(json_text, "mask eval spec");
  reject_unknown(j, {"format_version", "fractions", "ends", "k"}, "");
  check_version(j, "mask eval spec");
  MaskEvalSpec spec;
  if (j.contains("fractions")) {
    spec.fractions = j.at("fractions").get<std::vector<double>>();
    if (spec.fractions.empty()) fail_config("fractions must be non-empty");
    for (double f : spec.fractions)
      if (f < 0.0 || f > 1.0) fail_config("fractions must lie in [0,1]");
  }
  if (j.contains("ends")) {
    spec.ends_late.clear();
    for (const auto& e : j.at("ends")) {
      const std::string name = e.get<std::string>();
      if (name == "early")
        spec.ends_late.push_back(false);
      else if (name == "late")
        spec.ends_late.push_back(true);
      else
        fail_config("ends entries must be 'early' or 'late'");
    }
    if (spec.ends_late.empty()) fail_config("ends must be non-empty");
  }
  spec.k = get_or<std::size_t>(j, "k", spec.k);
  if (spec.k < 1) fail_config("k must be >= 1");
  return spec;
}

}  // namespace stk
