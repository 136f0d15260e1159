#include "io.hpp"

#include <filesystem>

#include <json.hpp>

#include "error.hpp"
#include "util.hpp"

namespace stk {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;

[[noreturn]] void fail_line(const std::string& path, std::size_t line_no,
                            const std::string& what) {
  fail_validation(path + ":" + std::to_string(line_no) + ": " + what);
}

ordered_json parse_json(const std::string& text, const std::string& context) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) fail_validation(context + ": malformed JSON");
  return j;
}

}  // namespace

std::string sketch_to_json_line(const VectorSketch& sketch) {
  ordered_json j;
  j["id"] = sketch.id;
  j["user"] = sketch.user;
  j["canvas"] = {sketch.canvas_w, sketch.canvas_h};
  ordered_json strokes = ordered_json::array();
  for (const Stroke& s : sketch.strokes) {
    ordered_json stroke = ordered_json::array();
    for (const SketchPoint& p : s.points) stroke.push_back({p.x, p.y, p.t_ms});
    strokes.push_back(std::move(stroke));
  }
  j["strokes"] = std::move(strokes);
  return j.dump();
}

VectorSketch sketch_from_json_line(const std::string& line, std::size_t line_no) {
  const std::string ctx = "line " + std::to_string(line_no);
  ordered_json j = parse_json(line, ctx);
  if (!j.is_object()) fail_validation(ctx + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "id" && key != "user" && key != "canvas" && key != "strokes")
      fail_validation(ctx + ": unknown key '" + key + "'");
  }
  if (!j.contains("id") || !j["id"].is_string())
    fail_validation(ctx + ": missing string field 'id'");
  if (!j.contains("user") || !j["user"].is_string())
    fail_validation(ctx + ": missing string field 'user'");
  if (!j.contains("canvas") || !j["canvas"].is_array() || j["canvas"].size() != 2)
    fail_validation(ctx + ": 'canvas' must be [w,h]");
  if (!j.contains("strokes") || !j["strokes"].is_array())
    fail_validation(ctx + ": 'strokes' must be an array");

  VectorSketch sketch;
  sketch.id = j["id"].get<std::string>();
  sketch.user = j["user"].get<std::string>();
  for (int d = 0; d < 2; ++d) {
    const auto& c = j["canvas"][d];
    if (!c.is_number_unsigned() || c.get<std::uint64_t>() == 0)
      fail_validation(ctx + ": canvas dimensions must be positive integers");
  }
  sketch.canvas_w = j["canvas"][0].get<std::uint32_t>();
  sketch.canvas_h = j["canvas"][1].get<std::uint32_t>();

  for (const auto& stroke_json : j["strokes"]) {
    if (!stroke_json.is_array()) fail_validation(ctx + ": stroke must be an array");
    Stroke stroke;
    for (const auto& pt : stroke_json) {
      if (!pt.is_array() || pt.size() != 3 || !pt[0].is_number() || !pt[1].is_number() ||
          !pt[2].is_number_unsigned())
        fail_validation(ctx + ": point must be [x, y, t_ms] with integer t_ms");
      stroke.points.push_back(SketchPoint{pt[0].get<double>(), pt[1].get<double>(),
                                          pt[2].get<std::uint64_t>()});
    }
    sketch.strokes.push_back(std::move(stroke));
  }
  try {
    validate(sketch);
  } catch (const Error& e) {
    fail_validation(ctx + ": " + e.what());
  }
  return sketch;
}

std::vector<VectorSketch> load_sketches(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<VectorSketch> out;
  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      out.push_back(sketch_from_json_line(lines[i], i + 1));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Io) throw;
      fail_line(path, i + 1, e.what());
    }
  }
  return out;
}

void save_sketches(const std::string& path, const std::vector<VectorSketch>& sketches) {
  std::string out;
  for (const VectorSketch& s : sketches) {
    validate(s);
    out += sketch_to_json_line(s);
    out += '\n';
  }
  write_file_atomic(path, out);
}

void save_stroke5(const std::string& path, const std::vector<Stroke5Sequence>& seqs) {
  std::string out;
  for (const Stroke5Sequence& seq : seqs) {
    validate(seq);
    ordered_json rows = ordered_json::array();
    for (const Point5& p : seq.points) {
      const auto row = p.as_row();
      rows.push_back({row[0], row[1], static_cast<int>(row[2]), static_cast<int>(row[3]),
                      static_cast<int>(row[4])});
    }
    out += rows.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<Stroke5Sequence> load_stroke5(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<Stroke5Sequence> out;
  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string ctx = path + ":" + std::to_string(i + 1);
    ordered_json rows = parse_json(lines[i], ctx);
    if (!rows.is_array()) fail_validation(ctx + ": expected a JSON array of rows");
    Stroke5Sequence seq;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (!row.is_array() || row.size() != 5)
        fail_validation(ctx + ": row " + std::to_string(r) +
                        " must be [x, y, q1, q2, q3]");
      for (int c = 0; c < 5; ++c)
        if (!row[c].is_number())
          fail_validation(ctx + ": row " + std::to_string(r) + " has a non-numeric entry");
      const double q1 = row[2].get<double>();
      const double q2 = row[3].get<double>();
      const double q3 = row[4].get<double>();
      Pen pen;
      if (q1 == 1.0 && q2 == 0.0 && q3 == 0.0)
        pen = Pen::Down;
      else if (q1 == 0.0 && q2 == 1.0 && q3 == 0.0)
        pen = Pen::Up;
      else if (q1 == 0.0 && q2 == 0.0 && q3 == 1.0)
        pen = Pen::End;
      else
        fail_validation(ctx + ": row " + std::to_string(r) +
                        " pen state is not one-hot");
      seq.points.push_back(Point5{row[0].get<double>(), row[1].get<double>(), pen});
    }
    try {
      validate(seq);
    } catch (const Error& e) {
      fail_validation(ctx + ": " + e.what());
    }
    out.push_back(std::move(seq));
  }
  return out;
}

void save_pgm(const std::string& path, const RasterSketch& raster) {
  write_file_atomic(path, pgm_encode(raster));
}

RasterSketch load_pgm(const std::string& path) {
  try {
    return pgm_decode(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    fail_validation(path + ": " + e.what());
  }
}

void save_photos(const std::string& dir, const std::vector<PairedItem>& items) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail_io("cannot create directory: " + dir);
  for (const PairedItem& item : items)
    save_pgm(dir + "/" + item.sketch.id + ".pgm", item.photo);
}

std::vector<PairedItem> load_photos(const std::string& dir,
                                    const std::vector<VectorSketch>& sketches) {
  std::vector<PairedItem> out;
  out.reserve(sketches.size());
  for (const VectorSketch& s : sketches) {
    PairedItem item;
    item.sketch = s;
    item.photo = load_pgm(dir + "/" + s.id + ".pgm");
    out.push_back(std::move(item));
  }
  return out;
}

std::string loss_curve_csv(const std::vector<EpochLoss>& curve) {
  std::string out = "epoch,total,mse,ce\n";
  for (const EpochLoss& e : curve)
    out += std::to_string(e.epoch) + "," + fmt_double(e.total) + "," +
           fmt_double(e.coord_mse) + "," + fmt_double(e.pen_ce) + "\n";
  return out;
}

std::string coarse_to_fine_csv(const CoarseToFineCurve& curve) {
  std::string out = "bin,time_lo,time_hi,mean_length,n_strokes\n";
  for (const CoarseToFineBin& b : curve.bins)
    out += std::to_string(b.bin) + "," + fmt_double(b.time_lo) + "," +
           fmt_double(b.time_hi) + "," + fmt_double(b.mean_length) + "," +
           std::to_string(b.n_strokes) + "\n";
  return out;
}

std::string mask_eval_csv(const std::vector<MaskEvalRow>& rows, std::size_t k) {
  std::string out = "fraction,end,r_at_" + std::to_string(k) + "\n";
  for (const MaskEvalRow& r : rows)
    out += fmt_double(r.fraction) + "," + (r.late ? "late" : "early") + "," +
           fmt_double(r.r_at_k) + "\n";
  return out;
}

std::string ranking_csv(const RetrievalResult& result) {
  std::string out = "query_id,truth_id,truth_rank,top1_id\n";
  for (const QueryRanking& r : result.rankings) {
    std::size_t truth_rank = 0;  // 1-based; 0 if absent
    for (std::size_t i = 0; i < r.ranked_ids.size(); ++i) {
      if (r.ranked_ids[i] == r.truth_id) {
        truth_rank = i + 1;
        break;
      }
    }
    out += r.query_id + "," + r.truth_id + "," + std::to_string(truth_rank) + "," +
           (r.ranked_ids.empty() ? "" : r.ranked_ids.front()) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {

ordered_json encoder_to_json(const ConvEncoderConfig& c) {
  ordered_json layers = ordered_json::array();
  for (const ConvLayerSpec& l : c.layers)
    layers.push_back({{"channels", l.channels},
                      {"kernel", l.kernel},
                      {"stride", l.stride},
                      {"pad", l.pad}});
  return ordered_json{{"layers", std::move(layers)}, {"latent_dim", c.latent_dim}};
}

ConvEncoderConfig encoder_from_json(const ordered_json& j, std::size_t input_size) {
  ConvEncoderConfig c;
  c.input_size = input_size;
  c.layers.clear();
  for (const auto& l : j.at("layers"))
    c.layers.push_back(ConvLayerSpec{l.at("channels").get<std::size_t>(),
                                     l.at("kernel").get<std::size_t>(),
                                     l.at("stride").get<std::size_t>(),
                                     l.at("pad").get<std::size_t>()});
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  if (c.layers.empty()) fail_validation("checkpoint: encoder has no layers");
  return c;
}

ordered_json params_to_json(const ParamSet& params) {
  ordered_json out = ordered_json::object();
  for (const auto& [name, t] : params.items())
    out[name] = ordered_json{{"shape", t.shape}, {"data", t.data}};
  return out;
}

ParamSet params_from_json(const ordered_json& j) {
  ParamSet params;
  for (const auto& [name, entry] : j.items()) {
    Tensor t;
    t.shape = entry.at("shape").get<std::vector<std::size_t>>();
    t.data = entry.at("data").get<std::vector<double>>();
    if (t.data.size() != shape_numel(t.shape))
      fail_validation("checkpoint: parameter '" + name + "' data does not match shape");
    params.add(name, std::move(t));
  }
  return params;
}

// Every expected parameter must exist with the right shape, and nothing else
// may be present: a checkpoint either matches its config or is rejected.
void check_params_exact(const ParamSet& params, const ParamSet& expected) {
  for (const auto& [name, t] : expected.items()) {
    if (!params.has(name)) fail_validation("checkpoint: missing parameter '" + name + "'");
    if (!params.at(name).same_shape(t))
      fail_validation("checkpoint: parameter '" + name + "' shape " +
                      params.at(name).shape_str() + " does not match expected " +
                      t.shape_str());
  }
  for (const auto& [name, t] : params.items()) {
    (void)t;
    if (!expected.has(name))
      fail_validation("checkpoint: unexpected parameter '" + name + "'");
  }
}

ordered_json load_checkpoint_json(const std::string& path, const char* kind) {
  ordered_json j = parse_json(read_file(path), path);
  if (!j.is_object() || !j.contains("format_version") ||
      !j["format_version"].is_number_integer() ||
      j["format_version"].get<int>() != kFormatVersion)
    fail_validation(path + ": missing or unsupported format_version");
  if (!j.contains("kind") || !j["kind"].is_string() ||
      j["kind"].get<std::string>() != kind)
    fail_validation(path + ": not a " + std::string(kind) + " checkpoint");
  return j;
}

}  // namespace

void save_pretext_checkpoint(const std::string& path, const PretextModel& model) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "pretext";
  j["raster"] = {{"size", model.encoder.input_size},
                 {"thickness", model.raster_thickness}};
  j["encoder"] = encoder_to_json(model.encoder);
  j["decoder"] = {{"latent_dim", model.decoder.latent_dim},
                  {"hidden_global", model.decoder.hidden_global},
                  {"hidden_local", model.decoder.hidden_local},
                  {"stroke_embed_dim", model.decoder.stroke_embed_dim}};
  j["params"] = params_to_json(model.params);
  write_file_atomic(path, j.dump());
}

PretextModel load_pretext_checkpoint(const std::string& path) {
  const ordered_json j = load_checkpoint_json(path, "pretext");
  try {
    PretextModel model;
    model.encoder =
        encoder_from_json(j.at("encoder"), j.at("raster").at("size").get<std::size_t>());
    model.raster_thickness = j.at("raster").at("thickness").get<std::size_t>();
    const auto& d = j.at("decoder");
    model.decoder.latent_dim = d.at("latent_dim").get<std::size_t>();
    model.decoder.hidden_global = d.at("hidden_global").get<std::size_t>();
    model.decoder.hidden_local = d.at("hidden_local").get<std::size_t>();
    model.decoder.stroke_embed_dim = d.at("stroke_embed_dim").get<std::size_t>();
    if (model.encoder.latent_dim != model.decoder.latent_dim)
      fail_validation(path + ": encoder and decoder latent_dim disagree");
    model.params = params_from_json(j.at("params"));

    ParamSet expected;
    Rng rng(0);
    encoder::init_params(model.encoder, expected, rng);
    hdecoder::init_params(model.decoder, expected, rng);
    check_params_exact(model.params, expected);
    return model;
  } catch (const ordered_json::exception& e) {
    fail_validation(path + ": " + e.what());
  }
}

void save_retrieval_checkpoint(const std::string& path, const EmbeddingModel& model) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "retrieval";
  j["raster"] = {{"size", model.encoder.input_size},
                 {"thickness", model.raster_thickness}};
  j["encoder"] = encoder_to_json(model.encoder);
  j["embed"] = {{"dim", model.embed.dim},
                {"normalize", model.embed.normalize},
                {"distance", model.embed.distance == EmbedDistance::Cosine
                                 ? "cosine"
                                 : "sqeuclidean"}};
  j["params"] = params_to_json(model.params);
  write_file_atomic(path, j.dump());
}

EmbeddingModel load_retrieval_checkpoint(const std::string& path) {
  const ordered_json j = load_checkpoint_json(path, "retrieval");
  try {
    EmbeddingModel model;
    model.encoder =
        encoder_from_json(j.at("encoder"), j.at("raster").at("size").get<std::size_t>());
    model.raster_thickness = j.at("raster").at("thickness").get<std::size_t>();
    const auto& e = j.at("embed");
    model.embed.dim = e.at("dim").get<std::size_t>();
    model.embed.normalize = e.at("normalize").get<bool>();
    const std::string dist = e.at("distance").get<std::string>();
    if (dist == "cosine")
      model.embed.distance = EmbedDistance::Cosine;
    else if (dist == "sqeuclidean")
      model.embed.distance = EmbedDistance::SquaredEuclidean;
    else
      fail_validation(path + ": unknown distance '" + dist + "'");
    model.params = params_from_json(j.at("params"));

    ParamSet expected;
    Rng rng(0);
    retrieval::init_params(model.encoder, model.embed, expected, rng);
    check_params_exact(model.params, expected);
    return model;
  } catch (const ordered_json::exception& e) {
    fail_validation(path + ": " + e.what());
  }
}

std::string checkpoint_kind(const std::string& path) {
  const ordered_json j = parse_json(read_file(path), path);
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    fail_validation(path + ": not a checkpoint file");
  return j["kind"].get<std::string>();
}

}  // namespace stk
