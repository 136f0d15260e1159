#include "encoder.hpp"

#include "error.hpp"

namespace stk {

ParamNodes leaf_params(Tape& tape, const ParamSet& params, bool requires_grad) {
  ParamNodes nodes;
  for (const auto& [name, tensor] : params.items())
    nodes[name] = tape.leaf(tensor, requires_grad);
  return nodes;
}

namespace encoder {

void init_params(const ConvEncoderConfig& config, ParamSet& params, Rng& rng) {
  if (config.layers.empty()) fail_validation("encoder config has no conv layers");
  std::size_t in_channels = 1;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const ConvLayerSpec& layer = config.layers[i];
    if (layer.kernel == 0 || layer.stride == 0 || layer.channels == 0)
      fail_validation("encoder conv layer " + std::to_string(i) + " has a zero field");
    const std::size_t fan_in = in_channels * layer.kernel * layer.kernel;
    params.add("encoder.conv" + std::to_string(i) + ".weight",
               init_uniform({layer.channels, in_channels, layer.kernel, layer.kernel},
                            fan_in, rng));
    params.add("encoder.conv" + std::to_string(i) + ".bias",
               Tensor::zeros({layer.channels}));
    in_channels = layer.channels;
  }
  if (config.has_projection()) {
    params.add("encoder.proj.weight",
               init_uniform({config.latent_dim, config.feature_channels()},
                            config.feature_channels(), rng));
    params.add("encoder.proj.bias", Tensor::zeros({config.latent_dim}));
  }
}

Tape::NodeId forward(Tape& tape, const ConvEncoderConfig& config, const ParamNodes& nodes,
                     Tape::NodeId input) {
  const Tensor& in = tape.value(input);
  if (in.rank() != 3 || in.shape[0] != 1 || in.shape[1] != config.input_size ||
      in.shape[2] != config.input_size)
    fail_validation("encoder: input " + in.shape_str() + " does not match config size " +
                    std::to_string(config.input_size));
  Tape::NodeId x = input;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const ConvLayerSpec& layer = config.layers[i];
    const std::string base = "encoder.conv" + std::to_string(i);
    x = tape.relu(tape.conv2d(x, nodes.at(base + ".weight"), nodes.at(base + ".bias"),
                              layer.stride, layer.pad));
  }
  x = tape.global_max_pool(x);
  if (config.has_projection())
    x = affine_node(tape, nodes.at("encoder.proj.weight"), nodes.at("encoder.proj.bias"),
                    x);
  return x;
}

Tape::NodeId raster_leaf(Tape& tape, const RasterSketch& raster) {
  if (raster.pixels.size() != raster.width * raster.height)
    fail_validation("raster pixel buffer does not match its dimensions");
  return tape.leaf(Tensor({1, raster.height, raster.width}, raster.pixels), false);
}

std::vector<double> encode(const ConvEncoderConfig& config, const ParamSet& params,
                           const RasterSketch& raster) {
  Tape tape;
  const ParamNodes nodes = leaf_params(tape, params, /*requires_grad=*/false);
  const Tape::NodeId latent = forward(tape, config, nodes, raster_leaf(tape, raster));
  return tape.value(latent).data;
}

}  // namespace encoder

}  // namespace stk
