#ifndef STK_ENCODER_HPP
#define STK_ENCODER_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "nn.hpp"
#include "optim.hpp"
#include "tape.hpp"

namespace stk {

struct ConvLayerSpec {
  std::size_t channels = 8;
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t pad = 1;
};

// Raster encoder: a small conv stack with ReLU activations, global max
// pooling over the final feature map, and an optional affine projection to
// latent_dim. Projection is dropped when the last layer already has
// latent_dim channels.
struct ConvEncoderConfig {
  std::size_t input_size = 32;  // square input raster
  std::vector<ConvLayerSpec> layers = {{8, 3, 2, 1}, {16, 3, 2, 1}, {32, 3, 2, 1}};
  std::size_t latent_dim = 128;

  std::size_t feature_channels() const { return layers.back().channels; }
  bool has_projection() const { return feature_channels() != latent_dim; }
};

// Node ids for a parameter set materialized on one tape.
using ParamNodes = std::map<std::string, Tape::NodeId>;

ParamNodes leaf_params(Tape& tape, const ParamSet& params, bool requires_grad);

namespace encoder {

// Registers "encoder.convN.weight/bias" (+ "encoder.proj.*" if projecting).
void init_params(const ConvEncoderConfig& config, ParamSet& params, Rng& rng);

// Differentiable forward from an input node {1, S, S} to the latent {d}.
Tape::NodeId forward(Tape& tape, const ConvEncoderConfig& config, const ParamNodes& nodes,
                     Tape::NodeId input);

Tape::NodeId raster_leaf(Tape& tape, const RasterSketch& raster);

// Inference path: deterministic latent for a raster.
std::vector<double> encode(const ConvEncoderConfig& config, const ParamSet& params,
                           const RasterSketch& raster);

}  // namespace encoder

}  // namespace stk

#endif
