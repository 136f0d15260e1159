#ifndef STK_CONFIG_HPP
#define STK_CONFIG_HPP

#include <cstdint>
#include <string>

#include "hdecoder.hpp"
#include "retrieval.hpp"
#include "synthetic.hpp"

namespace stk {

// JSON run configurations (schemas in docs/FORMAT.md). Parsing fills defaults
// for missing keys and rejects unknown keys, naming the offender.

struct PretextSetup {
  std::size_t raster_size = 32;
  std::size_t raster_thickness = 1;
  ConvEncoderConfig encoder;  // input_size is overwritten by raster_size
  HDecoderConfig decoder;
  PretextTrainConfig train;
};

struct RetrievalSetup {
  std::size_t raster_size = 32;
  std::size_t raster_thickness = 1;
  ConvEncoderConfig encoder;
  EmbedConfig embed;
  TripletTrainConfig train;
  double split_fraction = 0.7;
  std::uint64_t split_seed = 7;
};

PretextSetup parse_pretext_config(const std::string& json_text);
RetrievalSetup parse_retrieval_config(const std::string& json_text);
SynthSpec parse_synth_spec(const std::string& json_text);

struct SampleOptions {
  long index = -1;  // -1: sample from every sketch in the corpus
  SampleMode mode = SampleMode::Greedy;
  std::uint64_t seed = 1;
  double temperature = 1.0;
  UnrollLimits limits;
};

SampleOptions parse_sample_options(const std::string& json_text);

struct MaskEvalSpec {
  std::vector<double> fractions = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<bool> ends_late = {false, true};
  std::size_t k = 10;
};

MaskEvalSpec parse_mask_eval_spec(const std::string& json_text);

}  // namespace stk

#endif
