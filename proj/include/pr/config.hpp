#pragma once

#include <string>

#include "pr/decode.hpp"
#include "pr/net.hpp"
#include "pr/synth.hpp"
#include "pr/tensorize.hpp"
#include "pr/toyset.hpp"
#include "pr/train.hpp"

namespace pr {

struct ConfigError : PoseError {
  using PoseError::PoseError;
};

struct DataConfig {
  std::string annotations;
  std::string images_dir;
  std::string schema_file;
};

struct TrainSection {
  TrainSchedule schedule;
  LossWeights loss;
  bool augment = true;
  double clip_norm = 0.0;
  // Network trunk; empty means NetConfig::default_config.
  std::vector<std::string> arch;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  SynthConfig synth;
  TrainSection train;
  GeomConfig geom;
  DecodeConfig decode;
  DataConfig data;
  ToyConfig toy;

  NetConfig net_config(int joints) const;
};

// TOML subset: [section] headers, key = value with integers, floats, bools,
// strings and (nested) arrays. Unknown sections or keys are rejected.
PipelineConfig parse_pipeline_config(const std::string& text);
PipelineConfig load_pipeline_config(const std::string& path);

// The desk-scale configuration the demo and acceptance runs use.
PipelineConfig desk_scale_config();

std::string synth_config_json(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace pr
