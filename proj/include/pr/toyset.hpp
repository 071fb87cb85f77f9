#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pr/core.hpp"
#include "pr/datasets.hpp"

namespace pr {

// Desk-scale stand-in for a pose benchmark: articulated stick figures with
// distinct limb colors on textured backgrounds, grouped into short tracking
// sequences with controlled person proximity.
struct ToyConfig {
  int frames = 100;
  int frames_per_sequence = 5;
  int min_people = 1;
  int max_people = 2;
  int width = 160;
  int height = 120;
  double min_height_px = 52.0;
  double max_height_px = 72.0;
  double proximity = 55.0;  // distance between neighboring people
  std::string image_prefix = "frames/frame";
  std::string image_format = "png";  // "png" or "ppm"

  void validate() const;
};

// The 15-joint reference schema used throughout the toy pipeline.
JointSchema toy_schema();

struct ToySet {
  Dataset dataset;
  std::vector<std::pair<std::string, ImageRaster>> images;  // path, pixels
};

ToySet generate_toy_dataset(const ToyConfig& cfg, std::uint64_t seed);

// Writes annotations.json plus the rendered frames under out_dir.
void write_toy_dataset(const ToySet& set, const std::string& out_dir);

}  // namespace pr
