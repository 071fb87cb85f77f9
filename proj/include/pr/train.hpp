#pragma once

#include <map>
#include <string>
#include <vector>

#include "pr/datasets.hpp"
#include "pr/net.hpp"
#include "pr/synth.hpp"
#include "pr/tensorize.hpp"

namespace pr {

// Lazily loads and caches the images a dataset refers to.
class ImageCache {
 public:
  explicit ImageCache(std::string root = "") : root_(std::move(root)) {}
  const ImageRaster& get(const std::string& path);
  void put(const std::string& path, ImageRaster img);

 private:
  std::string root_;
  std::map<std::string, ImageRaster> cache_;
};

struct TrainOptions {
  TrainSchedule schedule = TrainSchedule::reference_default();
  SynthConfig synth;
  GeomConfig geom;
  LossWeights loss;
  bool augment_enabled = true;
  // Cap on the L2 norm of the gradient per step; 0 disables clipping.
  double clip_norm = 0.0;
  std::uint64_t seed = 0;
};

struct TrainLog {
  std::vector<double> epoch_mean_loss;
  std::vector<double> step_loss;
};

// Plain SGD, one sample per step: draw pose, corrupt it, augment, tensorize,
// update with the current schedule segment's learning rate. Deterministic
// given the seed.
TrainLog train(RefinerNet<float>& net, const Dataset& ds, ImageCache& images,
               const TrainOptions& opts);

}  // namespace pr
