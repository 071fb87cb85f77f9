#pragma once

#include <string>

#include "pr/config.hpp"
#include "pr/datasets.hpp"
#include "pr/decode.hpp"
#include "pr/metrics.hpp"
#include "pr/train.hpp"

namespace pr {

// Corrupt every ground-truth pose into an "initial prediction", attaching a
// synthetic confidence score to each surviving joint. Deterministic in seed
// and independent of worker count.
Dataset corrupt_dataset(const Dataset& gt, const SynthConfig& cfg,
                        std::uint64_t seed);

// Refine every pose of a prediction file. Poses whose height cannot be
// estimated (or with no joints at all) pass through unchanged.
Dataset refine_dataset(const RefinerNet<float>& net, const Dataset& preds,
                       ImageCache& images, const GeomConfig& geom,
                       const DecodeConfig& decode_cfg, int jobs = 1);

// Pair pred/gt poses positionally within each frame (single-person protocol).
std::vector<MatchedPair> pair_by_index(const Dataset& pred, const Dataset& gt);

std::vector<std::vector<Pose>> frames_of(const Dataset& ds);
std::vector<std::vector<std::vector<Pose>>> sequences_of(const Dataset& ds);

struct DemoResult {
  double pckh_initial = 0.0, pckh_refined = 0.0;
  double auc_initial = 0.0, auc_refined = 0.0;
  double map_initial = 0.0, map_refined = 0.0;
  double mota_initial = 0.0, mota_refined = 0.0;
  std::string delta_table;
};

// Toy data -> corrupted initial predictions -> train -> refine -> evaluate
// before/after. Writes datasets, reports, checkpoint and overlays to out_dir.
DemoResult demo_pipeline(const PipelineConfig& cfg, const std::string& out_dir,
                         int jobs = 1);

}  // namespace pr
