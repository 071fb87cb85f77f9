#pragma once

#include <string>
#include <vector>

#include "pr/core.hpp"

namespace pr {

struct HeadSegmentMissing : PoseError {
  HeadSegmentMissing() : PoseError("head segment joints not present") {}
};

struct MetricReport {
  std::string metric;               // "pckh", "map", "mota"
  std::vector<std::string> joints;  // joint names, schema order
  std::vector<double> per_joint;    // value per joint, NaN when undefined
  double aggregate = 0.0;           // mean over defined per-joint values
  double threshold_r = 0.5;

  // counts, populated where applicable (schema order)
  std::vector<std::int64_t> tp, fp, fn, idsw, gt_count;
  std::int64_t skipped_poses = 0;  // poses without a head segment

  std::int64_t total_fp() const;
  std::int64_t total_fn() const;
  std::string to_json() const;
};

// Euclidean length of the top-head -- bottom-head segment.
double head_norm(const Pose& gt, const JointSchema& schema);

struct MatchedPair {
  Pose pred;
  Pose gt;
};

// Single-person protocol: a joint is correct iff present and within
// r * head-segment length of the GT joint.
MetricReport pckh(const std::vector<MatchedPair>& pairs,
                  const JointSchema& schema, double r = 0.5);

// Mean of mPCKh@r over r = 0.00, 0.01, ..., 0.50 (51 thresholds).
double auc(const std::vector<MatchedPair>& pairs, const JointSchema& schema);

// Greedy pose-level assignment per frame, then per-joint all-points AP from
// confidence-ranked detections. Present predicted joints must carry scores.
MetricReport map_eval(const std::vector<std::vector<Pose>>& pred_frames,
                      const std::vector<std::vector<Pose>>& gt_frames,
                      const JointSchema& schema, double r = 0.5);

// Per joint type CLEAR-MOT counts over sequences of frames; matching prefers
// continuation of the previous frame's GT<->track pairing.
MetricReport mota_eval(
    const std::vector<std::vector<std::vector<Pose>>>& pred_sequences,
    const std::vector<std::vector<std::vector<Pose>>>& gt_sequences,
    const JointSchema& schema, double r = 0.5);

// Joints with score below tau become absent (scoreless joints are kept).
Pose apply_tau(const Pose& pose, double tau);

}  // namespace pr
