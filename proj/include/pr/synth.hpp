#pragma once

#include <vector>

#include "pr/core.hpp"
#include "pr/rng.hpp"

namespace pr {

// The four corruption models applied to ground-truth poses to produce noisy
// input poses: per-joint shift, symmetric swap, neighbor steal, joint drop.
struct SynthConfig {
  bool t1_enabled = true;
  bool t2_enabled = true;
  bool t3_enabled = true;
  bool t4_enabled = true;

  double shift_short_prob = 0.9;
  double shift_short_max = 25.0;   // px
  double shift_long_max = 125.0;   // px
  double swap_prob = 0.1;          // per flip pair
  double steal_prob = 0.3;         // per joint
  double steal_radius = 75.0;      // px
  double drop_prob = 0.3;          // per joint

  // Joint indices dropped unconditionally by T4 (recovery experiments).
  std::vector<int> drop_forced_joints;

  void validate() const;
};

Pose t1_shift(const Pose& pose, const SynthConfig& cfg, const RngKey& rng);
Pose t2_swap(const Pose& pose, const JointSchema& schema,
             const SynthConfig& cfg, const RngKey& rng);
Pose t3_steal(const Pose& pose, const std::vector<Pose>& neighbors,
              const JointSchema& schema, const SynthConfig& cfg,
              const RngKey& rng);
Pose t4_drop(const Pose& pose, const SynthConfig& cfg, const RngKey& rng);

// Applies the enabled transforms in the fixed order T1 -> T2 -> T3 -> T4.
// T3 candidates come from the uncorrupted ground-truth neighbors.
Pose synthesize_input(const Pose& gt, const std::vector<Pose>& neighbors,
                      const JointSchema& schema, const SynthConfig& cfg,
                      const RngKey& rng);

}  // namespace pr
