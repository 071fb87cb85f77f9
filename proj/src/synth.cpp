#include "pr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pr {

void SynthConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(shift_short_prob) || !prob(swap_prob) || !prob(steal_prob) ||
      !prob(drop_prob))
    throw PoseError("synth probabilities must lie in [0,1]");
  if (!(shift_short_max > 0.0) || !(shift_long_max > shift_short_max))
    throw PoseError("require 0 < shift_short_max < shift_long_max");
  if (!(steal_radius > 0.0)) throw PoseError("steal_radius must be positive");
}

Pose t1_shift(const Pose& pose, const SynthConfig& cfg, const RngKey& rng) {
  Pose out = pose;
  for (size_t j = 0; j < out.joints.size(); ++j) {
    auto& kp = out.joints[j];
    if (!kp.present) continue;
    RngStream s(rng.derive("t1").derive(j));
    const double angle = s.uniform(0.0, 2.0 * std::numbers::pi);
    double length;
    if (s.bernoulli(cfg.shift_short_prob))
      length = s.uniform(0.0, cfg.shift_short_max);
    else
      length = s.uniform_open_left(cfg.shift_short_max, cfg.shift_long_max);
    kp.x += length * std::cos(angle);
    kp.y += length * std::sin(angle);
  }
  return out;
}

Pose t2_swap(const Pose& pose, const JointSchema& schema,
             const SynthConfig& cfg, const RngKey& rng) {
  Pose out = pose;
  for (size_t p = 0; p < schema.flip_pairs.size(); ++p) {
    RngStream s(rng.derive("t2").derive(p));
    if (s.bernoulli(cfg.swap_prob)) {
      const auto& [a, b] = schema.flip_pairs[p];
      std::swap(out.joints[a], out.joints[b]);
    }
  }
  return out;
}

Pose t3_steal(const Pose& pose, const std::vector<Pose>& neighbors,
              const JointSchema& schema, const SynthConfig& cfg,
              const RngKey& rng) {
  Pose out = pose;
  if (neighbors.empty()) return out;

  // Flip partner per joint, -1 if the joint is unpaired.
  std::vector<int> partner(out.joints.size(), -1);
  for (const auto& [a, b] : schema.flip_pairs) {
    partner[a] = b;
    partner[b] = a;
  }

  for (size_t j = 0; j < out.joints.size(); ++j) {
    auto& kp = out.joints[j];
    if (!kp.present) continue;
    RngStream s(rng.derive("t3").derive(j));
    if (!s.bernoulli(cfg.steal_prob)) continue;

    std::vector<std::pair<double, double>> candidates;
    auto consider = [&](const Keypoint& cand) {
      if (!cand.present) return;
      const double dx = cand.x - kp.x, dy = cand.y - kp.y;
      if (dx * dx + dy * dy <= cfg.steal_radius * cfg.steal_radius)
        candidates.emplace_back(cand.x, cand.y);
    };
    for (const auto& nb : neighbors) {
      consider(nb.joints[j]);
      if (partner[j] >= 0) consider(nb.joints[partner[j]]);
    }
    if (candidates.empty()) continue;
    const auto& [cx, cy] = candidates[s.below(candidates.size())];
    kp.x = cx;
    kp.y = cy;
  }
  return out;
}

Pose t4_drop(const Pose& pose, const SynthConfig& cfg, const RngKey& rng) {
  Pose out = pose;
  for (size_t j = 0; j < out.joints.size(); ++j) {
    auto& kp = out.joints[j];
    if (!kp.present) continue;
    const bool forced =
        std::find(cfg.drop_forced_joints.begin(), cfg.drop_forced_joints.end(),
                  static_cast<int>(j)) != cfg.drop_forced_joints.end();
    RngStream s(rng.derive("t4").derive(j));
    if (forced || s.bernoulli(cfg.drop_prob)) kp.present = false;
  }
  return out;
}

Pose synthesize_input(const Pose& gt, const std::vector<Pose>& neighbors,
                      const JointSchema& schema, const SynthConfig& cfg,
                      const RngKey& rng) {
  Pose out = gt;
  if (cfg.t1_enabled) out = t1_shift(out, cfg, rng);
  if (cfg.t2_enabled) out = t2_swap(out, schema, cfg, rng);
  if (cfg.t3_enabled) out = t3_steal(out, neighbors, schema, cfg, rng);
  if (cfg.t4_enabled) out = t4_drop(out, cfg, rng);
  return out;
}

}  // namespace pr
