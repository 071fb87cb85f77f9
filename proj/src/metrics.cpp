#include "pr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "pr/datasets.hpp"
#include "pr/jsonio.hpp"

namespace pr {

std::int64_t MetricReport::total_fp() const {
  std::int64_t s = 0;
  for (auto v : fp) s += v;
  return s;
}

std::int64_t MetricReport::total_fn() const {
  std::int64_t s = 0;
  for (auto v : fn) s += v;
  return s;
}

std::string MetricReport::to_json() const {
  JsonWriter w;
  w.begin_object();
  w.key("aggregate");
  w.value(aggregate);
  auto counts = [&](const char* name, const std::vector<std::int64_t>& v) {
    if (v.empty()) return;
    w.key(name);
    w.begin_array();
    for (auto x : v) w.value(x);
    w.end_array();
  };
  counts("fn", fn);
  counts("fp", fp);
  counts("gt_count", gt_count);
  counts("idsw", idsw);
  w.key("joints");
  w.begin_array();
  for (const auto& j : joints) w.value(j);
  w.end_array();
  w.key("metric");
  w.value(metric);
  w.key("per_joint");
  w.begin_array();
  for (double v : per_joint) w.value(std::isnan(v) ? -1.0 : v);
  w.end_array();
  w.key("skipped_poses");
  w.value(skipped_poses);
  w.key("threshold_r");
  w.value(threshold_r);
  counts("tp", tp);
  w.end_object();
  std::string out = w.take();
  out += '\n';
  return out;
}

double head_norm(const Pose& gt, const JointSchema& schema) {
  if (schema.head_pair.first < 0 || schema.head_pair.second < 0)
    throw HeadSegmentMissing();
  const Keypoint& top = gt.joints[schema.head_pair.first];
  const Keypoint& bot = gt.joints[schema.head_pair.second];
  if (!top.present || !bot.present) throw HeadSegmentMissing();
  const double dx = top.x - bot.x, dy = top.y - bot.y;
  return std::sqrt(dx * dx + dy * dy);
}

namespace {

double mean_defined(const std::vector<double>& v) {
  double sum = 0.0;
  int count = 0;
  for (double x : v)
    if (!std::isnan(x)) {
      sum += x;
      ++count;
    }
  return count > 0 ? sum / count : 0.0;
}

double dist(const Keypoint& a, const Keypoint& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

Pose apply_tau(const Pose& pose, double tau) {
  Pose out = pose;
  for (auto& j : out.joints)
    if (j.present && j.score && *j.score < tau) j.present = false;
  return out;
}

MetricReport pckh(const std::vector<MatchedPair>& pairs,
                  const JointSchema& schema, double r) {
  const int n = schema.count();
  MetricReport rep;
  rep.metric = "pckh";
  rep.joints = schema.names;
  rep.threshold_r = r;
  std::vector<std::int64_t> correct(n, 0), total(n, 0);
  for (const auto& pair : pairs) {
    double norm;
    try {
      norm = head_norm(pair.gt, schema);
    } catch (const HeadSegmentMissing&) {
      ++rep.skipped_poses;
      continue;
    }
    for (int j = 0; j < n; ++j) {
      if (!pair.gt.joints[j].present) continue;
      ++total[j];
      if (pair.pred.joints[j].present &&
          dist(pair.pred.joints[j], pair.gt.joints[j]) <= r * norm)
        ++correct[j];
    }
  }
  rep.gt_count = total;
  rep.tp = correct;
  for (int j = 0; j < n; ++j)
    rep.per_joint.push_back(total[j] > 0
                                ? 100.0 * correct[j] / total[j]
                                : std::numeric_limits<double>::quiet_NaN());
  rep.aggregate = mean_defined(rep.per_joint);
  return rep;
}

double auc(const std::vector<MatchedPair>& pairs, const JointSchema& schema) {
  double sum = 0.0;
  for (int i = 0; i <= 50; ++i) sum += pckh(pairs, schema, 0.01 * i).aggregate;
  return sum / 51.0;
}

MetricReport map_eval(const std::vector<std::vector<Pose>>& pred_frames,
                      const std::vector<std::vector<Pose>>& gt_frames,
                      const JointSchema& schema, double r) {
  if (pred_frames.size() != gt_frames.size())
    throw PoseError("map_eval: frame count mismatch");
  const int n = schema.count();
  MetricReport rep;
  rep.metric = "map";
  rep.joints = schema.names;
  rep.threshold_r = r;

  struct Det {
    double score;
    bool tp;
    std::int64_t order;  // insertion index, deterministic tie-break
  };
  std::vector<std::vector<Det>> dets(n);
  std::vector<std::int64_t> gt_total(n, 0);
  std::int64_t order = 0;

  auto joint_score = [](const Keypoint& kp) {
    if (!kp.score) throw MissingScore("predicted joint has no score");
    return *kp.score;
  };

  for (size_t fi = 0; fi < gt_frames.size(); ++fi) {
    // GT poses with a defined head segment take part; others are skipped.
    std::vector<const Pose*> gts;
    std::vector<double> norms;
    for (const auto& g : gt_frames[fi]) {
      try {
        norms.push_back(head_norm(g, schema));
        gts.push_back(&g);
      } catch (const HeadSegmentMissing&) {
        ++rep.skipped_poses;
      }
    }
    for (size_t gi = 0; gi < gts.size(); ++gi)
      for (int j = 0; j < n; ++j)
        if (gts[gi]->joints[j].present) ++gt_total[j];

    const auto& preds = pred_frames[fi];
    std::vector<std::vector<double>> sim(
        preds.size(), std::vector<double>(gts.size(), 0.0));
    for (size_t pi = 0; pi < preds.size(); ++pi)
      for (size_t gi = 0; gi < gts.size(); ++gi) {
        int present = 0, close = 0;
        for (int j = 0; j < n; ++j) {
          if (!gts[gi]->joints[j].present) continue;
          ++present;
          if (preds[pi].joints[j].present &&
              dist(preds[pi].joints[j], gts[gi]->joints[j]) <= r * norms[gi])
            ++close;
        }
        sim[pi][gi] = present > 0 ? static_cast<double>(close) / present : 0.0;
      }

    // Greedy assignment: repeatedly take the highest-similarity pair > 0.
    std::vector<int> pred_match(preds.size(), -1);
    std::vector<int> gt_match(gts.size(), -1);
    while (true) {
      double best = 0.0;
      int bp = -1, bg = -1;
      for (size_t gi = 0; gi < gts.size(); ++gi) {
        if (gt_match[gi] >= 0) continue;
        for (size_t pi = 0; pi < preds.size(); ++pi) {
          if (pred_match[pi] >= 0) continue;
          if (sim[pi][gi] > best) {
            best = sim[pi][gi];
            bp = static_cast<int>(pi);
            bg = static_cast<int>(gi);
          }
        }
      }
      if (bp < 0) break;
      pred_match[bp] = bg;
      gt_match[bg] = bp;
    }

    for (size_t pi = 0; pi < preds.size(); ++pi) {
      const int gi = pred_match[pi];
      for (int j = 0; j < n; ++j) {
        const Keypoint& pk = preds[pi].joints[j];
        if (!pk.present) continue;
        bool tp = false;
        if (gi >= 0 && gts[gi]->joints[j].present)
          tp = dist(pk, gts[gi]->joints[j]) <= r * norms[gi];
        dets[j].push_back({joint_score(pk), tp, order++});
      }
    }
  }

  rep.gt_count = gt_total;
  rep.tp.assign(n, 0);
  rep.fp.assign(n, 0);
  rep.fn.assign(n, 0);
  for (int j = 0; j < n; ++j) {
    auto& d = dets[j];
    std::sort(d.begin(), d.end(), [](const Det& a, const Det& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.order < b.order;
    });
    std::int64_t tp = 0, fp = 0;
    double ap = 0.0;
    for (const auto& det : d) {
      if (det.tp) {
        ++tp;
        ap += static_cast<double>(tp) / (tp + fp);
      } else {
        ++fp;
      }
    }
    rep.tp[j] = tp;
    rep.fp[j] = fp;
    rep.fn[j] = gt_total[j] - tp;
    rep.per_joint.push_back(gt_total[j] > 0
                                ? 100.0 * ap / gt_total[j]
                                : std::numeric_limits<double>::quiet_NaN());
  }
  rep.aggregate = mean_defined(rep.per_joint);
  return rep;
}

MetricReport mota_eval(
    const std::vector<std::vector<std::vector<Pose>>>& pred_sequences,
    const std::vector<std::vector<std::vector<Pose>>>& gt_sequences,
    const JointSchema& schema, double r) {
  if (pred_sequences.size() != gt_sequences.size())
    throw PoseError("mota_eval: sequence count mismatch");
  const int n = schema.count();
  MetricReport rep;
  rep.metric = "mota";
  rep.joints = schema.names;
  rep.threshold_r = r;
  rep.tp.assign(n, 0);
  rep.fp.assign(n, 0);
  rep.fn.assign(n, 0);
  rep.idsw.assign(n, 0);
  rep.gt_count.assign(n, 0);

  for (size_t si = 0; si < gt_sequences.size(); ++si) {
    if (pred_sequences[si].size() != gt_sequences[si].size())
      throw PoseError("mota_eval: frame count mismatch in sequence");
    // last matched prediction track per (joint, GT identity)
    std::vector<std::map<std::int64_t, std::int64_t>> last_track(n);

    for (size_t fi = 0; fi < gt_sequences[si].size(); ++fi) {
      struct GtItem {
        std::int64_t id;
        Keypoint kp;
        double thresh;
      };
      struct PredItem {
        std::int64_t track;
        Keypoint kp;
      };
      std::vector<std::vector<GtItem>> gt_items(n);
      std::vector<std::vector<PredItem>> pred_items(n);

      std::int64_t fallback_id = 0;
      for (const auto& g : gt_sequences[si][fi]) {
        double norm;
        try {
          norm = head_norm(g, schema);
        } catch (const HeadSegmentMissing&) {
          ++rep.skipped_poses;
          ++fallback_id;
          continue;
        }
        const std::int64_t id = g.track_id.value_or(fallback_id);
        ++fallback_id;
        for (int j = 0; j < n; ++j)
          if (g.joints[j].present)
            gt_items[j].push_back({id, g.joints[j], r * norm});
      }
      std::int64_t pred_fallback = 0;
      for (const auto& p : pred_sequences[si][fi]) {
        const std::int64_t track = p.track_id.value_or(pred_fallback);
        ++pred_fallback;
        for (int j = 0; j < n; ++j)
          if (p.joints[j].present)
            pred_items[j].push_back({track, p.joints[j]});
      }

      for (int j = 0; j < n; ++j) {
        auto& gts = gt_items[j];
        auto& preds = pred_items[j];
        rep.gt_count[j] += static_cast<std::int64_t>(gts.size());
        std::vector<int> gt_match(gts.size(), -1);
        std::vector<int> pred_used(preds.size(), 0);

        // Continuation pass: keep last frame's GT<->track pairing alive.
        for (size_t gi = 0; gi < gts.size(); ++gi) {
          auto it = last_track[j].find(gts[gi].id);
          if (it == last_track[j].end()) continue;
          for (size_t pi = 0; pi < preds.size(); ++pi) {
            if (pred_used[pi] || preds[pi].track != it->second) continue;
            if (dist(gts[gi].kp, preds[pi].kp) <= gts[gi].thresh) {
              gt_match[gi] = static_cast<int>(pi);
              pred_used[pi] = 1;
              break;
            }
          }
        }
        // Greedy nearest-distance matching for the rest.
        while (true) {
          double best = std::numeric_limits<double>::infinity();
          int bg = -1, bp = -1;
          for (size_t gi = 0; gi < gts.size(); ++gi) {
            if (gt_match[gi] >= 0) continue;
            for (size_t pi = 0; pi < preds.size(); ++pi) {
              if (pred_used[pi]) continue;
              const double d = dist(gts[gi].kp, preds[pi].kp);
              if (d <= gts[gi].thresh && d < best) {
                best = d;
                bg = static_cast<int>(gi);
                bp = static_cast<int>(pi);
              }
            }
          }
          if (bg < 0) break;
          gt_match[bg] = bp;
          pred_used[bp] = 1;
        }

        for (size_t gi = 0; gi < gts.size(); ++gi) {
          if (gt_match[gi] < 0) {
            ++rep.fn[j];
            continue;
          }
          ++rep.tp[j];
          const std::int64_t track = preds[gt_match[gi]].track;
          auto it = last_track[j].find(gts[gi].id);
          if (it != last_track[j].end() && it->second != track) ++rep.idsw[j];
          last_track[j][gts[gi].id] = track;
        }
        for (size_t pi = 0; pi < preds.size(); ++pi)
          if (!pred_used[pi]) ++rep.fp[j];
      }
    }
  }

  for (int j = 0; j < n; ++j) {
    if (rep.gt_count[j] > 0)
      rep.per_joint.push_back(
          1.0 - static_cast<double>(rep.fn[j] + rep.fp[j] + rep.idsw[j]) /
                    rep.gt_count[j]);
    else
      rep.per_joint.push_back(std::numeric_limits<double>::quiet_NaN());
  }
  rep.aggregate = 100.0 * mean_defined(rep.per_joint);
  return rep;
}

}  // namespace pr
