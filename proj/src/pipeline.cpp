#include "pr/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <thread>

#include "pr/svg.hpp"
#include "pr/synth.hpp"
#include "pr/toyset.hpp"

namespace pr {

namespace {

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::atomic<int> next{0};
  for (int t = 0; t < jobs; ++t)
    workers.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& w : workers) w.join();
}

}  // namespace

Dataset corrupt_dataset(const Dataset& gt, const SynthConfig& cfg,
                        std::uint64_t seed) {
  cfg.validate();
  Dataset out = gt;
  for (size_t fi = 0; fi < out.frames.size(); ++fi) {
    DatasetFrame& frame = out.frames[fi];
    const DatasetFrame& src = gt.frames[fi];
    for (int pi = 0; pi < static_cast<int>(frame.people.size()); ++pi) {
      std::vector<Pose> neighbors;
      for (int qi = 0; qi < static_cast<int>(src.people.size()); ++qi)
        if (qi != pi) neighbors.push_back(src.people[qi].pose);
      const RngKey key = RngKey(seed)
                             .derive(frame.sequence_id.value_or(""))
                             .derive(frame.frame_index)
                             .derive(pi);
      Pose& pose = frame.people[pi].pose;
      pose = synthesize_input(src.people[pi].pose, neighbors, gt.schema, cfg,
                              key);
      // Synthetic estimator confidences for the surviving joints.
      RngStream scores(key.derive("score"));
      for (auto& kp : pose.joints) {
        const double s = scores.uniform(0.55, 1.0);
        if (kp.present) kp.score = s;
      }
    }
  }
  return out;
}

Dataset refine_dataset(const RefinerNet<float>& net, const Dataset& preds,
                       ImageCache& images, const GeomConfig& geom,
                       const DecodeConfig& decode_cfg, int jobs) {
  Dataset out = preds;
  struct Item {
    int frame, person;
  };
  std::vector<Item> items;
  for (int fi = 0; fi < static_cast<int>(out.frames.size()); ++fi) {
    // Touch every image up front so worker threads only read the cache.
    images.get(out.frames[fi].image);
    for (int pi = 0; pi < static_cast<int>(out.frames[fi].people.size()); ++pi)
      items.push_back({fi, pi});
  }
  parallel_for(static_cast<int>(items.size()), jobs, [&](int i) {
    const auto [fi, pi] = items[i];
    Pose& pose = out.frames[fi].people[pi].pose;
    if (pose.present_count() == 0) return;
    try {
      pose = refine_pose(net, images.get(out.frames[fi].image), pose, geom,
                         decode_cfg);
    } catch (const HeightUndefined&) {
      // keep the input pose
    }
  });
  return out;
}

std::vector<MatchedPair> pair_by_index(const Dataset& pred, const Dataset& gt) {
  if (pred.frames.size() != gt.frames.size())
    throw PoseError("prediction/gt frame count mismatch");
  std::vector<MatchedPair> pairs;
  for (size_t fi = 0; fi < gt.frames.size(); ++fi) {
    if (pred.frames[fi].people.size() != gt.frames[fi].people.size())
      throw PoseError("prediction/gt person count mismatch in frame " +
                      std::to_string(fi));
    for (size_t pi = 0; pi < gt.frames[fi].people.size(); ++pi)
      pairs.push_back({pred.frames[fi].people[pi].pose,
                       gt.frames[fi].people[pi].pose});
  }
  return pairs;
}

std::vector<std::vector<Pose>> frames_of(const Dataset& ds) {
  std::vector<std::vector<Pose>> frames;
  for (const auto& f : ds.frames) {
    std::vector<Pose> poses;
    for (const auto& p : f.people) poses.push_back(p.pose);
    frames.push_back(std::move(poses));
  }
  return frames;
}

std::vector<std::vector<std::vector<Pose>>> sequences_of(const Dataset& ds) {
  std::vector<std::vector<std::vector<Pose>>> seqs;
  for (const auto& [id, frame_ids] : ds.sequences()) {
    std::vector<std::vector<Pose>> seq;
    for (int fi : frame_ids) {
      std::vector<Pose> poses;
      for (const auto& p : ds.frames[fi].people) poses.push_back(p.pose);
      seq.push_back(std::move(poses));
    }
    seqs.push_back(std::move(seq));
  }
  return seqs;
}

namespace {

Dataset threshold_dataset(const Dataset& ds, double tau) {
  Dataset out = ds;
  for (auto& f : out.frames)
    for (auto& p : f.people) p.pose = apply_tau(p.pose, tau);
  return out;
}

std::string format_delta_table(const DemoResult& r, double tau) {
  char buf[512];
  std::string out;
  out += "metric              initial   refined     delta\n";
  auto row = [&](const char* name, double a, double b) {
    std::snprintf(buf, sizeof(buf), "%-18s %9.2f %9.2f %+9.2f\n", name, a, b,
                  b - a);
    out += buf;
  };
  row("mPCKh@0.5", r.pckh_initial, r.pckh_refined);
  row("AUC", r.auc_initial, r.auc_refined);
  row("mAP", r.map_initial, r.map_refined);
  char label[64];
  std::snprintf(label, sizeof(label), "mMOTA (tau=%.2f)", tau);
  row(label, r.mota_initial, r.mota_refined);
  return out;
}

}  // namespace

DemoResult demo_pipeline(const PipelineConfig& cfg, const std::string& out_dir,
                         int jobs) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  fs::create_directories(fs::path(out_dir) / "overlays");

  // Disjoint train and eval sets from the same generator.
  const ToySet train_set =
      generate_toy_dataset(cfg.toy, RngKey(cfg.seed).derive("toy-train").state());
  ToyConfig eval_cfg = cfg.toy;
  eval_cfg.frames = std::max(10, cfg.toy.frames / 2);
  const ToySet eval_set =
      generate_toy_dataset(eval_cfg, RngKey(cfg.seed).derive("toy-eval").state());

  ImageCache train_images, eval_images;
  for (const auto& [path, img] : train_set.images) train_images.put(path, img);
  for (const auto& [path, img] : eval_set.images) eval_images.put(path, img);

  const Dataset& gt = eval_set.dataset;
  const Dataset initial = corrupt_dataset(
      gt, cfg.synth, RngKey(cfg.seed).derive("initial").state());

  const int n = gt.schema.count();
  RefinerNet<float> net(cfg.net_config(n));
  net.init_weights(std::nullopt, RngKey(cfg.seed).derive("init").state());
  TrainOptions topts;
  topts.schedule = cfg.train.schedule;
  topts.synth = cfg.synth;
  topts.geom = cfg.geom;
  topts.loss = cfg.train.loss;
  topts.augment_enabled = cfg.train.augment;
  topts.clip_norm = cfg.train.clip_norm;
  topts.seed = RngKey(cfg.seed).derive("train").state();
  ImageCache train_cache = train_images;
  train(net, train_set.dataset, train_cache, topts);

  DecodeConfig pose_cfg;  // tau = 0: PCKh and mAP keep every decoded joint
  pose_cfg.tau = 0.0;
  pose_cfg.stride = cfg.geom.stride;
  DecodeConfig track_cfg = cfg.decode;
  track_cfg.stride = cfg.geom.stride;

  const Dataset refined_pose =
      refine_dataset(net, initial, eval_images, cfg.geom, pose_cfg, jobs);
  const Dataset refined_track =
      refine_dataset(net, initial, eval_images, cfg.geom, track_cfg, jobs);
  const Dataset initial_track = threshold_dataset(initial, cfg.decode.tau);

  DemoResult res;
  const auto pairs_initial = pair_by_index(initial, gt);
  const auto pairs_refined = pair_by_index(refined_pose, gt);
  const MetricReport pckh_i = pckh(pairs_initial, gt.schema);
  const MetricReport pckh_r = pckh(pairs_refined, gt.schema);
  res.pckh_initial = pckh_i.aggregate;
  res.pckh_refined = pckh_r.aggregate;
  res.auc_initial = auc(pairs_initial, gt.schema);
  res.auc_refined = auc(pairs_refined, gt.schema);

  const auto gt_frames = frames_of(gt);
  const MetricReport map_i = map_eval(frames_of(initial), gt_frames, gt.schema);
  const MetricReport map_r =
      map_eval(frames_of(refined_pose), gt_frames, gt.schema);
  res.map_initial = map_i.aggregate;
  res.map_refined = map_r.aggregate;

  const auto gt_seqs = sequences_of(gt);
  const MetricReport mota_i =
      mota_eval(sequences_of(initial_track), gt_seqs, gt.schema);
  const MetricReport mota_r =
      mota_eval(sequences_of(refined_track), gt_seqs, gt.schema);
  res.mota_initial = mota_i.aggregate;
  res.mota_refined = mota_r.aggregate;
  res.delta_table = format_delta_table(res, cfg.decode.tau);

  const fs::path out(out_dir);
  write_annotations_file(gt, (out / "gt.json").string());
  write_file((out / "initial.json").string(), write_predictions(initial));
  write_file((out / "refined_pose.json").string(),
             write_predictions(refined_pose));
  write_annotations_file(refined_track, (out / "refined_track.json").string());
  write_file((out / "checkpoint.ckpt").string(), save_checkpoint(net));
  write_file((out / "pckh_initial.json").string(), pckh_i.to_json());
  write_file((out / "pckh_refined.json").string(), pckh_r.to_json());
  write_file((out / "map_initial.json").string(), map_i.to_json());
  write_file((out / "map_refined.json").string(), map_r.to_json());
  write_file((out / "mota_initial.json").string(), mota_i.to_json());
  write_file((out / "mota_refined.json").string(), mota_r.to_json());
  write_file((out / "delta.txt").string(), res.delta_table);

  const int overlay_count = std::min<int>(4, static_cast<int>(gt.frames.size()));
  for (int fi = 0; fi < overlay_count; ++fi) {
    std::vector<OverlayPanel> panels(3);
    panels[0].title = "ground truth";
    panels[1].title = "initial";
    panels[2].title = "refined";
    for (const auto& p : gt.frames[fi].people)
      panels[0].poses.push_back(p.pose);
    for (const auto& p : initial.frames[fi].people)
      panels[1].poses.push_back(p.pose);
    for (const auto& p : refined_pose.frames[fi].people)
      panels[2].poses.push_back(p.pose);
    const std::string svg = overlay_svg(
        eval_images.get(gt.frames[fi].image), gt.schema, panels);
    char name[64];
    std::snprintf(name, sizeof(name), "overlays/frame_%03d.svg", fi);
    write_file((out / name).string(), svg);
  }
  return res;
}

}  // namespace pr
