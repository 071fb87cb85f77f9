#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "pr/config.hpp"
#include "pr/pipeline.hpp"
#include "pr/toyset.hpp"

namespace fs = std::filesystem;
using namespace pr;

namespace {

PipelineConfig load_cfg(const std::string& path,
                        const std::optional<std::uint64_t>& seed_flag) {
  PipelineConfig cfg =
      path.empty() ? desk_scale_config() : load_pipeline_config(path);
  if (seed_flag) cfg.seed = *seed_flag;
  return cfg;
}

void print_report(const MetricReport& rep) {
  std::printf("%-16s %10s", "joint", "value");
  const bool has_counts = !rep.fp.empty();
  if (has_counts) std::printf(" %8s %8s %8s", "tp", "fp", "fn");
  if (!rep.idsw.empty()) std::printf(" %8s", "idsw");
  std::printf("\n");
  for (size_t j = 0; j < rep.joints.size(); ++j) {
    std::printf("%-16s %10.2f", rep.joints[j].c_str(), rep.per_joint[j]);
    if (has_counts)
      std::printf(" %8lld %8lld %8lld",
                  static_cast<long long>(rep.tp.empty() ? 0 : rep.tp[j]),
                  static_cast<long long>(rep.fp[j]),
                  static_cast<long long>(rep.fn[j]));
    if (!rep.idsw.empty())
      std::printf(" %8lld", static_cast<long long>(rep.idsw[j]));
    std::printf("\n");
  }
  std::printf("%-16s %10.2f\n", "mean", rep.aggregate);
  if (rep.skipped_poses > 0)
    std::printf("(%lld poses skipped: head segment missing)\n",
                static_cast<long long>(rep.skipped_poses));
}

Dataset load_predictions(const std::string& path, double tau) {
  Dataset ds = parse_annotations_file(path);
  if (tau > 0.0)
    for (auto& f : ds.frames)
      for (auto& p : f.people) p.pose = apply_tau(p.pose, tau);
  return ds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pose refinement pipeline"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed_flag;
  int jobs = 1;
  app.add_option("--seed", seed_flag, "global random seed");
  app.add_option("--jobs", jobs, "worker count for parallel stages");
  std::string config_path;
  app.add_option("--config", config_path, "TOML pipeline config");

  auto* toyset_cmd = app.add_subcommand("toyset", "generate a toy dataset");
  std::string out_path;
  toyset_cmd->add_option("--out", out_path, "output directory")->required();

  auto* synth_cmd = app.add_subcommand("synth", "corrupt ground-truth poses");
  std::string in_path;
  synth_cmd->add_option("--in", in_path, "annotation file")->required();
  synth_cmd->add_option("--out", out_path, "corrupted output file")->required();

  auto* encode_cmd = app.add_subcommand("encode", "tensorize one sample");
  int frame_idx = 0, person_idx = 0;
  std::string dump_path, images_dir;
  encode_cmd->add_option("--in", in_path, "annotation file")->required();
  encode_cmd->add_option("--images", images_dir, "image root directory");
  encode_cmd->add_option("--frame", frame_idx, "frame index");
  encode_cmd->add_option("--person", person_idx, "person index");
  encode_cmd->add_option("--dump", dump_path, "tensor pack output")->required();

  auto* train_cmd = app.add_subcommand("train", "train the refiner");
  train_cmd->add_option("--out", out_path, "checkpoint output")->required();

  auto* refine_cmd = app.add_subcommand("refine", "refine predictions");
  std::string ckpt_path;
  double tau = 0.7;
  refine_cmd->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  refine_cmd->add_option("--in", in_path, "input predictions")->required();
  refine_cmd->add_option("--out", out_path, "refined output")->required();
  refine_cmd->add_option("--images", images_dir, "image root directory");
  refine_cmd->add_option("--tau", tau, "decode confidence threshold");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate predictions");
  std::string mode, gt_path, pred_path, report_path;
  double eval_tau = 0.0;
  eval_cmd->add_option("mode", mode, "pckh | pose | track")
      ->required()
      ->check(CLI::IsMember({"pckh", "pose", "track"}));
  eval_cmd->add_option("--gt", gt_path, "ground-truth file")->required();
  eval_cmd->add_option("--pred", pred_path, "prediction file")->required();
  eval_cmd->add_option("--tau", eval_tau, "score threshold applied first");
  eval_cmd->add_option("--out", report_path, "JSON report output");

  auto* demo_cmd = app.add_subcommand("demo", "end-to-end toy pipeline");
  demo_cmd->add_option("--out", out_path, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const PipelineConfig cfg = load_cfg(config_path, seed_flag);

    if (*toyset_cmd) {
      const ToySet set = generate_toy_dataset(cfg.toy, cfg.seed);
      write_toy_dataset(set, out_path);
      std::printf("wrote %zu frames to %s\n", set.images.size(),
                  out_path.c_str());
    } else if (*synth_cmd) {
      const Dataset gt = parse_annotations_file(in_path);
      const Dataset corrupted = corrupt_dataset(gt, cfg.synth, cfg.seed);
      write_file(out_path, write_predictions(corrupted));
      write_file(out_path + ".meta.json",
                 synth_config_json(cfg.synth, cfg.seed));
    } else if (*encode_cmd) {
      const Dataset ds = parse_annotations_file(in_path);
      if (frame_idx >= static_cast<int>(ds.frames.size()))
        throw ParseError("frame index out of range");
      const auto& frame = ds.frames[frame_idx];
      if (person_idx >= static_cast<int>(frame.people.size()))
        throw ParseError("person index out of range");
      ImageCache images(images_dir);
      const Pose& pose = frame.people[person_idx].pose;
      const NormResult norm = normalize(images.get(frame.image), pose, cfg.geom);
      const TensorPack pack = build_tensor_pack(
          norm.image, norm.pose, norm.pose, ds.schema.count(), cfg.geom);
      write_file(dump_path, dump_tensor_pack(pack));
      std::printf("wrote %dx%dx%d tensor pack to %s\n", pack.channels,
                  pack.height, pack.width, dump_path.c_str());
    } else if (*train_cmd) {
      if (cfg.data.annotations.empty())
        throw ConfigError("train requires [data] annotations in the config");
      const Dataset ds = parse_annotations_file(cfg.data.annotations);
      ImageCache images(cfg.data.images_dir);
      RefinerNet<float> net(cfg.net_config(ds.schema.count()));
      net.init_weights(std::nullopt, RngKey(cfg.seed).derive("init").state());
      TrainOptions topts;
      topts.schedule = cfg.train.schedule;
      topts.synth = cfg.synth;
      topts.geom = cfg.geom;
      topts.loss = cfg.train.loss;
      topts.augment_enabled = cfg.train.augment;
      topts.clip_norm = cfg.train.clip_norm;
      topts.seed = RngKey(cfg.seed).derive("train").state();
      const TrainLog log = train(net, ds, images, topts);
      for (size_t e = 0; e < log.epoch_mean_loss.size(); ++e)
        std::printf("epoch %zu mean loss %.6f\n", e, log.epoch_mean_loss[e]);
      write_file(out_path, save_checkpoint(net));
    } else if (*refine_cmd) {
      const RefinerNet<float> net = load_checkpoint(read_file(ckpt_path));
      const Dataset preds = parse_annotations_file(in_path);
      ImageCache images(images_dir);
      DecodeConfig dcfg = cfg.decode;
      dcfg.tau = tau;
      dcfg.stride = cfg.geom.stride;
      const Dataset refined =
          refine_dataset(net, preds, images, cfg.geom, dcfg, jobs);
      write_annotations_file(refined, out_path);
    } else if (*eval_cmd) {
      const Dataset gt = parse_annotations_file(gt_path);
      const Dataset pred = load_predictions(pred_path, eval_tau);
      MetricReport rep;
      if (mode == "pckh") {
        const auto pairs = pair_by_index(pred, gt);
        rep = pckh(pairs, gt.schema);
        print_report(rep);
        std::printf("AUC %.2f\n", auc(pairs, gt.schema));
      } else if (mode == "pose") {
        rep = map_eval(frames_of(pred), frames_of(gt), gt.schema);
        print_report(rep);
      } else {
        rep = mota_eval(sequences_of(pred), sequences_of(gt), gt.schema);
        print_report(rep);
      }
      if (!report_path.empty()) write_file(report_path, rep.to_json());
    } else if (*demo_cmd) {
      const DemoResult res = demo_pipeline(cfg, out_path, jobs);
      std::printf("%s", res.delta_table.c_str());
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
