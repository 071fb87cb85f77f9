#include "pr/train.hpp"

#include <algorithm>
#include <cmath>

#include "pr/image.hpp"

namespace pr {

const ImageRaster& ImageCache::get(const std::string& path) {
  auto it = cache_.find(path);
  if (it != cache_.end()) return it->second;
  const std::string full = root_.empty() ? path : root_ + "/" + path;
  return cache_.emplace(path, load_image(full)).first->second;
}

void ImageCache::put(const std::string& path, ImageRaster img) {
  cache_[path] = std::move(img);
}

namespace {

struct SampleRef {
  int frame = 0;
  int person = 0;
};

// Deterministic Fisher-Yates keyed by (seed, epoch).
void shuffle_order(std::vector<SampleRef>& order, std::uint64_t seed,
                   int epoch) {
  RngStream s(RngKey(seed).derive("order").derive(epoch));
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[s.below(i)]);
}

}  // namespace

TrainLog train(RefinerNet<float>& net, const Dataset& ds, ImageCache& images,
               const TrainOptions& opts) {
  opts.schedule.validate();
  opts.synth.validate();
  if (ds.frames.empty()) throw PoseError("training dataset is empty");

  std::vector<SampleRef> samples;
  for (int fi = 0; fi < static_cast<int>(ds.frames.size()); ++fi)
    for (int pi = 0; pi < static_cast<int>(ds.frames[fi].people.size()); ++pi)
      samples.push_back({fi, pi});
  if (samples.empty()) throw PoseError("training dataset has no poses");

  const int n = net.config().joints;
  const double total_epochs = opts.schedule.total_epochs();
  const std::int64_t total_steps = std::llround(
      total_epochs * static_cast<double>(samples.size()));

  TrainLog log;
  double epoch_sum = 0.0;
  int epoch_count = 0;

  typename RefinerNet<float>::Cache cache;
  for (std::int64_t step = 0; step < total_steps; ++step) {
    const int epoch = static_cast<int>(step / samples.size());
    const size_t pos = static_cast<size_t>(step % samples.size());
    if (pos == 0) {
      shuffle_order(samples, opts.seed, epoch);
      if (epoch > 0) {
        log.epoch_mean_loss.push_back(epoch_sum / epoch_count);
        epoch_sum = 0.0;
        epoch_count = 0;
      }
    }
    const SampleRef ref = samples[pos];
    const DatasetFrame& frame = ds.frames[ref.frame];
    const Pose& gt = frame.people[ref.person].pose;
    if (gt.present_count() == 0) continue;

    std::vector<Pose> neighbors;
    for (int pi = 0; pi < static_cast<int>(frame.people.size()); ++pi)
      if (pi != ref.person) neighbors.push_back(frame.people[pi].pose);

    RngKey key = RngKey(opts.seed)
                     .derive(frame.sequence_id.value_or(""))
                     .derive(frame.frame_index)
                     .derive(ref.person)
                     .derive(epoch);
    const Pose input_pose =
        synthesize_input(gt, neighbors, ds.schema, opts.synth, key);

    // The rescale augmentation folds into the normalization scale; a plain
    // joint rescale before normalization would be cancelled by it.
    double jitter = 1.0;
    bool flip = false;
    if (opts.augment_enabled) {
      RngStream s(key.derive("augment"));
      jitter = s.uniform(0.7, 1.3);
      flip = s.bernoulli(0.5);
    }

    const Pose& crop_ref = input_pose.present_count() > 0 ? input_pose : gt;
    const ImageRaster& image = images.get(frame.image);
    NormResult norm;
    try {
      norm = normalize(image, crop_ref, opts.geom, jitter);
    } catch (const HeightUndefined&) {
      continue;
    }
    Pose gt_crop = to_crop_frame(gt, norm.params);
    Pose in_crop = to_crop_frame(input_pose, norm.params);
    ImageRaster crop = std::move(norm.image);
    if (flip) {
      crop = flip_horizontal(crop);
      gt_crop = flip_pose(gt_crop, ds.schema, crop.width);
      in_crop = flip_pose(in_crop, ds.schema, crop.width);
    }

    const TensorPack pack =
        build_tensor_pack(crop, in_crop, gt_crop, n, opts.geom);
    Tensor<float> input(pack.channels, pack.height, pack.width);
    input.v = pack.input;

    cache.acts.clear();
    cache.cols.clear();
    const Tensor<float> out = net.forward(input, &cache);
    Tensor<float> grad_out;
    const LossBreakdown lb =
        refiner_loss(out, n, pack.heatmap_target, pack.offset_target,
                     pack.offset_mask, opts.geom.stride, opts.loss, &grad_out);
    std::vector<float> grads = net.backward(cache, grad_out);
    if (opts.clip_norm > 0.0) {
      double sq = 0.0;
      for (float g : grads) sq += static_cast<double>(g) * g;
      const double norm = std::sqrt(sq);
      if (norm > opts.clip_norm) {
        const float scale = static_cast<float>(opts.clip_norm / norm);
        for (float& g : grads) g *= scale;
      }
    }

    const double lr = opts.schedule.lr_at(
        static_cast<double>(step) / static_cast<double>(samples.size()));
    std::vector<float> params = net.flat_params();
    for (size_t i = 0; i < params.size(); ++i)
      params[i] -= static_cast<float>(lr) * grads[i];
    net.set_flat_params(params);

    log.step_loss.push_back(lb.total);
    epoch_sum += lb.total;
    ++epoch_count;
  }
  if (epoch_count > 0) log.epoch_mean_loss.push_back(epoch_sum / epoch_count);
  return log;
}

}  // namespace pr
