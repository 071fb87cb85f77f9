#pragma once

#include <cmath>
#include <cstring>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pr/core.hpp"
#include "pr/rng.hpp"
#include "pr/tensorize.hpp"

namespace pr {

struct ShapeMismatch : PoseError {
  using PoseError::PoseError;
};

template <typename T>
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_) {
    v.assign(static_cast<size_t>(c) * h * w, T(0));
  }
  size_t plane() const { return static_cast<size_t>(h) * w; }
  T* channel(int i) { return v.data() + i * plane(); }
  const T* channel(int i) const { return v.data() + i * plane(); }
};

struct LayerSpec {
  enum class Kind { Conv, Relu } kind = Kind::Relu;
  int out_c = 0, kernel = 0, stride = 1, pad = 0;  // Conv only
};

// Declarative trunk description; serialized verbatim into checkpoints.
struct NetConfig {
  int input_channels = 0;
  int joints = 0;  // n; output channels = 3n
  std::vector<LayerSpec> layers;

  std::string to_text() const;
  static NetConfig from_text(const std::string& text);
  void validate() const;
  int total_stride() const;
  // Default desk-scale trunk: stride-8, three stride-2 stages.
  static NetConfig default_config(int input_channels, int joints);
};

template <typename T>
struct ConvParams {
  int in_c = 0, out_c = 0, kernel = 0, stride = 1, pad = 0;
  std::vector<T> w;  // out_c x in_c x k x k
  std::vector<T> b;  // out_c
};

struct LossWeights {
  double w_heat = 1.0;
  double w_off = 0.05;
};

struct LossBreakdown {
  double total = 0.0;
  double heatmap_bce = 0.0;
  double offset_mse = 0.0;
};

namespace detail {

inline int conv_out_dim(int in, int k, int s, int p) {
  return (in + 2 * p - k) / s + 1;
}

template <typename T>
void im2col(const Tensor<T>& in, int k, int s, int p, int oh, int ow,
            std::vector<T>& col) {
  const int rows = in.c * k * k;
  col.assign(static_cast<size_t>(rows) * oh * ow, T(0));
  for (int c = 0; c < in.c; ++c) {
    const T* src = in.channel(c);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col.data() +
                 (static_cast<size_t>((c * k + ky) * k + kx)) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s - p + ky;
          if (iy < 0 || iy >= in.h) continue;
          const int ix0 = -p + kx;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s + ix0;
            if (ix >= 0 && ix < in.w) dst[oy * ow + ox] = src[iy * in.w + ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const std::vector<T>& col, int in_c, int in_h, int in_w, int k,
            int s, int p, int oh, int ow, Tensor<T>& grad_in) {
  grad_in = Tensor<T>(in_c, in_h, in_w);
  for (int c = 0; c < in_c; ++c) {
    T* dst = grad_in.channel(c);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col.data() +
                       (static_cast<size_t>((c * k + ky) * k + kx)) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s - p + ky;
          if (iy < 0 || iy >= in_h) continue;
          const int ix0 = -p + kx;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s + ix0;
            if (ix >= 0 && ix < in_w) dst[iy * in_w + ix] += src[oy * ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

// Fully convolutional refiner: trunk per NetConfig, final Conv emits
// n heatmap logits followed by 2n offset channels (stride units).
template <typename T>
class RefinerNet {
 public:
  RefinerNet() = default;
  explicit RefinerNet(const NetConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    int in_c = cfg_.input_channels;
    for (const auto& spec : cfg_.layers) {
      if (spec.kind == LayerSpec::Kind::Conv) {
        ConvParams<T> p;
        p.in_c = in_c;
        p.out_c = spec.out_c;
        p.kernel = spec.kernel;
        p.stride = spec.stride;
        p.pad = spec.pad;
        p.w.assign(static_cast<size_t>(p.out_c) * p.in_c * p.kernel * p.kernel,
                   T(0));
        p.b.assign(p.out_c, T(0));
        convs_.push_back(std::move(p));
        in_c = spec.out_c;
      }
    }
  }

  const NetConfig& config() const { return cfg_; }
  std::vector<ConvParams<T>>& convs() { return convs_; }
  const std::vector<ConvParams<T>>& convs() const { return convs_; }

  size_t param_count() const {
    size_t c = 0;
    for (const auto& p : convs_) c += p.w.size() + p.b.size();
    return c;
  }

  std::vector<T> flat_params() const {
    std::vector<T> out;
    out.reserve(param_count());
    for (const auto& p : convs_) {
      out.insert(out.end(), p.w.begin(), p.w.end());
      out.insert(out.end(), p.b.begin(), p.b.end());
    }
    return out;
  }

  void set_flat_params(const std::vector<T>& flat) {
    if (flat.size() != param_count())
      throw ShapeMismatch("parameter count mismatch");
    size_t pos = 0;
    for (auto& p : convs_) {
      std::copy(flat.begin() + pos, flat.begin() + pos + p.w.size(),
                p.w.begin());
      pos += p.w.size();
      std::copy(flat.begin() + pos, flat.begin() + pos + p.b.size(),
                p.b.begin());
      pos += p.b.size();
    }
  }

  // He init; if rgb_pretrained is given, its first-layer RGB filter slices
  // are copied and the extra pose-channel slices tiled cyclically from them.
  void init_weights(const std::optional<RefinerNet<T>>& rgb_pretrained,
                    std::uint64_t seed) {
    for (size_t li = 0; li < convs_.size(); ++li) {
      auto& p = convs_[li];
      RngStream s(RngKey(seed).derive("init").derive(li));
      const double stddev =
          std::sqrt(2.0 / (static_cast<double>(p.in_c) * p.kernel * p.kernel));
      for (auto& w : p.w) w = static_cast<T>(stddev * s.normal());
      for (auto& b : p.b) b = T(0);
    }
    if (!rgb_pretrained) return;
    const auto& src = rgb_pretrained->convs();
    if (src.empty() || convs_.empty()) return;
    const auto& s0 = src[0];
    auto& d0 = convs_[0];
    if (s0.in_c != 3 || s0.out_c != d0.out_c || s0.kernel != d0.kernel)
      throw ShapeMismatch("pretrained first layer incompatible");
    const int kk = d0.kernel * d0.kernel;
    for (int oc = 0; oc < d0.out_c; ++oc)
      for (int ic = 0; ic < d0.in_c; ++ic) {
        const int sic = ic < 3 ? ic : (ic - 3) % 3;
        std::copy(s0.w.begin() + (static_cast<size_t>(oc) * 3 + sic) * kk,
                  s0.w.begin() + (static_cast<size_t>(oc) * 3 + sic + 1) * kk,
                  d0.w.begin() + (static_cast<size_t>(oc) * d0.in_c + ic) * kk);
      }
    for (size_t li = 1; li < convs_.size() && li < src.size(); ++li) {
      if (convs_[li].w.size() == src[li].w.size()) {
        convs_[li].w = src[li].w;
        convs_[li].b = src[li].b;
      }
    }
  }

  struct Cache {
    std::vector<Tensor<T>> acts;          // activation entering each layer
    std::vector<std::vector<T>> cols;     // im2col buffers per conv
    Tensor<T> out;
  };

  Tensor<T> forward(const Tensor<T>& input, Cache* cache = nullptr) const {
    if (input.c != cfg_.input_channels)
      throw ShapeMismatch("input channel count mismatch");
    Tensor<T> x = input;
    size_t ci = 0;
    std::vector<T> col;
    for (const auto& spec : cfg_.layers) {
      if (cache) cache->acts.push_back(x);
      if (spec.kind == LayerSpec::Kind::Relu) {
        for (auto& v : x.v) v = v > T(0) ? v : T(0);
        continue;
      }
      const auto& p = convs_[ci++];
      const int oh = detail::conv_out_dim(x.h, p.kernel, p.stride, p.pad);
      const int ow = detail::conv_out_dim(x.w, p.kernel, p.stride, p.pad);
      detail::im2col(x, p.kernel, p.stride, p.pad, oh, ow, col);
      Tensor<T> y(p.out_c, oh, ow);
      const int rows = p.in_c * p.kernel * p.kernel;
      const size_t cells = static_cast<size_t>(oh) * ow;
      for (int oc = 0; oc < p.out_c; ++oc) {
        T* out_row = y.channel(oc);
        const T* wrow = p.w.data() + static_cast<size_t>(oc) * rows;
        for (size_t j = 0; j < cells; ++j) out_row[j] = p.b[oc];
        for (int r = 0; r < rows; ++r) {
          const T wv = wrow[r];
          if (wv == T(0)) continue;
          const T* crow = col.data() + static_cast<size_t>(r) * cells;
          for (size_t j = 0; j < cells; ++j) out_row[j] += wv * crow[j];
        }
      }
      if (cache) cache->cols.push_back(col);
      x = std::move(y);
    }
    if (cache) cache->out = x;
    return x;
  }

  // Splits the 3n-channel output into heatmap logits and offsets.
  static void split_output(const Tensor<T>& out, int n, Tensor<T>& logits,
                           Tensor<T>& offsets) {
    if (out.c != 3 * n) throw ShapeMismatch("output channel count != 3n");
    logits = Tensor<T>(n, out.h, out.w);
    offsets = Tensor<T>(2 * n, out.h, out.w);
    const size_t plane = out.plane();
    std::copy(out.v.begin(), out.v.begin() + n * plane, logits.v.begin());
    std::copy(out.v.begin() + n * plane, out.v.end(), offsets.v.begin());
  }

  // Gradients for all parameters, same layout as flat_params.
  std::vector<T> backward(const Cache& cache, const Tensor<T>& grad_out) {
    std::vector<ConvParams<T>> grads;
    for (const auto& p : convs_) {
      ConvParams<T> g = p;
      std::fill(g.w.begin(), g.w.end(), T(0));
      std::fill(g.b.begin(), g.b.end(), T(0));
      grads.push_back(std::move(g));
    }
    Tensor<T> dy = grad_out;
    size_t ci = convs_.size();
    size_t coli = cache.cols.size();
    for (int li = static_cast<int>(cfg_.layers.size()) - 1; li >= 0; --li) {
      const auto& spec = cfg_.layers[li];
      const Tensor<T>& x = cache.acts[li];
      if (spec.kind == LayerSpec::Kind::Relu) {
        for (size_t i = 0; i < dy.v.size(); ++i)
          if (x.v[i] <= T(0)) dy.v[i] = T(0);
        continue;
      }
      const auto& p = convs_[--ci];
      auto& g = grads[ci];
      const std::vector<T>& col = cache.cols[--coli];
      const int rows = p.in_c * p.kernel * p.kernel;
      const size_t cells = dy.plane();
      // dW = dY * col^T, db = row sums of dY
      for (int oc = 0; oc < p.out_c; ++oc) {
        const T* dyrow = dy.channel(oc);
        T* gwrow = g.w.data() + static_cast<size_t>(oc) * rows;
        T acc = T(0);
        for (size_t j = 0; j < cells; ++j) acc += dyrow[j];
        g.b[oc] += acc;
        for (int r = 0; r < rows; ++r) {
          const T* crow = col.data() + static_cast<size_t>(r) * cells;
          T s = T(0);
          for (size_t j = 0; j < cells; ++j) s += dyrow[j] * crow[j];
          gwrow[r] += s;
        }
      }
      // dcol = W^T * dY, then scatter back to the input grid
      std::vector<T> dcol(static_cast<size_t>(rows) * cells, T(0));
      for (int oc = 0; oc < p.out_c; ++oc) {
        const T* dyrow = dy.channel(oc);
        const T* wrow = p.w.data() + static_cast<size_t>(oc) * rows;
        for (int r = 0; r < rows; ++r) {
          const T wv = wrow[r];
          if (wv == T(0)) continue;
          T* drow = dcol.data() + static_cast<size_t>(r) * cells;
          for (size_t j = 0; j < cells; ++j) drow[j] += wv * dyrow[j];
        }
      }
      Tensor<T> dx;
      detail::col2im(dcol, x.c, x.h, x.w, p.kernel, p.stride, p.pad, dy.h,
                     dy.w, dx);
      dy = std::move(dx);
    }
    std::vector<T> flat;
    flat.reserve(param_count());
    for (const auto& g : grads) {
      flat.insert(flat.end(), g.w.begin(), g.w.end());
      flat.insert(flat.end(), g.b.begin(), g.b.end());
    }
    return flat;
  }

 private:
  NetConfig cfg_;
  std::vector<ConvParams<T>> convs_;
};

template <typename T>
T clip_logit(T z) {
  const T lim = T(30);
  return z > lim ? lim : (z < -lim ? -lim : z);
}

// total = w_heat * mean BCE over heatmap cells
//       + w_off  * mean squared error over masked offsets (stride units).
// grad_out, when non-null, receives d(total)/d(raw network output).
template <typename T>
LossBreakdown refiner_loss(const Tensor<T>& out, int n,
                           const std::vector<float>& heatmap_target,
                           const std::vector<float>& offset_target,
                           const std::vector<float>& offset_mask, int stride,
                           const LossWeights& lw,
                           Tensor<T>* grad_out = nullptr) {
  if (out.c != 3 * n) throw ShapeMismatch("output channel count != 3n");
  const size_t plane = out.plane();
  if (heatmap_target.size() != static_cast<size_t>(n) * plane)
    throw ShapeMismatch("heatmap target shape mismatch");
  if (grad_out) *grad_out = Tensor<T>(out.c, out.h, out.w);

  LossBreakdown lb;
  const size_t heat_count = static_cast<size_t>(n) * plane;
  double bce = 0.0;
  for (size_t i = 0; i < heat_count; ++i) {
    const T z = clip_logit(out.v[i]);
    const double t = heatmap_target[i];
    const double p = 1.0 / (1.0 + std::exp(-static_cast<double>(z)));
    // numerically stable log-sigmoid forms
    const double log_p = -std::log1p(std::exp(-static_cast<double>(z)));
    const double log_1p = -static_cast<double>(z) + log_p;
    bce -= t * log_p + (1.0 - t) * log_1p;
    if (grad_out)
      grad_out->v[i] = static_cast<T>(lw.w_heat * (p - t) / heat_count);
  }
  lb.heatmap_bce = bce / static_cast<double>(heat_count);

  double mask_total = 0.0;
  for (float m : offset_mask) mask_total += m;
  const double off_count = std::max(1.0, 2.0 * mask_total);
  double mse = 0.0;
  for (int j = 0; j < 2 * n; ++j) {
    const T* pred = out.v.data() + heat_count + static_cast<size_t>(j) * plane;
    const float* targ = offset_target.data() + static_cast<size_t>(j) * plane;
    const float* mask = offset_mask.data() + static_cast<size_t>(j / 2) * plane;
    T* grad = grad_out ? grad_out->v.data() + heat_count +
                             static_cast<size_t>(j) * plane
                       : nullptr;
    for (size_t i = 0; i < plane; ++i) {
      if (mask[i] == 0.0f) continue;
      const double err = static_cast<double>(pred[i]) - targ[i] / stride;
      mse += err * err;
      if (grad) grad[i] = static_cast<T>(lw.w_off * 2.0 * err / off_count);
    }
  }
  lb.offset_mse = mse / off_count;
  lb.total = lw.w_heat * lb.heatmap_bce + lw.w_off * lb.offset_mse;
  return lb;
}

struct TrainSchedule {
  // (epochs, learning rate) segments; epochs may be fractional.
  std::vector<std::pair<double, double>> segments;
  int batch_size = 1;

  // Reference schedule shape: 1/3 epoch warmup then three long segments.
  static TrainSchedule reference_default() {
    return TrainSchedule{
        {{1.0 / 3.0, 0.005}, {15.0, 0.02}, {10.0, 0.002}, {10.0, 0.001}}, 1};
  }
  double total_epochs() const {
    double t = 0.0;
    for (const auto& [e, lr] : segments) t += e;
    return t;
  }
  double lr_at(double epoch_pos) const;
  void validate() const;
};

std::string save_checkpoint(const RefinerNet<float>& net);
RefinerNet<float> load_checkpoint(const std::string& bytes);

}  // namespace pr
