#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pgen/nn/adam.hpp"
#include "pgen/nn/backbone.hpp"
#include "pgen/nn/layers.hpp"
#include "pgen/semantic_map.hpp"

namespace pgen::render {

using nn::Tensor;

enum class AttentionMode { Full, HrOnly, LrOnly, Baseline };

inline const char* attention_mode_name(AttentionMode m) {
  switch (m) {
    case AttentionMode::Full:
      return "full";
    case AttentionMode::HrOnly:
      return "hr_only";
    case AttentionMode::LrOnly:
      return "lr_only";
    case AttentionMode::Baseline:
      return "baseline";
  }
  return "full";
}

inline AttentionMode attention_mode_from_name(const std::string& name) {
  if (name == "full") return AttentionMode::Full;
  if (name == "hr_only") return AttentionMode::HrOnly;
  if (name == "lr_only") return AttentionMode::LrOnly;
  if (name == "baseline") return AttentionMode::Baseline;
  throw std::invalid_argument("unknown attention mode '" + name + "'");
}

struct RendererConfig {
  AttentionMode attention_mode = AttentionMode::Full;
  double lambda1 = 5.0;  // pixel l1
  double lambda2 = 1.0;  // adversarial
  double lambda3 = 5.0;  // perceptual (layers 4 and 9 summed)
  nn::AdamConfig optimizer{1e-3, 0.5, 0.999, 1e-8, 0.0};
  int batch_size = 4;
  double init_stddev = 0.02;
  std::vector<int> perceptual_layers{4, 9};
  double width_scale = 1.0;  // channel multiplier for desk-scale runs
  int steps = 500;
  std::uint64_t seed = 1;
  double l1_early_stop = -1.0;  // stop once the logged L1 drops below; off when negative

  int stem_channels() const { return std::max(1, int(std::lround(64.0 * width_scale))); }
};

// Per-decoder-stage gate inspection and pose-feature injection used by the
// gating tests: inject[k], when set, replaces the pose encoder output H^E_{k+1}.
template <typename S>
struct PoseProbe {
  std::array<const Tensor<S>*, 4> inject{nullptr, nullptr, nullptr, nullptr};
  // (decoder stage 1..4, sigmoid gate values) for every stage that gates
  std::vector<std::pair<int, Tensor<S>>> gates;
};

// Two identical encoding pathways (image and pose), a single gated decoding
// path and a residual tail; see forward() for the gating layout per mode.
template <typename S>
class Generator {
public:
  explicit Generator(const RendererConfig& cfg) : cfg_(cfg) {
    const int w = cfg.stem_channels();
    build_stem(img_stem_, 3, w);
    build_stem(pose_stem_, 12, w);
    for (int k = 0; k < 4; ++k) {
      build_down(img_down_[k], w << k, w << (k + 1));
      build_down(pose_down_[k], w << k, w << (k + 1));
    }
    // decoder: Baseline concatenates I^E_4 with H^E_4 in front of D_1
    int d1_in = cfg.attention_mode == AttentionMode::Baseline ? (w << 4) * 2 : (w << 4);
    build_up(dec_[0], d1_in, w << 3);
    build_up(dec_[1], w << 3, w << 2);
    build_up(dec_[2], w << 2, w << 1);
    build_up(dec_[3], w << 1, w);
    for (int i = 0; i < 4; ++i) tail_.template add<nn::ResidualBlock<S>>(w);
    tail_.template add<nn::Conv2d<S>>(w, 3, 1, 1, 0, false);
    tail_.template add<nn::Tanh<S>>();
  }

  // ia: Nx3xHxW in [-1,1]; pose: Nx12xHxW binary heatmap stack [H_A; H_B].
  Tensor<S> forward(const Tensor<S>& ia, const Tensor<S>& pose, bool train, PoseProbe<S>* probe = nullptr) {
    if (ia.c != 3) throw std::invalid_argument("Generator: exemplar must have 3 channels");
    if (pose.c != 12) throw std::invalid_argument("Generator: pose input must stack 12 heatmap channels");
    if (ia.h != pose.h || ia.w != pose.w || ia.n != pose.n)
      throw std::invalid_argument("Generator: exemplar/pose shape mismatch");

    Tensor<S> img = img_stem_.forward(ia, train);
    std::array<Tensor<S>, 4> img_feats;
    for (int k = 0; k < 4; ++k) {
      img = img_down_[k].forward(img, train);
      img_feats[k] = img;
    }

    Tensor<S> pf = pose_stem_.forward(pose, train);
    std::array<Tensor<S>, 4> pose_feats;
    for (int k = 0; k < 4; ++k) {
      pf = pose_down_[k].forward(pf, train);
      pose_feats[k] = (probe && probe->inject[k]) ? *probe->inject[k] : pf;
      if (probe && probe->inject[k]) pf = pose_feats[k];
    }

    const AttentionMode mode = cfg_.attention_mode;
    gate_sig_ = {};
    gate_left_ = {};
    baseline_concat_ = mode == AttentionMode::Baseline;

    Tensor<S> cur;
    if (baseline_concat_) {
      cur = nn::concat_channels(img_feats[3], pose_feats[3]);
    } else if (gates_at(1)) {
      cur = apply_gate(1, img_feats[3], pose_feats[3], train, probe);
    } else {
      cur = img_feats[3];
    }
    cur = dec_[0].forward(cur, train);
    for (int stage = 2; stage <= 4; ++stage) {
      if (gates_at(stage)) cur = apply_gate(stage, cur, pose_feats[4 - stage], train, probe);
      cur = dec_[stage - 1].forward(cur, train);
    }
    return tail_.forward(cur, train);
  }

  // Backward through the whole generator; gradients accumulate in the param
  // slots. Returns nothing useful to the caller (inputs are leaves).
  void backward(const Tensor<S>& g_out) {
    Tensor<S> g = tail_.backward(g_out);
    std::array<Tensor<S>, 5> g_pose{};  // grads at pose_feats[0..3], slot 4 unused
    std::array<bool, 4> has_pose{};
    for (int stage = 4; stage >= 2; --stage) {
      g = dec_[stage - 1].backward(g);
      if (gates_at(stage)) {
        auto [g_left, g_posefeat] = gate_backward(stage, g);
        g = std::move(g_left);
        g_pose[4 - stage] = std::move(g_posefeat);
        has_pose[4 - stage] = true;
      }
    }
    g = dec_[0].backward(g);
    Tensor<S> g_img4;
    if (baseline_concat_) {
      Tensor<S> g_pose4;
      nn::split_channels(g, g_img4, g_pose4, g.c / 2);
      g_pose[3] = std::move(g_pose4);
      has_pose[3] = true;
    } else if (gates_at(1)) {
      auto [g_left, g_posefeat] = gate_backward(1, g);
      g_img4 = std::move(g_left);
      g_pose[3] = std::move(g_posefeat);
      has_pose[3] = true;
    } else {
      g_img4 = std::move(g);
    }

    // image encoder chain
    Tensor<S> gi = std::move(g_img4);
    for (int k = 3; k >= 0; --k) gi = img_down_[k].backward(gi);
    img_stem_.backward(gi);

    // pose encoder chain with gate taps merged on the way down
    bool live = false;
    Tensor<S> gp;
    for (int k = 3; k >= 0; --k) {
      if (has_pose[k]) {
        if (live)
          gp.data += g_pose[k].data;
        else {
          gp = std::move(g_pose[k]);
          live = true;
        }
      }
      if (live) gp = pose_down_[k].backward(gp);
    }
    if (live) pose_stem_.backward(gp);
  }

  void collect(std::vector<nn::ParamSlot<S>>& out, const std::string& prefix) {
    img_stem_.collect(out, prefix + ".img_stem");
    pose_stem_.collect(out, prefix + ".pose_stem");
    for (int k = 0; k < 4; ++k) {
      img_down_[k].collect(out, prefix + ".img_down" + std::to_string(k + 1));
      pose_down_[k].collect(out, prefix + ".pose_down" + std::to_string(k + 1));
    }
    for (int k = 0; k < 4; ++k) dec_[k].collect(out, prefix + ".dec" + std::to_string(k + 1));
    tail_.collect(out, prefix + ".tail");
  }

  const RendererConfig& config() const { return cfg_; }

  // Encoder stage output channels/side for a given input side (stage 1..4).
  static std::pair<int, int> encoder_stage_shape(int stem_channels, int input_side, int stage) {
    return {stem_channels << stage, input_side >> stage};
  }

private:
  bool gates_at(int stage) const {
    switch (cfg_.attention_mode) {
      case AttentionMode::Full:
        return true;
      case AttentionMode::LrOnly:
        return stage == 1;
      case AttentionMode::HrOnly:
        return stage == 4;
      case AttentionMode::Baseline:
        return false;
    }
    return false;
  }

  Tensor<S> apply_gate(int stage, const Tensor<S>& left, const Tensor<S>& pose_feat, bool train,
                       PoseProbe<S>* probe) {
    if (!left.same_shape(pose_feat)) throw std::invalid_argument("Generator: gate operand shape mismatch");
    Tensor<S> sig = pose_feat;
    sig.data = S(1) / (S(1) + (-pose_feat.data).exp());
    Tensor<S> out = left;
    out.data *= sig.data;
    if (probe) probe->gates.push_back({stage, sig});
    if (train) {
      gate_sig_[stage - 1] = sig;
      gate_left_[stage - 1] = left;
    }
    return out;
  }

  std::pair<Tensor<S>, Tensor<S>> gate_backward(int stage, const Tensor<S>& g) {
    const Tensor<S>& sig = gate_sig_[stage - 1];
    const Tensor<S>& left = gate_left_[stage - 1];
    Tensor<S> g_left = g;
    g_left.data *= sig.data;
    Tensor<S> g_pose = g;
    g_pose.data *= left.data * sig.data * (S(1) - sig.data);
    return {std::move(g_left), std::move(g_pose)};
  }

  void build_stem(nn::Sequential<S>& seq, int in_c, int out_c) {
    seq.template add<nn::Conv2d<S>>(in_c, out_c, 3, 1, 1, false);
    seq.template add<nn::BatchNorm2d<S>>(out_c);
    seq.template add<nn::ReLU<S>>();
  }
  void build_down(nn::Sequential<S>& seq, int in_c, int out_c) {
    seq.template add<nn::Conv2d<S>>(in_c, out_c, 4, 2, 1, false);
    seq.template add<nn::BatchNorm2d<S>>(out_c);
    seq.template add<nn::ReLU<S>>();
    seq.template add<nn::ResidualBlock<S>>(out_c);
  }
  void build_up(nn::Sequential<S>& seq, int in_c, int out_c) {
    seq.template add<nn::ConvTranspose2d<S>>(in_c, out_c, 4, 2, 1);
    seq.template add<nn::BatchNorm2d<S>>(out_c);
    seq.template add<nn::ReLU<S>>();
    seq.template add<nn::ResidualBlock<S>>(out_c);
  }

  RendererConfig cfg_;
  nn::Sequential<S> img_stem_, pose_stem_;
  std::array<nn::Sequential<S>, 4> img_down_, pose_down_, dec_;
  nn::Sequential<S> tail_;
  std::array<Tensor<S>, 4> gate_sig_, gate_left_;
  bool baseline_concat_ = false;
};

// PatchGAN over depth-concatenated image pairs: 70x70 receptive fields, 30x30
// probability grid for 256x256 inputs. `probabilistic` selects the logistic
// head (the renderer's BCE losses); without it the output is a raw score map
// (least-squares losses, used by the coarse stage).
template <typename S>
class PatchDiscriminator {
public:
  PatchDiscriminator(int in_channels, double width_scale = 1.0, bool probabilistic = true) {
    const int b = std::max(1, int(std::lround(64.0 * width_scale)));
    seq_.template add<nn::Conv2d<S>>(in_channels, b, 4, 2, 1, true);
    seq_.template add<nn::LeakyReLU<S>>(0.2);
    seq_.template add<nn::Conv2d<S>>(b, b * 2, 4, 2, 1, false);
    seq_.template add<nn::BatchNorm2d<S>>(b * 2);
    seq_.template add<nn::LeakyReLU<S>>(0.2);
    seq_.template add<nn::Conv2d<S>>(b * 2, b * 4, 4, 2, 1, false);
    seq_.template add<nn::BatchNorm2d<S>>(b * 4);
    seq_.template add<nn::LeakyReLU<S>>(0.2);
    seq_.template add<nn::Conv2d<S>>(b * 4, b * 8, 4, 1, 1, false);
    seq_.template add<nn::BatchNorm2d<S>>(b * 8);
    seq_.template add<nn::LeakyReLU<S>>(0.2);
    seq_.template add<nn::Conv2d<S>>(b * 8, 1, 4, 1, 1, true);
    if (probabilistic) seq_.template add<nn::Sigmoid<S>>();
  }

  // Patch map over the channel-wise concatenated pair.
  Tensor<S> forward(const Tensor<S>& reference, const Tensor<S>& candidate, bool train) {
    if (!reference.same_shape(candidate)) throw std::invalid_argument("PatchDiscriminator: pair shape mismatch");
    last_half_channels_ = reference.c;
    return seq_.forward(nn::concat_channels(reference, candidate), train);
  }

  // Returns the gradient w.r.t. the candidate image (second half of the pair).
  Tensor<S> backward(const Tensor<S>& g_out) {
    Tensor<S> g = seq_.backward(g_out);
    Tensor<S> g_ref, g_cand;
    nn::split_channels(g, g_ref, g_cand, last_half_channels_);
    return g_cand;
  }

  void collect(std::vector<nn::ParamSlot<S>>& out, const std::string& prefix) { seq_.collect(out, prefix); }

private:
  nn::Sequential<S> seq_;
  int last_half_channels_ = 3;
};

// ---------------------------------------------------------------------------
// Losses (probability-space BCE with 1e-7 clamping).
// ---------------------------------------------------------------------------

inline constexpr double kBceClamp = 1e-7;

// Mean binary cross-entropy of a probability map against a constant target.
// Fills grad (dL/dp) when given.
template <typename S>
double bce_against_constant(const Tensor<S>& p, double target, Tensor<S>* grad = nullptr) {
  const double n = double(p.size());
  double loss = 0;
  if (grad) grad->resize(p.n, p.c, p.h, p.w);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    double v = std::min(std::max(double(p.data[i]), kBceClamp), 1.0 - kBceClamp);
    loss -= target * std::log(v) + (1.0 - target) * std::log(1.0 - v);
    if (grad) {
      bool clamped = double(p.data[i]) < kBceClamp || double(p.data[i]) > 1.0 - kBceClamp;
      grad->data[i] = clamped ? S(0) : S((-target / v + (1.0 - target) / (1.0 - v)) / n);
    }
  }
  return loss / n;
}

// Mean absolute error; grad w.r.t. a.
template <typename S>
double l1_mean(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>* grad = nullptr) {
  if (!a.same_shape(b)) throw std::invalid_argument("l1_mean: shape mismatch");
  const double n = double(a.size());
  double loss = 0;
  if (grad) grad->resize(a.n, a.c, a.h, a.w);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double d = double(a.data[i]) - double(b.data[i]);
    loss += std::abs(d);
    if (grad) grad->data[i] = S((d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) / n);
  }
  return loss / n;
}

struct GenLossComponents {
  double l1 = 0, gan = 0, vgg4 = 0, vgg9 = 0;
  double total = 0;
};

// Eq. 3-6: total = l1w*L1 + ganw*BCE(D(I_A, fake), 1) + vggw*(VGG_4 + VGG_9).
// When grad_fake is given, also backpropagates every term to the generated
// image (the discriminator and extractor weight grads are scratch; callers
// zero them before their own update).
template <typename S>
GenLossComponents loss_generator(const Tensor<S>& fake, const Tensor<S>& real, const Tensor<S>& exemplar,
                                 PatchDiscriminator<S>& disc, nn::PerceptualExtractor<S>& phi, double l1w,
                                 double ganw, double vggw, Tensor<S>* grad_fake = nullptr) {
  GenLossComponents out;
  const bool with_grad = grad_fake != nullptr;

  Tensor<S> g_l1;
  out.l1 = l1_mean(fake, real, with_grad ? &g_l1 : nullptr);

  Tensor<S> d_out = disc.forward(exemplar, fake, with_grad);
  Tensor<S> g_dout;
  out.gan = bce_against_constant(d_out, 1.0, with_grad ? &g_dout : nullptr);

  // real features first so the extractor caches stay on the fake pass for
  // the backward below
  std::vector<Tensor<S>> f_real, f_fake;
  phi.features(real, f_real);
  phi.features(fake, f_fake);
  if (f_fake.size() != 2) throw std::invalid_argument("loss_generator: expected two perceptual layers");
  std::vector<Tensor<S>> tap_grads(2);
  double vgg[2];
  for (int t = 0; t < 2; ++t)
    vgg[t] = l1_mean(f_fake[t], f_real[t], with_grad ? &tap_grads[t] : nullptr);
  out.vgg4 = vgg[0];
  out.vgg9 = vgg[1];

  out.total = l1w * out.l1 + ganw * out.gan + vggw * (out.vgg4 + out.vgg9);

  if (with_grad) {
    Tensor<S> g_phi = phi.backward(tap_grads);
    Tensor<S> g_gan = disc.backward(g_dout);
    grad_fake->resize(fake.n, fake.c, fake.h, fake.w);
    grad_fake->data = S(l1w) * g_l1.data + S(ganw) * g_gan.data + S(vggw) * g_phi.data;
  }
  return out;
}

// Eq. 7: average BCE over the real and fake transitions.
template <typename S>
double loss_discriminator(const Tensor<S>& d_real, const Tensor<S>& d_fake, Tensor<S>* grad_real = nullptr,
                          Tensor<S>* grad_fake = nullptr) {
  if (!d_real.same_shape(d_fake)) throw std::invalid_argument("loss_discriminator: patch map shape mismatch");
  double lr = bce_against_constant(d_real, 1.0, grad_real);
  double lf = bce_against_constant(d_fake, 0.0, grad_fake);
  if (grad_real) grad_real->data *= S(0.5);
  if (grad_fake) grad_fake->data *= S(0.5);
  return 0.5 * (lr + lf);
}

}  // namespace pgen::render
