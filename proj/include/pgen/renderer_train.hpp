#pragma once

#include <functional>
#include <vector>

#include "pgen/image_tensor.hpp"
#include "pgen/renderer.hpp"
#include "pgen/rng.hpp"

namespace pgen::render {

// Same-person pair: exemplar image/heatmap (A) and target image/heatmap (B),
// each tensor with n = 1.
template <typename S = float>
struct RenderPair {
  Tensor<S> image_a, image_b;  // 1x3xHxW in [-1,1]
  Tensor<S> heat_a, heat_b;    // 1x6xHxW binary
};

struct TrainLogRow {
  int step = 0;
  double l1 = 0, gan = 0, vgg4 = 0, vgg9 = 0, total = 0, d_loss = 0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  int steps_run = 0;
  bool diverged = false;
  bool reached_l1_target = false;
};

// Generator + discriminator + the config they were built with.
template <typename S = float>
struct RendererBundle {
  explicit RendererBundle(const RendererConfig& cfg) : config(cfg), generator(cfg), discriminator(6, cfg.width_scale, true) {}

  RendererConfig config;
  Generator<S> generator;
  PatchDiscriminator<S> discriminator;

  void collect(std::vector<nn::ParamSlot<S>>& g_slots, std::vector<nn::ParamSlot<S>>& d_slots) {
    generator.collect(g_slots, "G");
    discriminator.collect(d_slots, "D");
  }

  void init_weights() {
    std::vector<nn::ParamSlot<S>> g, d;
    collect(g, d);
    Rng rng(config.seed);
    nn::init_normal(g, rng, config.init_stddev);
    nn::init_normal(d, rng, config.init_stddev);
  }
};

namespace detail {

template <typename S>
std::vector<Vec<S>> snapshot_params(const std::vector<nn::ParamSlot<S>>& slots) {
  std::vector<Vec<S>> out;
  out.reserve(slots.size());
  for (const auto& s : slots) out.push_back(*s.value);
  return out;
}

template <typename S>
void restore_params(std::vector<nn::ParamSlot<S>>& slots, const std::vector<Vec<S>>& snap) {
  for (std::size_t i = 0; i < slots.size(); ++i) *slots[i].value = snap[i];
}

using nn::Vec;

}  // namespace detail

// Alternating D/G updates over same-person pose-transfer pairs. Aborts on a
// non-finite loss, restoring the last finite-step parameters.
template <typename S>
TrainResult train_renderer(RendererBundle<S>& bundle, const std::vector<RenderPair<S>>& pairs,
                           nn::PerceptualExtractor<S>& phi,
                           const std::function<void(const TrainLogRow&)>& on_step = nullptr) {
  if (pairs.empty()) throw std::invalid_argument("train_renderer: empty dataset");
  const RendererConfig& cfg = bundle.config;
  for (const auto& p : pairs) {
    p.image_a.require_shape(1, 3, p.image_a.h, p.image_a.w, "train_renderer pair image");
    p.heat_a.require_shape(1, 6, p.image_a.h, p.image_a.w, "train_renderer pair heatmap");
  }

  std::vector<nn::ParamSlot<S>> g_slots, d_slots;
  bundle.collect(g_slots, d_slots);
  nn::Adam<S> adam_g(cfg.optimizer), adam_d(cfg.optimizer);
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  std::vector<int> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  std::size_t cursor = order.size();  // triggers shuffle on first batch

  TrainResult result;
  std::vector<detail::Vec<S>> snap_g, snap_d;
  const int batch = std::max(1, cfg.batch_size);

  for (int step = 1; step <= cfg.steps; ++step) {
    // assemble the next batch, reshuffling each epoch
    std::vector<const Tensor<S>*> ia, ib, ha, hb;
    for (int b = 0; b < batch; ++b) {
      if (cursor >= order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      const RenderPair<S>& p = pairs[order[cursor++]];
      ia.push_back(&p.image_a);
      ib.push_back(&p.image_b);
      ha.push_back(&p.heat_a);
      hb.push_back(&p.heat_b);
    }
    Tensor<S> batch_ia = stack_batch(ia), batch_ib = stack_batch(ib);
    Tensor<S> pose = nn::concat_channels(stack_batch(ha), stack_batch(hb));

    Tensor<S> fake = bundle.generator.forward(batch_ia, pose, true);

    auto abort_diverged = [&]() {
      if (!snap_g.empty()) {
        detail::restore_params(g_slots, snap_g);
        detail::restore_params(d_slots, snap_d);
      }
      result.diverged = true;
    };

    // discriminator step (generated batch treated as constant)
    nn::zero_grads(d_slots);
    Tensor<S> d_real = bundle.discriminator.forward(batch_ia, batch_ib, true);
    Tensor<S> g_real;
    double loss_real = bce_against_constant(d_real, 1.0, &g_real);
    g_real.data *= S(0.5);
    bundle.discriminator.backward(g_real);
    Tensor<S> d_fake = bundle.discriminator.forward(batch_ia, fake, true);
    Tensor<S> g_fake_map;
    double loss_fake = bce_against_constant(d_fake, 0.0, &g_fake_map);
    g_fake_map.data *= S(0.5);
    bundle.discriminator.backward(g_fake_map);
    double d_loss = 0.5 * (loss_real + loss_fake);
    if (!std::isfinite(d_loss)) {
      abort_diverged();
      break;
    }
    adam_d.step(d_slots);

    // generator step against the just-updated discriminator; loss_generator
    // reruns D on the fake pair for its own gradient (those D grads are
    // scratch, zeroed at the next D step)
    nn::zero_grads(g_slots);
    Tensor<S> grad_fake;
    GenLossComponents comps = loss_generator(fake, batch_ib, batch_ia, bundle.discriminator, phi, cfg.lambda1,
                                             cfg.lambda2, cfg.lambda3, &grad_fake);
    if (!std::isfinite(comps.total)) {
      abort_diverged();
      break;
    }
    bundle.generator.backward(grad_fake);
    adam_g.step(g_slots);

    snap_g = detail::snapshot_params(g_slots);
    snap_d = detail::snapshot_params(d_slots);

    TrainLogRow row{step, comps.l1, comps.gan, comps.vgg4, comps.vgg9, comps.total, d_loss};
    result.log.push_back(row);
    result.steps_run = step;
    if (on_step) on_step(row);
    if (cfg.l1_early_stop > 0 && comps.l1 < cfg.l1_early_stop) {
      result.reached_l1_target = true;
      break;
    }
  }
  return result;
}

}  // namespace pgen::render
