#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "pgen/nn/layers.hpp"

namespace pgen::nn {

// Frozen feature taps of a deep conv stack: the pose/appearance losses and
// the knowledge-base encoder both consume intermediate activations of a
// pretrained classifier backbone through this interface.
template <typename S>
class PerceptualExtractor {
public:
  virtual ~PerceptualExtractor() = default;
  // Feature maps at the configured layer indices.
  virtual void features(const Tensor<S>& x, std::vector<Tensor<S>>& out) = 0;
  // Gradient at the input given gradients at each tap. Extractor weights stay
  // frozen; only the input gradient propagates.
  virtual Tensor<S> backward(const std::vector<Tensor<S>>& tap_grads) = 0;
  virtual const std::vector<int>& layers() const = 0;
};

// 19-layer classifier-style conv stack: five blocks of {2,2,4,4,4} 3x3 convs
// with 2x2 max pooling after each block. Layer indices count convs, ReLUs and
// pools in sequence, so index 4 is the first pool output and index 9 the
// second. Weights are either loaded from a checkpoint of pretrained values or
// seeded deterministically; they are never trained here.
template <typename S>
class VggBackbone : public PerceptualExtractor<S> {
public:
  // `block_widths` nominal: {64, 128, 256, 512, 512}. `max_layers` truncates
  // the stack (enough layers to cover the deepest requested tap).
  VggBackbone(std::vector<int> block_widths, std::vector<int> taps, std::uint64_t seed, int max_layers = -1)
      : taps_(std::move(taps)), widths_(std::move(block_widths)) {
    static const int convs_per_block[5] = {2, 2, 4, 4, 4};
    int in_c = 3;
    std::vector<int> fan_ins;
    int layer_idx = 0;
    int limit = max_layers < 0 ? 1 << 30 : max_layers;
    for (std::size_t b = 0; b < widths_.size() && layer_idx < limit; ++b) {
      for (int ci = 0; ci < convs_per_block[b] && layer_idx < limit; ++ci) {
        stack_.template add<Conv2d<S>>(in_c, widths_[b], 3, 1, 1, true);
        fan_ins.push_back(in_c * 9);
        in_c = widths_[b];
        ++layer_idx;
        if (layer_idx >= limit) break;
        stack_.template add<ReLU<S>>();
        ++layer_idx;
      }
      if (layer_idx < limit) {
        stack_.template add<MaxPool2d<S>>(2, 2);
        ++layer_idx;
      }
    }
    std::vector<ParamSlot<S>> slots;
    stack_.collect(slots, "backbone");
    Rng rng(seed);
    init_he(slots, rng, fan_ins);
    stack_.freeze();
  }

  void features(const Tensor<S>& x, std::vector<Tensor<S>>& out) override {
    stack_.forward_taps(x, true, taps_, out);
  }

  Tensor<S> backward(const std::vector<Tensor<S>>& tap_grads) override {
    return stack_.backward_taps(taps_, tap_grads);
  }

  const std::vector<int>& layers() const override { return taps_; }

  void collect(std::vector<ParamSlot<S>>& out, const std::string& prefix) { stack_.collect(out, prefix); }

  // Full-stack output (the final feature extraction layer).
  Tensor<S> forward(const Tensor<S>& x) { return stack_.forward(x, false); }

private:
  Sequential<S> stack_;
  std::vector<int> taps_;
  std::vector<int> widths_;
};

}  // namespace pgen::nn
