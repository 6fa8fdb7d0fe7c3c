#pragma once

#include <cmath>
#include <vector>

#include "pgen/nn/layers.hpp"

namespace pgen::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Stochastic adaptive-moment optimizer with bias correction.
template <typename S>
class Adam {
public:
  explicit Adam(const AdamConfig& cfg = {}) : cfg_(cfg) {}

  void step(std::vector<ParamSlot<S>>& slots) {
    if (states_.empty())
      for (auto& s : slots)
        states_.push_back(s.grad ? State{Vec<S>::Zero(s.value->size()), Vec<S>::Zero(s.value->size())} : State{});
    ++t_;
    const S bc1 = S(1.0 - std::pow(cfg_.beta1, double(t_)));
    const S bc2 = S(1.0 - std::pow(cfg_.beta2, double(t_)));
    for (std::size_t i = 0; i < slots.size(); ++i) {
      auto& s = slots[i];
      if (!s.grad) continue;
      auto& st = states_[i];
      Vec<S> g = *s.grad;
      if (cfg_.weight_decay != 0.0) g += S(cfg_.weight_decay) * *s.value;
      st.m = S(cfg_.beta1) * st.m + S(1.0 - cfg_.beta1) * g;
      st.v = S(cfg_.beta2) * st.v + S(1.0 - cfg_.beta2) * g.square();
      *s.value -= S(cfg_.lr) * (st.m / bc1) / ((st.v / bc2).sqrt() + S(cfg_.eps));
    }
  }

  const AdamConfig& config() const { return cfg_; }

private:
  struct State {
    Vec<S> m, v;
  };
  AdamConfig cfg_;
  std::vector<State> states_;
  long t_ = 0;
};

}  // namespace pgen::nn
