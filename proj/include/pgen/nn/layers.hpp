#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pgen/nn/conv_ops.hpp"
#include "pgen/nn/tensor.hpp"
#include "pgen/rng.hpp"

namespace pgen::nn {

enum class ParamKind { ConvWeight, Bias, NormGamma, NormBeta, Buffer };

template <typename S>
struct ParamSlot {
  std::string name;
  Vec<S>* value;
  Vec<S>* grad;  // nullptr for buffers
  ParamKind kind;
};

template <typename S>
class Layer {
public:
  virtual ~Layer() = default;
  virtual Tensor<S> forward(const Tensor<S>& x, bool train) = 0;
  virtual Tensor<S> backward(const Tensor<S>& gy) = 0;
  virtual void collect(std::vector<ParamSlot<S>>& out, const std::string& prefix) {}
  // Frozen layers still propagate input gradients but skip weight gradients.
  virtual void freeze() {}
};

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// ---------------------------------------------------------------------------
// Conv2d: weight is (in_c*k*k) x out_c so GEMM against the im2col patch
// matrix lands directly in channel-plane layout.
// ---------------------------------------------------------------------------
template <typename S>
class Conv2d : public Layer<S> {
public:
  Conv2d(int in_c, int out_c, int k, int stride, int pad, bool bias = false)
      : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad), has_bias_(bias) {
    w_.setZero(Eigen::Index(in_c) * k * k * out_c);
    gw_.setZero(w_.size());
    if (bias) {
      b_.setZero(out_c);
      gb_.setZero(out_c);
    }
  }

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    if (x.c != in_c_) throw std::invalid_argument("Conv2d: channel mismatch");
    ConvGeom g(in_c_, x.h, x.w, k_, stride_, pad_);
    Tensor<S> y(x.n, out_c_, g.out_h, g.out_w);
    ConstMatMap<S> wm(w_.data(), g.patch_len(), out_c_);
    Mat<S> p;
    for (int ni = 0; ni < x.n; ++ni) {
      im2col(x.sample_ptr(ni), g, p);
      y.sample_mat(ni).noalias() = p * wm;
      if (has_bias_) y.sample_mat(ni).rowwise() += b_.matrix().transpose();
    }
    if (train) x_ = x;
    return y;
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    ConvGeom g(in_c_, x_.h, x_.w, k_, stride_, pad_);
    Tensor<S> gx(x_.n, in_c_, x_.h, x_.w);
    ConstMatMap<S> wm(w_.data(), g.patch_len(), out_c_);
    MatMap<S> gwm(gw_.data(), g.patch_len(), out_c_);
    Mat<S> p, gp;
    for (int ni = 0; ni < gy.n; ++ni) {
      if (!frozen_) {
        im2col(x_.sample_ptr(ni), g, p);
        gwm.noalias() += p.transpose() * gy.sample_mat(ni);
        if (has_bias_) gb_ += gy.sample_mat(ni).colwise().sum().array().transpose();
      }
      gp.noalias() = gy.sample_mat(ni) * wm.transpose();
      col2im(gp, g, gx.sample_ptr(ni));
    }
    return gx;
  }

  void collect(std::vector<ParamSlot<S>>& out, const std::string& prefix) override {
    out.push_back({prefix + ".W", &w_, &gw_, ParamKind::ConvWeight});
    if (has_bias_) out.push_back({prefix + ".b", &b_, &gb_, ParamKind::Bias});
  }

  void freeze() override { frozen_ = true; }

  int out_channels() const { return out_c_; }

private:
  int in_c_, out_c_, k_, stride_, pad_;
  bool has_bias_;
  bool frozen_ = false;
  Vec<S> w_, gw_, b_, gb_;
  Tensor<S> x_;
};

// ---------------------------------------------------------------------------
// ConvTranspose2d, stored as the adjoint convolution's weight; forward is the
// conv backward-input pass and vice versa.
// ---------------------------------------------------------------------------
template <typename S>
class ConvTranspose2d : public Layer<S> {
public:
  ConvTranspose2d(int in_c, int out_c, int k, int stride, int pad, int output_pad = 0)
      : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad), opad_(output_pad) {
    w_.setZero(Eigen::Index(out_c) * k * k * in_c_);
    gw_.setZero(w_.size());
  }

  int out_side(int in_side) const { return (in_side - 1) * stride_ - 2 * pad_ + k_ + opad_; }

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    if (x.c != in_c_) throw std::invalid_argument("ConvTranspose2d: channel mismatch");
    int oh = out_side(x.h), ow = out_side(x.w);
    ConvGeom g(out_c_, oh, ow, k_, stride_, pad_);
    if (g.positions() != x.plane_size()) throw std::logic_error("ConvTranspose2d: geometry mismatch");
    Tensor<S> y(x.n, out_c_, oh, ow);
    ConstMatMap<S> wm(w_.data(), g.patch_len(), in_c_);
    Mat<S> gp;
    for (int ni = 0; ni < x.n; ++ni) {
      gp.noalias() = x.sample_mat(ni) * wm.transpose();
      col2im(gp, g, y.sample_ptr(ni));
    }
    if (train) x_ = x;
    return y;
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    ConvGeom g(out_c_, gy.h, gy.w, k_, stride_, pad_);
    Tensor<S> gx(x_.n, in_c_, x_.h, x_.w);
    ConstMatMap<S> wm(w_.data(), g.patch_len(), in_c_);
    MatMap<S> gwm(gw_.data(), g.patch_len(), in_c_);
    Mat<S> p;
    for (int ni = 0; ni < gy.n; ++ni) {
      im2col(gy.sample_ptr(ni), g, p);
      gx.sample_mat(ni).noalias() = p * wm;
      gwm.noalias() += p.transpose() * x_.sample_mat(ni);
    }
    return gx;
  }

  void collect(std::vector<ParamSlot<S>>& out, const std::string& prefix) override {
    out.push_back({prefix + ".W", &w_, &gw_, ParamKind::ConvWeight});
  }

private:
  int in_c_, out_c_, k_, stride_, pad_, opad_;
  Vec<S> w_, gw_;
  Tensor<S> x_;
};

// ---------------------------------------------------------------------------
// BatchNorm2d: per-channel stats over (N, H, W); running stats for eval.
// ---------------------------------------------------------------------------
template <typename S>
class BatchNorm2d : public Layer<S> {
public:
  explicit BatchNorm2d(int c, double momentum = 0.1, double eps = 1e-5) : c_(c), momentum_(momentum), eps_(eps) {
    gamma_.setOnes(c);
    beta_.setZero(c);
    ggamma_.setZero(c);
    gbeta_.setZero(c);
    running_mean_.setZero(c);
    running_var_.setOnes(c);
  }

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    if (x.c != c_) throw std::invalid_argument("BatchNorm2d: channel mismatch");
    Tensor<S> y(x.n, x.c, x.h, x.w);
    if (train) {
      const S m = S(x.n) * x.plane_size();
      Vec<S> mean = Vec<S>::Zero(c_), var = Vec<S>::Zero(c_);
      for (int ni = 0; ni < x.n; ++ni) mean += x.sample_mat(ni).colwise().sum().array().transpose();
      mean /= m;
      for (int ni = 0; ni < x.n; ++ni)
        var += (x.sample_mat(ni).rowwise() - mean.matrix().transpose()).array().square().colwise().sum().transpose();
      var /= m;
      inv_std_ = (var + S(eps_)).rsqrt();
      running_mean_ = S(1 - momentum_) * running_mean_ + S(momentum_) * mean;
      running_var_ = S(1 - momentum_) * running_var_ + S(momentum_) * var;
      x_hat_.resize(x.n, x.c, x.h, x.w);
      for (int ni = 0; ni < x.n; ++ni)
        x_hat_.sample_mat(ni) =
            (x.sample_mat(ni).rowwise() - mean.matrix().transpose()).array().rowwise() *
            inv_std_.matrix().transpose().array();
      for (int ni = 0; ni < x.n; ++ni)
        y.sample_mat(ni) = (x_hat_.sample_mat(ni).array().rowwise() * gamma_.matrix().transpose().array())
                               .rowwise() +
                           beta_.matrix().transpose().array();
      train_cached_ = true;
    } else {
      Vec<S> istd = (running_var_ + S(eps_)).rsqrt();
      for (int ni = 0; ni < x.n; ++ni)
        y.sample_mat(ni) = (((x.sample_mat(ni).rowwise() - running_mean_.matrix().transpose()).array().rowwise() *
                             istd.matrix().transpose().array())
                                .rowwise() *
                            gamma_.matrix().transpose().array())
                               .rowwise() +
                           beta_.matrix().transpose().array();
      train_cached_ = false;
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    if (!train_cached_) throw std::logic_error("BatchNorm2d: backward without train-mode forward");
    const S m = S(gy.n) * gy.plane_size();
    Vec<S> sum_gy = Vec<S>::Zero(c_), sum_gy_xhat = Vec<S>::Zero(c_);
    for (int ni = 0; ni < gy.n; ++ni) {
      sum_gy += gy.sample_mat(ni).colwise().sum().array().transpose();
      sum_gy_xhat += (gy.sample_mat(ni).array() * x_hat_.sample_mat(ni).array()).colwise().sum().transpose();
    }
    ggamma_ += sum_gy_xhat;
    gbeta_ += sum_gy;
    Tensor<S> gx(gy.n, gy.c, gy.h, gy.w);
    Vec<S> coef = gamma_ * inv_std_;
    for (int ni = 0; ni < gy.n; ++ni)
      gx.sample_mat(ni) = ((gy.sample_mat(ni).array().rowwise() - (sum_gy / m).matrix().transpose().array()) -
                           x_hat_.sample_mat(ni).array().rowwise() *
                               (sum_gy_xhat / m).matrix().transpose().array())
                              .rowwise() *
                          coef.matrix().transpose().array();
    return gx;
  }

  void collect(std::vector<ParamSlot<S>>& out, const std::string& prefix) override {
    out.push_back({prefix + ".gamma", &gamma_, &ggamma_, ParamKind::NormGamma});
    out.push_back({prefix + ".beta", &beta_, &gbeta_, ParamKind::NormBeta});
    out.push_back({prefix + ".running_mean", &running_mean_, nullptr, ParamKind::Buffer});
    out.push_back({prefix + ".running_var", &running_var_, nullptr, ParamKind::Buffer});
  }

private:
  int c_;
  double momentum_, eps_;
  Vec<S> gamma_, beta_, ggamma_, gbeta_, running_mean_, running_var_, inv_std_;
  Tensor<S> x_hat_;
  bool train_cached_ = false;
};

// ---------------------------------------------------------------------------
// InstanceNorm2d: per-(sample, channel) stats; identical in train and eval.
// ---------------------------------------------------------------------------
template <typename S>
class InstanceNorm2d : public Layer<S> {
public:
  explicit InstanceNorm2d(int c, double eps = 1e-5) : c_(c), eps_(eps) {
    gamma_.setOnes(c);
    beta_.setZero(c);
    ggamma_.setZero(c);
    gbeta_.setZero(c);
  }

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    if (x.c != c_) throw std::invalid_argument("InstanceNorm2d: channel mismatch");
    Tensor<S> y(x.n, x.c, x.h, x.w);
    x_hat_.resize(x.n, x.c, x.h, x.w);
    inv_std_.setZero(Eigen::Index(x.n) * c_);
    const S m = S(x.plane_size());
    for (int ni = 0; ni < x.n; ++ni) {
      auto xm = x.sample_mat(ni);
      Eigen::Matrix<S, 1, Eigen::Dynamic> mean = xm.colwise().mean();
      Eigen::Array<S, 1, Eigen::Dynamic> var =
          (xm.rowwise() - mean).array().square().colwise().sum() / m;
      Eigen::Array<S, 1, Eigen::Dynamic> istd = (var + S(eps_)).rsqrt();
      inv_std_.segment(Eigen::Index(ni) * c_, c_) = istd.transpose();
      x_hat_.sample_mat(ni) = (xm.rowwise() - mean).array().rowwise() * istd;
      y.sample_mat(ni) = (x_hat_.sample_mat(ni).array().rowwise() * gamma_.matrix().transpose().array()).rowwise() +
                         beta_.matrix().transpose().array();
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> gx(gy.n, gy.c, gy.h, gy.w);
    const S m = S(gy.plane_size());
    for (int ni = 0; ni < gy.n; ++ni) {
      auto gym = gy.sample_mat(ni);
      auto xh = x_hat_.sample_mat(ni);
      Eigen::Array<S, 1, Eigen::Dynamic> s1 = gym.colwise().sum().array();
      Eigen::Array<S, 1, Eigen::Dynamic> s2 = (gym.array() * xh.array()).colwise().sum();
      ggamma_ += s2.transpose();
      gbeta_ += s1.transpose();
      Eigen::Array<S, 1, Eigen::Dynamic> istd = inv_std_.segment(Eigen::Index(ni) * c_, c_).transpose();
      gx.sample_mat(ni) = ((gym.array().rowwise() - s1 / m) - xh.array().rowwise() * (s2 / m)).rowwise() *
                          (gamma_.transpose().array() * istd);
    }
    return gx;
  }

  void collect(std::vector<ParamSlot<S>>& out, const std::string& prefix) override {
    out.push_back({prefix + ".gamma", &gamma_, &ggamma_, ParamKind::NormGamma});
    out.push_back({prefix + ".beta", &beta_, &gbeta_, ParamKind::NormBeta});
  }

private:
  int c_;
  double eps_;
  Vec<S> gamma_, beta_, ggamma_, gbeta_, inv_std_;
  Tensor<S> x_hat_;
};

// ---------------------------------------------------------------------------
// Elementwise activations. The cached output is enough for the gradient.
// ---------------------------------------------------------------------------
template <typename S>
class ReLU : public Layer<S> {
public:
  Tensor<S> forward(const Tensor<S>& x, bool) override {
    y_ = x;
    y_.data = y_.data.max(S(0));
    return y_;
  }
  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> gx = gy;
    gx.data *= (y_.data > S(0)).template cast<S>();
    return gx;
  }

private:
  Tensor<S> y_;
};

template <typename S>
class LeakyReLU : public Layer<S> {
public:
  explicit LeakyReLU(double slope = 0.2) : slope_(slope) {}
  Tensor<S> forward(const Tensor<S>& x, bool) override {
    y_ = x;
    y_.data = (x.data > S(0)).select(x.data, x.data * S(slope_));
    return y_;
  }
  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> gx = gy;
    gx.data *= (y_.data > S(0)).select(Vec<S>::Ones(gy.size()), Vec<S>::Constant(gy.size(), S(slope_)));
    return gx;
  }

private:
  double slope_;
  Tensor<S> y_;
};

template <typename S>
class Sigmoid : public Layer<S> {
public:
  Tensor<S> forward(const Tensor<S>& x, bool) override {
    y_ = x;
    y_.data = S(1) / (S(1) + (-x.data).exp());
    return y_;
  }
  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> gx = gy;
    gx.data *= y_.data * (S(1) - y_.data);
    return gx;
  }

private:
  Tensor<S> y_;
};

template <typename S>
class Tanh : public Layer<S> {
public:
  Tensor<S> forward(const Tensor<S>& x, bool) override {
    y_ = x;
    y_.data = x.data.tanh();
    return y_;
  }
  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> gx = gy;
    gx.data *= S(1) - y_.data.square();
    return gx;
  }

private:
  Tensor<S> y_;
};

// ---------------------------------------------------------------------------
// Pooling.
// ---------------------------------------------------------------------------
template <typename S>
class MaxPool2d : public Layer<S> {
public:
  explicit MaxPool2d(int k = 2, int stride = 2) : k_(k), stride_(stride) {}

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    int oh = (x.h - k_) / stride_ + 1, ow = (x.w - k_) / stride_ + 1;
    Tensor<S> y(x.n, x.c, oh, ow);
    if (train) argmax_.resize(y.size());
    in_n_ = x.n;
    in_c_ = x.c;
    in_h_ = x.h;
    in_w_ = x.w;
    Eigen::Index oi = 0;
    for (int ni = 0; ni < x.n; ++ni)
      for (int ci = 0; ci < x.c; ++ci) {
        const S* plane = x.plane_ptr(ni, ci);
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox, ++oi) {
            S best = plane[Eigen::Index(oy * stride_) * x.w + ox * stride_];
            Eigen::Index best_idx = Eigen::Index(oy * stride_) * x.w + ox * stride_;
            for (int ky = 0; ky < k_; ++ky)
              for (int kx = 0; kx < k_; ++kx) {
                Eigen::Index idx = Eigen::Index(oy * stride_ + ky) * x.w + ox * stride_ + kx;
                if (plane[idx] > best) {
                  best = plane[idx];
                  best_idx = idx;
                }
              }
            y.data[oi] = best;
            if (train) argmax_[oi] = (Eigen::Index(ni) * x.c + ci) * x.plane_size() + best_idx;
          }
      }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> gx(in_n_, in_c_, in_h_, in_w_);
    for (Eigen::Index i = 0; i < gy.size(); ++i) gx.data[argmax_[i]] += gy.data[i];
    return gx;
  }

private:
  int k_, stride_;
  int in_n_ = 0, in_c_ = 0, in_h_ = 0, in_w_ = 0;
  std::vector<Eigen::Index> argmax_;
};

template <typename S>
class AvgPool2d : public Layer<S> {
public:
  explicit AvgPool2d(int k = 2, int stride = 2) : k_(k), stride_(stride) {}

  Tensor<S> forward(const Tensor<S>& x, bool) override {
    int oh = (x.h - k_) / stride_ + 1, ow = (x.w - k_) / stride_ + 1;
    in_h_ = x.h;
    in_w_ = x.w;
    Tensor<S> y(x.n, x.c, oh, ow);
    const S inv = S(1) / S(k_ * k_);
    for (int ni = 0; ni < x.n; ++ni)
      for (int ci = 0; ci < x.c; ++ci) {
        const S* plane = x.plane_ptr(ni, ci);
        S* out = y.plane_ptr(ni, ci);
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            S acc = 0;
            for (int ky = 0; ky < k_; ++ky)
              for (int kx = 0; kx < k_; ++kx) acc += plane[Eigen::Index(oy * stride_ + ky) * x.w + ox * stride_ + kx];
            out[Eigen::Index(oy) * ow + ox] = acc * inv;
          }
      }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> gx(gy.n, gy.c, in_h_, in_w_);
    const S inv = S(1) / S(k_ * k_);
    for (int ni = 0; ni < gy.n; ++ni)
      for (int ci = 0; ci < gy.c; ++ci) {
        const S* g = gy.plane_ptr(ni, ci);
        S* out = gx.plane_ptr(ni, ci);
        for (int oy = 0; oy < gy.h; ++oy)
          for (int ox = 0; ox < gy.w; ++ox) {
            S v = g[Eigen::Index(oy) * gy.w + ox] * inv;
            for (int ky = 0; ky < k_; ++ky)
              for (int kx = 0; kx < k_; ++kx) out[Eigen::Index(oy * stride_ + ky) * in_w_ + ox * stride_ + kx] += v;
          }
      }
    return gx;
  }

private:
  int k_, stride_;
  int in_h_ = 0, in_w_ = 0;
};

// ---------------------------------------------------------------------------
// Sequential with optional feature taps (for perceptual extractors).
// ---------------------------------------------------------------------------
template <typename S>
class Sequential : public Layer<S> {
public:
  template <typename L, typename... Args>
  L* add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = layer.get();
    layers_.push_back(std::move(layer));
    return raw;
  }

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    Tensor<S> cur = x;
    for (auto& l : layers_) cur = l->forward(cur, train);
    return cur;
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> cur = gy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
    return cur;
  }

  // Runs all layers, copying the output of each layer index in `taps`.
  // A tap of -1 refers to the raw input.
  void forward_taps(const Tensor<S>& x, bool train, const std::vector<int>& taps, std::vector<Tensor<S>>& out) {
    out.assign(taps.size(), {});
    Tensor<S> cur = x;
    for (std::size_t t = 0; t < taps.size(); ++t)
      if (taps[t] == -1) out[t] = cur;
    for (int i = 0; i < int(layers_.size()); ++i) {
      cur = layers_[i]->forward(cur, train);
      for (std::size_t t = 0; t < taps.size(); ++t)
        if (taps[t] == i) out[t] = cur;
    }
  }

  // Backward pass fed by gradients at tap outputs; layers above the deepest
  // tap are skipped. Returns the gradient at the input.
  Tensor<S> backward_taps(const std::vector<int>& taps, const std::vector<Tensor<S>>& tap_grads) {
    Tensor<S> g;
    bool live = false;
    for (int i = int(layers_.size()) - 1; i >= 0; --i) {
      for (std::size_t t = 0; t < taps.size(); ++t)
        if (taps[t] == i) {
          if (live)
            g.data += tap_grads[t].data;
          else {
            g = tap_grads[t];
            live = true;
          }
        }
      if (live) g = layers_[i]->backward(g);
    }
    if (!live) throw std::logic_error("backward_taps: no tap gradients supplied");
    return g;
  }

  void collect(std::vector<ParamSlot<S>>& out, const std::string& prefix) override {
    for (int i = 0; i < int(layers_.size()); ++i) layers_[i]->collect(out, prefix + "." + std::to_string(i));
  }

  void freeze() override {
    for (auto& l : layers_) l->freeze();
  }

  int layer_count() const { return int(layers_.size()); }

private:
  std::vector<std::unique_ptr<Layer<S>>> layers_;
};

// ---------------------------------------------------------------------------
// Basic residual block: conv3x3-norm-relu-conv3x3-norm plus identity skip.
// `relu_after_add` selects the classic form (renderer) vs. the translation
// network form that ends on the addition.
// ---------------------------------------------------------------------------
template <typename S>
class ResidualBlock : public Layer<S> {
public:
  enum class Norm { Batch, Instance };

  ResidualBlock(int c, Norm norm = Norm::Batch, bool relu_after_add = true) : relu_after_add_(relu_after_add) {
    branch_.template add<Conv2d<S>>(c, c, 3, 1, 1, false);
    add_norm(c, norm);
    branch_.template add<ReLU<S>>();
    branch_.template add<Conv2d<S>>(c, c, 3, 1, 1, false);
    add_norm(c, norm);
  }

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    Tensor<S> y = branch_.forward(x, train);
    y.data += x.data;
    if (relu_after_add_) {
      mask_pos_ = (y.data > S(0));
      y.data = y.data.max(S(0));
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& gy) override {
    Tensor<S> g = gy;
    if (relu_after_add_) g.data *= mask_pos_.template cast<S>();
    Tensor<S> gx = branch_.backward(g);
    gx.data += g.data;
    return gx;
  }

  void collect(std::vector<ParamSlot<S>>& out, const std::string& prefix) override {
    branch_.collect(out, prefix + ".branch");
  }

  void freeze() override { branch_.freeze(); }

private:
  void add_norm(int c, Norm norm) {
    if (norm == Norm::Batch)
      branch_.template add<BatchNorm2d<S>>(c);
    else
      branch_.template add<InstanceNorm2d<S>>(c);
  }

  Sequential<S> branch_;
  bool relu_after_add_;
  Eigen::Array<bool, Eigen::Dynamic, 1> mask_pos_;
};

// ---------------------------------------------------------------------------
// Parameter init and optimizer.
// ---------------------------------------------------------------------------

// Samples every trainable weight from N(0, stddev); norm gains from
// N(1, stddev); biases and shift terms zero.
template <typename S>
void init_normal(std::vector<ParamSlot<S>>& slots, Rng& rng, double stddev = 0.02) {
  for (auto& s : slots) {
    switch (s.kind) {
      case ParamKind::ConvWeight:
        for (Eigen::Index i = 0; i < s.value->size(); ++i) (*s.value)[i] = S(rng.normal(0.0, stddev));
        break;
      case ParamKind::NormGamma:
        for (Eigen::Index i = 0; i < s.value->size(); ++i) (*s.value)[i] = S(rng.normal(1.0, stddev));
        break;
      case ParamKind::Bias:
      case ParamKind::NormBeta:
        s.value->setZero();
        break;
      case ParamKind::Buffer:
        break;
    }
  }
}

// He-style init used for the fixed seeded backbones.
template <typename S>
void init_he(std::vector<ParamSlot<S>>& slots, Rng& rng, const std::vector<int>& fan_ins) {
  std::size_t conv_idx = 0;
  for (auto& s : slots) {
    if (s.kind == ParamKind::ConvWeight) {
      double std = std::sqrt(2.0 / double(fan_ins.at(conv_idx++)));
      for (Eigen::Index i = 0; i < s.value->size(); ++i) (*s.value)[i] = S(rng.normal(0.0, std));
    } else if (s.kind == ParamKind::Bias) {
      s.value->setZero();
    }
  }
}

template <typename S>
void zero_grads(std::vector<ParamSlot<S>>& slots) {
  for (auto& s : slots)
    if (s.grad) s.grad->setZero();
}

template <typename S>
Eigen::Index param_count(const std::vector<ParamSlot<S>>& slots) {
  Eigen::Index total = 0;
  for (const auto& s : slots)
    if (s.grad) total += s.value->size();
  return total;
}

}  // namespace pgen::nn
