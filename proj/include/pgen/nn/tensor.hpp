#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pgen::nn {

template <typename S>
using Vec = Eigen::Array<S, Eigen::Dynamic, 1>;

template <typename S>
using MatMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>>;  // column-major

template <typename S>
using ConstMatMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>>;

// Dense NCHW tensor. Channel planes are contiguous, so for one sample the
// memory doubles as a (H*W) x C column-major matrix whose column c is the
// plane of channel c.
template <typename S>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  Vec<S> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_) { resize(n_, c_, h_, w_); }

  void resize(int n_, int c_, int h_, int w_) {
    n = n_;
    c = c_;
    h = h_;
    w = w_;
    data.setZero(Eigen::Index(n) * c * h * w);
  }

  Eigen::Index size() const { return data.size(); }
  int plane_size() const { return h * w; }
  int sample_size() const { return c * h * w; }
  bool empty() const { return data.size() == 0; }

  S* sample_ptr(int ni) { return data.data() + Eigen::Index(ni) * sample_size(); }
  const S* sample_ptr(int ni) const { return data.data() + Eigen::Index(ni) * sample_size(); }
  S* plane_ptr(int ni, int ci) { return sample_ptr(ni) + Eigen::Index(ci) * plane_size(); }
  const S* plane_ptr(int ni, int ci) const { return sample_ptr(ni) + Eigen::Index(ci) * plane_size(); }

  S& at(int ni, int ci, int y, int x) { return data[((Eigen::Index(ni) * c + ci) * h + y) * w + x]; }
  S at(int ni, int ci, int y, int x) const { return data[((Eigen::Index(ni) * c + ci) * h + y) * w + x]; }

  // (H*W) x C view of one sample.
  MatMap<S> sample_mat(int ni) { return MatMap<S>(sample_ptr(ni), plane_size(), c); }
  ConstMatMap<S> sample_mat(int ni) const { return ConstMatMap<S>(sample_ptr(ni), plane_size(), c); }

  Tensor clone() const { return *this; }

  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

  void require_shape(int n_, int c_, int h_, int w_, const char* who) const {
    if (n != n_ || c != c_ || h != h_ || w != w_)
      throw std::invalid_argument(std::string(who) + ": expected tensor " + shape_str(n_, c_, h_, w_) + ", got " +
                                  shape_str(n, c, h, w));
  }

  static std::string shape_str(int n, int c, int h, int w) {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
  }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out(n, c, h, w);
    out.data = data.template cast<T>();
    return out;
  }
};

template <typename S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) throw std::invalid_argument("concat_channels: shape mismatch");
  Tensor<S> out(a.n, a.c + b.c, a.h, a.w);
  for (int ni = 0; ni < a.n; ++ni) {
    out.sample_mat(ni).leftCols(a.c) = a.sample_mat(ni);
    out.sample_mat(ni).rightCols(b.c) = b.sample_mat(ni);
  }
  return out;
}

template <typename S>
void split_channels(const Tensor<S>& joint, Tensor<S>& a, Tensor<S>& b, int c_a) {
  a.resize(joint.n, c_a, joint.h, joint.w);
  b.resize(joint.n, joint.c - c_a, joint.h, joint.w);
  for (int ni = 0; ni < joint.n; ++ni) {
    a.sample_mat(ni) = joint.sample_mat(ni).leftCols(c_a);
    b.sample_mat(ni) = joint.sample_mat(ni).rightCols(joint.c - c_a);
  }
}

}  // namespace pgen::nn
