#pragma once

#include <Eigen/Core>
#include <cstring>

#include "pgen/nn/tensor.hpp"

namespace pgen::nn {

struct ConvGeom {
  int in_c, in_h, in_w;
  int k, stride, pad;
  int out_h, out_w;

  ConvGeom(int c, int h, int w, int k_, int s_, int p_)
      : in_c(c), in_h(h), in_w(w), k(k_), stride(s_), pad(p_) {
    out_h = (h + 2 * p_ - k_) / s_ + 1;
    out_w = (w + 2 * p_ - k_) / s_ + 1;
  }
  int patch_len() const { return in_c * k * k; }
  int positions() const { return out_h * out_w; }
};

// Patch matrix P is (positions x patch_len) column-major: column j holds one
// kernel tap (ci, ky, kx) gathered across all output positions, which keeps
// the GEMM output in channel-plane layout.
template <typename S>
void im2col(const S* src, const ConvGeom& g, Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& p) {
  p.setZero(g.positions(), g.patch_len());
  for (int ci = 0; ci < g.in_c; ++ci) {
    const S* plane = src + Eigen::Index(ci) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        S* col = p.col((ci * g.k + ky) * g.k + kx).data();
        for (int oy = 0; oy < g.out_h; ++oy) {
          int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          // valid output x range: 0 <= ox*stride - pad + kx < in_w
          int ox0 = std::max(0, (g.pad - kx + g.stride - 1) / g.stride);
          int ox1 = std::min(g.out_w - 1, (g.in_w - 1 + g.pad - kx) / g.stride);
          if (ox1 < ox0) continue;
          const S* in_row = plane + Eigen::Index(iy) * g.in_w - g.pad + kx;
          S* out_row = col + Eigen::Index(oy) * g.out_w;
          if (g.stride == 1) {
            std::memcpy(out_row + ox0, in_row + ox0, std::size_t(ox1 - ox0 + 1) * sizeof(S));
          } else {
            for (int ox = ox0; ox <= ox1; ++ox) out_row[ox] = in_row[Eigen::Index(ox) * g.stride];
          }
        }
      }
    }
  }
}

// Scatter-add transpose of im2col.
template <typename S>
void col2im(const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& p, const ConvGeom& g, S* dst) {
  for (int ci = 0; ci < g.in_c; ++ci) {
    S* plane = dst + Eigen::Index(ci) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const S* col = p.col((ci * g.k + ky) * g.k + kx).data();
        for (int oy = 0; oy < g.out_h; ++oy) {
          int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          int ox0 = std::max(0, (g.pad - kx + g.stride - 1) / g.stride);
          int ox1 = std::min(g.out_w - 1, (g.in_w - 1 + g.pad - kx) / g.stride);
          S* in_row = plane + Eigen::Index(iy) * g.in_w - g.pad + kx;
          const S* out_row = col + Eigen::Index(oy) * g.out_w;
          for (int ox = ox0; ox <= ox1; ++ox) in_row[Eigen::Index(ox) * g.stride] += out_row[ox];
        }
      }
    }
  }
}

}  // namespace pgen::nn
