#pragma once

#include <algorithm>
#include <cmath>

#include "pgen/nn/tensor.hpp"
#include "pgen/raster.hpp"
#include "pgen/semantic_map.hpp"

namespace pgen {

// 8-bit RGB raster to a 1x3xHxW tensor in [-1, 1].
template <typename S = float>
nn::Tensor<S> image_to_tensor(const Rgb8Image& img) {
  nn::Tensor<S> t(1, 3, img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) t.at(0, c, y, x) = S(img.at(y, x, c)) / S(127.5) - S(1);
  return t;
}

// Clamp to [-1, 1] and quantize back to 8-bit RGB.
template <typename S>
Rgb8Image tensor_to_image(const nn::Tensor<S>& t, int sample = 0) {
  Rgb8Image img;
  img.height = t.h;
  img.width = t.w;
  img.data.resize(std::size_t(3) * t.h * t.w);
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = std::clamp(double(t.at(sample, c, y, x)), -1.0, 1.0);
        img.at(y, x, c) = std::uint8_t(std::lround((v + 1.0) * 127.5));
      }
  return img;
}

// Binary heatmap stack to a 1xCxHxW tensor of {0,1}.
template <typename S = float>
nn::Tensor<S> heatmap_to_tensor(const BodyHeatmap& hm) {
  nn::Tensor<S> t(1, hm.channel_count(), int(hm.channels[0].rows()), int(hm.channels[0].cols()));
  for (int c = 0; c < t.c; ++c)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x) t.at(0, c, y, x) = S(hm.channels[c](y, x));
  return t;
}

// Stacks per-sample tensors (n=1 each) into one batch tensor.
template <typename S>
nn::Tensor<S> stack_batch(const std::vector<const nn::Tensor<S>*>& items) {
  if (items.empty()) throw std::invalid_argument("stack_batch: empty batch");
  const nn::Tensor<S>& first = *items[0];
  nn::Tensor<S> out(int(items.size()), first.c, first.h, first.w);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i]->n != 1 || items[i]->c != first.c || items[i]->h != first.h || items[i]->w != first.w)
      throw std::invalid_argument("stack_batch: item shape mismatch");
    std::copy_n(items[i]->data.data(), first.sample_size(), out.data.data() + Eigen::Index(i) * first.sample_size());
  }
  return out;
}

}  // namespace pgen
