#pragma once

#include <cstddef>

#include "dlmut/model.hpp"

// Raw-pointer layer kernels shared by inference and training. Callers
// guarantee buffer sizes.
namespace dlmut::detail {

void dense(const float* w, const float* b, const float* x, float* y, std::size_t in, std::size_t out) noexcept;
void conv2d(const float* k, const float* b, const float* x, float* y, std::size_t in_ch, std::size_t h,
            std::size_t w, std::size_t out_ch, std::size_t kh, std::size_t kw) noexcept;
void maxpool(const float* x, float* y, std::size_t ch, std::size_t h, std::size_t w) noexcept;
void activate(Activation fn, float* v, std::size_t n) noexcept;
void run_layer(const LayerSpec& layer, const LayerParams& p, const Shape& in_shape, const float* x, float* y) noexcept;

}  // namespace dlmut::detail
