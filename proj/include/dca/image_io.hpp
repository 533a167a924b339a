#pragma once

#include <cstdint>
#include <string>

#include "dca/tensor.hpp"

namespace dca {

// 8-bit PNG helpers. Gray images are rank-2 [h, w]; RGB images are rank-3
// [3, h, w].

void write_gray_png(const std::string& path, const Tensor<std::uint8_t>& img);
void write_rgb_png(const std::string& path, const Tensor<std::uint8_t>& img);

Tensor<std::uint8_t> read_gray_png(const std::string& path);
Tensor<std::uint8_t> read_rgb_png(const std::string& path);

// Linear scaling of a [0,1] mask plane to 8-bit gray.
Tensor<std::uint8_t> mask_to_gray(const Tensor<float>& plane);

}  // namespace dca
