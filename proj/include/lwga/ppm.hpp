#pragma once

#include <string>

#include "lwga/tensor.hpp"

namespace lwga {

// Binary P6 image -> 1 x 3 x H x W floats in [0, 1] (value / maxval).
Tensor read_ppm(const std::string& path);

// Writes a 1 x 3 x H x W map as 8-bit P6, clamping values to [0, 1].
void write_ppm(const std::string& path, const Tensor& img);

} // namespace lwga
