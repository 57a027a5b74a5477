#pragma once

#include <vector>

#include "lwga/pathways.hpp"
#include "lwga/tensor.hpp"
#include "lwga/tgfi.hpp"

namespace lwga::ref {

// Deliberately naive re-implementations used as oracles by the test
// suites. They share no code with the production kernels: different loop
// orders, double-precision accumulation, no parallelism, no shortcuts.

Tensor conv2d(const Tensor& x, const Tensor& weight, const std::vector<float>& bias,
              const ConvSpec& spec);

Tensor attention(const Tensor& tokens, int heads, const Tensor& wq, const Tensor& wk,
                 const Tensor& wv, const Tensor& wo);

Tensor bilinear(const Tensor& x, int out_h, int out_w);

// Literal transcription of the four directional sums: for each direction,
// center coefficient times center pixel plus both signed offsets 1..5.
Tensor sma_attention(const Tensor& xr, const SMAWeights& w);

// Exhaustive per-region scan for the max-saliency position (ties: smallest
// row-major linear index). Returns n*gh*gw coordinates in region order.
std::vector<Coord> region_argmax(const Tensor& x, int rh, int rw);

} // namespace lwga::ref
