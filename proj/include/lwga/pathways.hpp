#pragma once

#include <vector>

#include "lwga/tensor.hpp"
#include "lwga/tgfi.hpp"

namespace lwga {

// Point pathway: 1x1 bottleneck producing a sigmoid gate.
// r1 = x1 + sigmoid(conv2(act(bn(conv1(x1))))) * x1
struct GPAWeights {
    ConvLayer conv1; // C/4 -> C, 1x1, no bias
    BNParams bn;     // over C
    Act act = Act::gelu;
    ConvLayer conv2; // C -> C/4, 1x1, bias
};

Tensor gpa_forward(const Tensor& x1, const GPAWeights& w);

// Local pathway: plain 3x3 conv + BN + activation.
struct RLAWeights {
    ConvLayer conv; // C/4 -> C/4, 3x3, stride 1, pad 1, no bias
    BNParams bn;
    Act act = Act::gelu;
};

Tensor rla_forward(const Tensor& x2, const RLAWeights& w);

// Medium-range pathway: directional line attention over a window of 11
// offsets along four directions (vertical, main diagonal, horizontal,
// anti-diagonal), coefficients shared across positions and indexed by
// (direction, offset, channel).
struct SMAWeights {
    static constexpr int window = 11; // odd; offsets -5..+5
    static constexpr int directions = 4;
    int channels = 0;         // C/4
    std::vector<float> alpha; // [direction][tap][channel], flat

    explicit SMAWeights(int ch = 0)
        : channels(ch),
          alpha(static_cast<std::size_t>(directions) * window * (ch > 0 ? ch : 0), 0.0f) {}

    std::size_t coeff_index(int dir, int tap, int ch) const {
        return (static_cast<std::size_t>(dir) * window + tap) * channels + ch;
    }
    float& coeff(int dir, int tap, int ch) { return alpha[coeff_index(dir, tap, ch)]; }
    float coeff(int dir, int tap, int ch) const { return alpha[coeff_index(dir, tap, ch)]; }
};

// Raw directional-sum map on whatever grid it is given (no activation):
// a[ch, pos] = sum_dir sum_{n=-5..5} alpha[dir][n+5][ch] * x[ch, pos + n*dir]
// with out-of-bounds taps contributing zero. The center tap is summed once
// per direction (four independent coefficients).
Tensor sma_attention(const Tensor& xr, const SMAWeights& w);

// sample(region 3x3) -> sma_attention on the reduced grid -> restore ->
// gate: returns a3 * x3. With use_tgfi=false the attention runs on the full
// map directly (dense ablation variant).
Tensor sma_forward(const Tensor& x3, const SMAWeights& w, bool use_tgfi = true);

// Global pathway; the interaction regime is fixed by the stage index.
//   stages 1-2: 5x5 grouped conv then 7x7 depthwise conv (dilation 3) as a
//               multiplicative proxy map over the sampled grid;
//   stage 3:    4-head attention over the sampled tokens;
//   stage 4:    dense attention over every position.
struct SGAWeights {
    // stages 1-2
    ConvLayer conv5; // C/4 -> C/4, 5x5, groups 4, pad 2, bias
    ConvLayer conv7; // C/4 -> C/4, 7x7, depthwise, dilation 3, pad 9, bias
    // stages 3-4
    Tensor wq, wk, wv, wo; // 1 x 1 x C/4 x C/4
    int heads = 4;
    BNParams bn; // over C/4
};

Tensor sga_forward(const Tensor& x4, const SGAWeights& w, int stage, bool use_tgfi = true);

// One grouped-attention module: split the channel axis into four equal
// pathways, run them, concat back. Output dims equal input dims.
struct LwgaWeights {
    GPAWeights gpa;
    RLAWeights rla;
    SMAWeights sma;
    SGAWeights sga;
};

Tensor lwga_forward(const Tensor& x, const LwgaWeights& w, int stage, bool use_tgfi = true);

} // namespace lwga
