#pragma once

#include <array>
#include <optional>
#include <vector>

#include "lwga/config.hpp"
#include "lwga/pathways.hpp"
#include "lwga/weights_io.hpp"

namespace lwga {

// Per-block channel MLP: conv 1x1 up to hidden, BN + activation, conv 1x1
// back down. The block residual is x + bn_out(cmlp(y)); dropout between
// them is identity at inference and carries no state here.
struct CMLPWeights {
    ConvLayer up;    // C -> hidden
    BNParams bn_mid; // hidden
    Act act = Act::gelu;
    ConvLayer down;  // hidden -> C
    BNParams bn_out; // C, block-level
};

struct BlockWeights {
    LwgaWeights lwga;
    CMLPWeights cmlp;
};

struct StemWeights {
    ConvLayer conv; // 3 -> C, 4x4, stride 4, pad 0
    BNParams bn;
    Act act = Act::gelu;
};

// Detail-preserving downsampler: sum of a strided 3x3 conv branch and a
// max-pool + 1x1 conv branch, then BN + activation. Halves H and W,
// doubles channels.
struct DrfdWeights {
    ConvLayer conv3; // C -> 2C, 3x3, stride 2, pad 1
    ConvLayer conv1; // C -> 2C, 1x1, after 2x2/2 max-pool
    BNParams bn;     // 2C
    Act act = Act::gelu;
};

struct HeadWeights {
    Tensor weight; // 1 x 1 x num_classes x in_features, logits = W*pooled + b
    std::vector<float> bias;
};

struct LwgaNet {
    ModelConfig config;
    StemWeights stem;
    std::array<std::optional<DrfdWeights>, 4> drfd; // [0] unused (stage 1 follows the stem)
    std::array<std::vector<BlockWeights>, 4> stages;
    HeadWeights head;
};

// One residual block: y = grouped-attention(x); out = x + bn(cmlp(y)).
Tensor cmlp_block_forward(const Tensor& x, const LwgaWeights& lwga, const CMLPWeights& cmlp,
                          int stage, bool use_tgfi = true);

// Stride-4 patchify + BN + activation. Inputs with H or W not divisible by
// 4 are zero-padded on the bottom/right; H or W < 4 is an error.
Tensor stem_forward(const Tensor& img, const StemWeights& w);

Tensor drfd_forward(const Tensor& x, const DrfdWeights& w);

// Four feature maps at strides 4/8/16/32 with channels C, 2C, 4C, 8C.
// Inputs must be at least 32x32 and are zero-padded on the bottom/right to
// the next multiple of 32.
std::array<Tensor, 4> backbone_forward(const Tensor& img, const LwgaNet& model);

// Global average pool over the last feature map, then one linear layer.
std::vector<float> classify(const Tensor& img, const LwgaNet& model);

// Every tensor the model expects, in a fixed order: names, dims.
std::vector<TensorShape> weight_manifest(const ModelConfig& config);

// Assembles a model from a store, validating the store against the
// manifest (names, dims, nothing missing, nothing extra).
LwgaNet build_model(const ModelConfig& config, const WeightStore& store);

} // namespace lwga
