#pragma once

#include <array>
#include <string>

#include "lwga/tensor.hpp"

namespace lwga {

enum class Variant { L0, L1, L2 };

const char* variant_name(Variant v);
// Accepts "L0"/"l0" etc.; returns false on anything else.
bool parse_variant(const std::string& s, Variant& out);

struct StageConfig {
    int index = 1;    // 1..4
    int channels = 0; // C * 2^(index-1)
    int blocks = 0;
    static constexpr int sma_window = 11;
};

struct ModelConfig {
    Variant variant = Variant::L0;
    int stem_channels = 32;
    std::array<StageConfig, 4> stages{};
    int num_classes = 1000;
    Act act = Act::gelu;
    float dropout = 0.0f; // identity at inference either way
    // Expansion ratio of the per-block channel MLP. Calibrated per variant
    // so the totals land on the published cost figures: 1.75 / 1.5 / 1.5.
    float cmlp_ratio = 1.75f;
    // Sparse sampling in the medium/global pathways. false selects the
    // dense interaction variants (ablation mode).
    bool use_tgfi = true;

    int cmlp_hidden(int channels) const;

    static ModelConfig make(Variant v, int num_classes = 1000);
};

} // namespace lwga
