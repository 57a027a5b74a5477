#include "lwga/config.hpp"

#include <cmath>

namespace lwga {

const char* variant_name(Variant v) {
    switch (v) {
    case Variant::L0: return "L0";
    case Variant::L1: return "L1";
    case Variant::L2: return "L2";
    }
    return "?";
}

bool parse_variant(const std::string& s, Variant& out) {
    if (s.size() != 2 || (s[0] != 'L' && s[0] != 'l')) return false;
    switch (s[1]) {
    case '0': out = Variant::L0; return true;
    case '1': out = Variant::L1; return true;
    case '2': out = Variant::L2; return true;
    default: return false;
    }
}

int ModelConfig::cmlp_hidden(int channels) const {
    return static_cast<int>(std::lround(static_cast<double>(channels) * cmlp_ratio));
}

ModelConfig ModelConfig::make(Variant v, int num_classes) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.num_classes = num_classes;
    int blocks3 = 4;
    switch (v) {
    case Variant::L0:
        cfg.stem_channels = 32;
        cfg.act = Act::gelu;
        cfg.dropout = 0.0f;
        cfg.cmlp_ratio = 1.75f;
        cfg.stages[1].blocks = 2;
        break;
    case Variant::L1:
        cfg.stem_channels = 64;
        cfg.act = Act::gelu;
        cfg.dropout = 0.1f;
        cfg.cmlp_ratio = 1.5f;
        cfg.stages[1].blocks = 2;
        break;
    case Variant::L2:
        cfg.stem_channels = 96;
        cfg.act = Act::relu;
        cfg.dropout = 0.1f;
        cfg.cmlp_ratio = 1.5f;
        cfg.stages[1].blocks = 4;
        break;
    }
    cfg.stages[0].blocks = 1;
    cfg.stages[2].blocks = blocks3;
    cfg.stages[3].blocks = 2;
    for (int k = 0; k < 4; ++k) {
        cfg.stages[k].index = k + 1;
        cfg.stages[k].channels = cfg.stem_channels << k;
    }
    return cfg;
}

} // namespace lwga
