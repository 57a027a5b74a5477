#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lwga/config.hpp"

namespace lwga {

struct CountRow {
    std::string name;
    std::string kind; // conv | bn | mul | saliency | resize | mhsa | dirattn | linear
    std::int64_t params = 0;
    std::int64_t macs = 0;
};

// Per-layer cost table. Conventions (fixed, printed with the report):
//   - macs are multiply-accumulate counts; the FLOP line is 2x macs;
//   - conv macs = out_elems * (kh*kw*in_ch/groups);
//   - attention macs = 4*T*D^2 projections + 2*T^2*D score/context;
//   - normalization counts gamma and beta only (no running stats), 1 mac
//     per element at apply time;
//   - elementwise gates and saliency scoring cost 1 mac per element;
//   - bilinear resize costs 4 macs per output element;
//   - additions, activations, pooling, gather/scatter cost 0.
struct CountReport {
    std::string variant;
    int input_h = 0; // 0 when the report is resolution-independent
    int input_w = 0;
    bool tgfi = true;
    std::vector<CountRow> rows;

    std::int64_t params_total() const;
    std::int64_t macs_total() const;

    std::string to_text() const;
    std::string to_kv() const; // totals + conventions, one name=value per line
};

// Parameter count; independent of input resolution (macs column zeroed).
CountReport count_params(const ModelConfig& config);

// MAC count for one forward pass at the given input resolution. Dims are
// padded up to a multiple of 32 exactly as the forward pass pads; dims
// below 32 are an error.
CountReport count_macs(const ModelConfig& config, int input_h, int input_w);

} // namespace lwga
