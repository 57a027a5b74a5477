#pragma once

#include <vector>

#include "lwga/tensor.hpp"

namespace lwga {

// Non-overlapping region partition of an H x W grid. Edge regions may be
// smaller (ceiling division), never empty.
struct RegionGrid {
    int rh = 1, rw = 1; // region size
    int h = 0, w = 0;   // source dims
    int gh = 0, gw = 0; // grid dims = ceil(h/rh), ceil(w/rw)

    RegionGrid(int region_h, int region_w, int src_h, int src_w);
};

struct Coord {
    int y = 0;
    int x = 0;
    bool operator==(const Coord&) const = default;
};

// One sampled token per region: reduced-grid values plus the preserved
// source coordinates of every sample.
struct SampledSet {
    Tensor values;            // n x c x gh x gw
    std::vector<Coord> p_loc; // [n][gy][gx] row-major, n*gh*gw entries
    int src_h = 0, src_w = 0;

    const Coord& loc(int in, int gy, int gx) const {
        return p_loc[(static_cast<std::size_t>(in) * (values.h()) + gy) * values.w() + gx];
    }
};

// Per-position score: sum over channels of |value| (channel-wise L1 norm).
Tensor saliency(const Tensor& x);

// Selects the position with maximum saliency in each region; ties break to
// the smallest row-major linear index. All channels of the winning position
// travel together into values.
SampledSet sample(const Tensor& x, const RegionGrid& grid);

// Bilinear-upsamples interacted to the source dims, then overwrites each
// sampled coordinate with its exact interacted value (scatter wins over
// interpolation).
Tensor restore(const SampledSet& s, const Tensor& interacted);

} // namespace lwga
