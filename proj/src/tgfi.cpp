#include "lwga/tgfi.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "lwga/errors.hpp"

namespace lwga {

RegionGrid::RegionGrid(int region_h, int region_w, int src_h, int src_w)
    : rh(region_h), rw(region_w), h(src_h), w(src_w) {
    if (rh <= 0 || rw <= 0)
        throw ShapeError("region size must be positive, got " + std::to_string(rh) + "x" +
                         std::to_string(rw));
    if (h <= 0 || w <= 0)
        throw ShapeError("grid source dims must be positive, got " + std::to_string(h) + "x" +
                         std::to_string(w));
    gh = (h + rh - 1) / rh;
    gw = (w + rw - 1) / rw;
}

Tensor saliency(const Tensor& x) {
    Tensor out(x.n(), 1, x.h(), x.w());
    const int plane = x.h() * x.w();
    for (int in = 0; in < x.n(); ++in) {
        float* dst = out.data() + static_cast<std::size_t>(in) * plane;
        for (int c = 0; c < x.c(); ++c) {
            const float* src = x.data() + (static_cast<std::size_t>(in) * x.c() + c) * plane;
            for (int i = 0; i < plane; ++i) dst[i] += std::fabs(src[i]);
        }
    }
    return out;
}

SampledSet sample(const Tensor& x, const RegionGrid& grid) {
    if (grid.h != x.h() || grid.w != x.w())
        throw ShapeError("region grid built for " + std::to_string(grid.h) + "x" +
                         std::to_string(grid.w) + " but input is " + std::to_string(x.h()) + "x" +
                         std::to_string(x.w()));
    Tensor sal = saliency(x);

    SampledSet s;
    s.values = Tensor(x.n(), x.c(), grid.gh, grid.gw);
    s.p_loc.resize(static_cast<std::size_t>(x.n()) * grid.gh * grid.gw);
    s.src_h = x.h();
    s.src_w = x.w();

    const int plane = x.h() * x.w();
    for (int in = 0; in < x.n(); ++in) {
        const float* sp = sal.data() + static_cast<std::size_t>(in) * plane;
        for (int gy = 0; gy < grid.gh; ++gy) {
            const int y0 = gy * grid.rh;
            const int y1 = std::min(y0 + grid.rh, x.h());
            for (int gx = 0; gx < grid.gw; ++gx) {
                const int x0 = gx * grid.rw;
                const int x1 = std::min(x0 + grid.rw, x.w());
                int best_y = y0, best_x = x0;
                float best = sp[y0 * x.w() + x0];
                for (int y = y0; y < y1; ++y)
                    for (int xx = x0; xx < x1; ++xx) {
                        const float v = sp[y * x.w() + xx];
                        // strict > keeps the smallest row-major index on ties
                        if (v > best) {
                            best = v;
                            best_y = y;
                            best_x = xx;
                        }
                    }
                s.p_loc[(static_cast<std::size_t>(in) * grid.gh + gy) * grid.gw + gx] = {best_y,
                                                                                         best_x};
                for (int c = 0; c < x.c(); ++c)
                    s.values.at(in, c, gy, gx) = x.at(in, c, best_y, best_x);
            }
        }
    }
    return s;
}

Tensor restore(const SampledSet& s, const Tensor& interacted) {
    if (interacted.n() != s.values.n() || interacted.c() != s.values.c() ||
        interacted.h() != s.values.h() || interacted.w() != s.values.w())
        throw ShapeError("restore expects interacted values shaped like the sampled grid " +
                         s.values.shape_str() + ", got " + interacted.shape_str());
    Tensor out = bilinear_resize(interacted, s.src_h, s.src_w);
    for (int in = 0; in < interacted.n(); ++in)
        for (int gy = 0; gy < interacted.h(); ++gy)
            for (int gx = 0; gx < interacted.w(); ++gx) {
                const Coord& p = s.loc(in, gy, gx);
                for (int c = 0; c < interacted.c(); ++c)
                    out.at(in, c, p.y, p.x) = interacted.at(in, c, gy, gx);
            }
    return out;
}

} // namespace lwga
