#include "lwga/pathways.hpp"

#include <string>

#include "lwga/errors.hpp"

namespace lwga {

namespace {

Tensor hadamard(const Tensor& a, const Tensor& b) {
    if (!a.same_dims(b))
        throw ShapeError("elementwise product dims " + a.shape_str() + " vs " + b.shape_str());
    Tensor out(a.n(), a.c(), a.h(), a.w());
    const float* pa = a.data();
    const float* pb = b.data();
    float* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] * pb[i];
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_dims(b))
        throw ShapeError("elementwise sum dims " + a.shape_str() + " vs " + b.shape_str());
    Tensor out(a.n(), a.c(), a.h(), a.w());
    const float* pa = a.data();
    const float* pb = b.data();
    float* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] + pb[i];
    return out;
}

Tensor attention_over_map(const Tensor& map, const SGAWeights& w) {
    Tensor tokens = tokens_from_map(map);
    Tensor att = mhsa(tokens, w.heads, w.wq, w.wk, w.wv, w.wo);
    return map_from_tokens(att, map.c(), map.h(), map.w());
}

} // namespace

Tensor gpa_forward(const Tensor& x1, const GPAWeights& w) {
    Tensor y = apply(w.conv1, x1);
    y = activation(batchnorm_infer(y, w.bn), w.act);
    y = apply(w.conv2, y);
    Tensor gate = activation(y, Act::sigmoid);
    return add(x1, hadamard(gate, x1));
}

Tensor rla_forward(const Tensor& x2, const RLAWeights& w) {
    return activation(batchnorm_infer(apply(w.conv, x2), w.bn), w.act);
}

Tensor sma_attention(const Tensor& xr, const SMAWeights& w) {
    if (xr.c() != w.channels)
        throw ShapeError("directional attention built for " + std::to_string(w.channels) +
                         " channels, input has " + std::to_string(xr.c()));
    // direction unit vectors (dy, dx)
    static constexpr int dy[SMAWeights::directions] = {1, 1, 0, -1};
    static constexpr int dx[SMAWeights::directions] = {0, 1, 1, 1};
    const int half = (SMAWeights::window - 1) / 2;

    Tensor out(xr.n(), xr.c(), xr.h(), xr.w());
    for (int in = 0; in < xr.n(); ++in)
        for (int c = 0; c < xr.c(); ++c)
            for (int y = 0; y < xr.h(); ++y)
                for (int x = 0; x < xr.w(); ++x) {
                    float acc = 0.0f;
                    for (int dir = 0; dir < SMAWeights::directions; ++dir)
                        for (int n = -half; n <= half; ++n) {
                            const int sy = y + n * dy[dir];
                            const int sx = x + n * dx[dir];
                            if (sy < 0 || sy >= xr.h() || sx < 0 || sx >= xr.w()) continue;
                            acc += w.coeff(dir, n + half, c) * xr.at(in, c, sy, sx);
                        }
                    out.at(in, c, y, x) = acc;
                }
    return out;
}

Tensor sma_forward(const Tensor& x3, const SMAWeights& w, bool use_tgfi) {
    if (!use_tgfi) {
        return hadamard(sma_attention(x3, w), x3);
    }
    SampledSet s = sample(x3, RegionGrid(3, 3, x3.h(), x3.w()));
    Tensor a_reduced = sma_attention(s.values, w);
    Tensor a = restore(s, a_reduced);
    return hadamard(a, x3);
}

Tensor sga_forward(const Tensor& x4, const SGAWeights& w, int stage, bool use_tgfi) {
    if (stage < 1 || stage > 4)
        throw ShapeError("stage must be 1..4, got " + std::to_string(stage));

    if (stage <= 2) {
        if (!use_tgfi) {
            Tensor proxy = apply(w.conv7, apply(w.conv5, x4));
            return batchnorm_infer(add(hadamard(proxy, x4), x4), w.bn);
        }
        SampledSet s = sample(x4, RegionGrid(2, 2, x4.h(), x4.w()));
        Tensor proxy = apply(w.conv7, apply(w.conv5, s.values));
        Tensor gated = hadamard(proxy, s.values);
        return batchnorm_infer(add(restore(s, gated), x4), w.bn);
    }

    if (stage == 3 && use_tgfi) {
        SampledSet s = sample(x4, RegionGrid(2, 2, x4.h(), x4.w()));
        Tensor att = attention_over_map(s.values, w);
        return batchnorm_infer(add(restore(s, att), x4), w.bn);
    }

    // stage 4, and the dense variant of stage 3
    return batchnorm_infer(add(attention_over_map(x4, w), x4), w.bn);
}

Tensor lwga_forward(const Tensor& x, const LwgaWeights& w, int stage, bool use_tgfi) {
    std::array<Tensor, 4> parts = split_channels(x);
    std::array<Tensor, 4> outs = {
        gpa_forward(parts[0], w.gpa),
        rla_forward(parts[1], w.rla),
        sma_forward(parts[2], w.sma, use_tgfi),
        sga_forward(parts[3], w.sga, stage, use_tgfi),
    };
    return concat_channels(outs);
}

} // namespace lwga
