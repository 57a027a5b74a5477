#include "lwga/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <thread>

namespace lwga {

namespace {

std::atomic<int> g_threads{1};

void check_nonneg(int v, const char* axis) {
    if (v < 0) {
        throw ShapeError(std::string("tensor: negative ") + axis);
    }
}

// Splits [0, count) into contiguous chunks across the configured workers.
// fn(begin, end) must be independent per chunk.
template <typename Fn>
void parallel_chunks(int count, Fn&& fn) {
    int workers = std::min(g_threads.load(), count);
    if (workers <= 1) {
        fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    int base = count / workers;
    int extra = count % workers;
    int begin = 0;
    for (int t = 0; t < workers; ++t) {
        int len = base + (t < extra ? 1 : 0);
        int end = begin + len;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
        begin = end;
    }
    for (auto& th : pool) {
        th.join();
    }
}

} // namespace

Tensor::Tensor(int n, int c, int h, int w) : n_(n), c_(c), h_(h), w_(w) {
    check_nonneg(n, "n");
    check_nonneg(c, "c");
    check_nonneg(h, "h");
    check_nonneg(w, "w");
    data_.assign(static_cast<std::size_t>(n) * c * h * w, 0.0f);
}

Tensor::Tensor(int n, int c, int h, int w, std::vector<float> values)
    : n_(n), c_(c), h_(h), w_(w), data_(std::move(values)) {
    check_nonneg(n, "n");
    check_nonneg(c, "c");
    check_nonneg(h, "h");
    check_nonneg(w, "w");
    if (data_.size() != static_cast<std::size_t>(n) * c * h * w) {
        throw ShapeError("tensor: data length " + std::to_string(data_.size()) +
                         " does not match dims product " +
                         std::to_string(static_cast<std::size_t>(n) * c * h * w));
    }
}

Tensor Tensor::full(int n, int c, int h, int w, float value) {
    Tensor t(n, c, h, w);
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

void set_num_threads(int n) { g_threads.store(std::max(1, n)); }
int num_threads() { return g_threads.load(); }

int conv_out_dim(int in, int k, int stride, int pad, int dilation) {
    const int span = in + 2 * pad - dilation * (k - 1) - 1;
    if (span < 0) return 0; // plain / would truncate toward zero and report 1
    return span / stride + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& weight,
              const std::vector<float>& bias, const ConvSpec& spec) {
    if (spec.in_ch <= 0 || spec.out_ch <= 0 || spec.kh <= 0 || spec.kw <= 0 ||
        spec.stride <= 0 || spec.padding < 0 || spec.dilation <= 0 || spec.groups <= 0) {
        throw ShapeError("conv2d: spec fields must be positive (padding may be 0)");
    }
    if (spec.in_ch % spec.groups != 0 || spec.out_ch % spec.groups != 0) {
        throw ShapeError("conv2d: channel axis not divisible by groups (in " +
                         std::to_string(spec.in_ch) + ", out " + std::to_string(spec.out_ch) +
                         ", groups " + std::to_string(spec.groups) + ")");
    }
    if (x.c() != spec.in_ch) {
        throw ShapeError("conv2d: input channel axis is " + std::to_string(x.c()) +
                         ", spec.in_ch is " + std::to_string(spec.in_ch));
    }
    const int cg = spec.in_ch / spec.groups;
    if (weight.n() != spec.out_ch || weight.c() != cg ||
        weight.h() != spec.kh || weight.w() != spec.kw) {
        throw ShapeError("conv2d: weight dims " + std::to_string(weight.n()) + "x" +
                         std::to_string(weight.c()) + "x" + std::to_string(weight.h()) + "x" +
                         std::to_string(weight.w()) + " do not match spec " +
                         std::to_string(spec.out_ch) + "x" + std::to_string(cg) + "x" +
                         std::to_string(spec.kh) + "x" + std::to_string(spec.kw));
    }
    if (spec.bias && bias.size() != static_cast<std::size_t>(spec.out_ch)) {
        throw ShapeError("conv2d: bias axis is " + std::to_string(bias.size()) +
                         ", spec.out_ch is " + std::to_string(spec.out_ch));
    }
    if (!spec.bias && !bias.empty()) {
        throw ShapeError("conv2d: bias supplied but spec.bias is false");
    }

    const int oh = conv_out_dim(x.h(), spec.kh, spec.stride, spec.padding, spec.dilation);
    const int ow = conv_out_dim(x.w(), spec.kw, spec.stride, spec.padding, spec.dilation);
    if (oh < 1 || ow < 1) {
        throw ShapeError("conv2d: zero-size output (" + std::to_string(oh) + "x" +
                         std::to_string(ow) + ") for input " + std::to_string(x.h()) + "x" +
                         std::to_string(x.w()));
    }

    Tensor out(x.n(), spec.out_ch, oh, ow);
    const int oc_per_group = spec.out_ch / spec.groups;
    const float* xd = x.data();
    const float* wd = weight.data();
    float* od = out.data();

    // One task per (n, oc, oy) output row. Zero-padding taps are skipped by
    // clipping the kernel ranges; skipped taps contribute exactly 0.
    const int rows = x.n() * spec.out_ch * oh;
    parallel_chunks(rows, [&](int row_begin, int row_end) {
        for (int row = row_begin; row < row_end; ++row) {
            const int oy = row % oh;
            const int oc = (row / oh) % spec.out_ch;
            const int in = row / (oh * spec.out_ch);
            const int g = oc / oc_per_group;
            const int ic0 = g * cg;
            const float b = spec.bias ? bias[oc] : 0.0f;
            const std::size_t w_oc = static_cast<std::size_t>(oc) * cg * spec.kh * spec.kw;
            float* orow = od + ((static_cast<std::size_t>(in) * spec.out_ch + oc) * oh + oy) * ow;
            for (int ox = 0; ox < ow; ++ox) {
                const int iy0 = oy * spec.stride - spec.padding;
                const int ix0 = ox * spec.stride - spec.padding;
                float acc = b;
                for (int icg = 0; icg < cg; ++icg) {
                    const float* xplane =
                        xd + (static_cast<std::size_t>(in) * x.c() + ic0 + icg) *
                                 x.h() * x.w();
                    const float* wplane = wd + w_oc +
                        static_cast<std::size_t>(icg) * spec.kh * spec.kw;
                    for (int ky = 0; ky < spec.kh; ++ky) {
                        const int iy = iy0 + ky * spec.dilation;
                        if (iy < 0 || iy >= x.h()) continue;
                        const float* xrow = xplane + static_cast<std::size_t>(iy) * x.w();
                        const float* wrow = wplane + static_cast<std::size_t>(ky) * spec.kw;
                        for (int kx = 0; kx < spec.kw; ++kx) {
                            const int ix = ix0 + kx * spec.dilation;
                            if (ix < 0 || ix >= x.w()) continue;
                            acc += xrow[ix] * wrow[kx];
                        }
                    }
                }
                orow[ox] = acc;
            }
        }
    });
    return out;
}

BNParams BNParams::identity(int channels) {
    BNParams p;
    p.gamma.assign(channels, 1.0f);
    p.beta.assign(channels, 0.0f);
    p.mean.assign(channels, 0.0f);
    p.var.assign(channels, 1.0f);
    p.eps = 0.0f;
    return p;
}

Tensor batchnorm_infer(const Tensor& x, const BNParams& p) {
    const std::size_t c = static_cast<std::size_t>(x.c());
    if (p.gamma.size() != c || p.beta.size() != c || p.mean.size() != c ||
        p.var.size() != c) {
        throw ShapeError("batchnorm_infer: parameter length (" +
                         std::to_string(p.gamma.size()) + ") does not match channel axis (" +
                         std::to_string(x.c()) + ")");
    }
    // Folded per-channel affine: y = x*scale + shift.
    std::vector<float> scale(c), shift(c);
    for (std::size_t i = 0; i < c; ++i) {
        scale[i] = p.gamma[i] / std::sqrt(p.var[i] + p.eps);
        shift[i] = p.beta[i] - p.mean[i] * scale[i];
    }
    Tensor out(x.n(), x.c(), x.h(), x.w());
    const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
    const float* xd = x.data();
    float* od = out.data();
    for (int in = 0; in < x.n(); ++in) {
        for (std::size_t ic = 0; ic < c; ++ic) {
            const float s = scale[ic];
            const float t = shift[ic];
            const std::size_t base = (static_cast<std::size_t>(in) * c + ic) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                od[base + i] = xd[base + i] * s + t;
            }
        }
    }
    return out;
}

float activation_scalar(float v, Act kind) {
    switch (kind) {
    case Act::gelu:
        return 0.5f * v * (1.0f + std::erf(v * 0.70710678118654752440f));
    case Act::relu:
        return v > 0.0f ? v : 0.0f;
    case Act::sigmoid:
        return 1.0f / (1.0f + std::exp(-v));
    }
    return v;
}

Tensor activation(const Tensor& x, Act kind) {
    Tensor out(x.n(), x.c(), x.h(), x.w());
    const float* xd = x.data();
    float* od = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        od[i] = activation_scalar(xd[i], kind);
    }
    return out;
}

std::array<Tensor, 4> split_channels(const Tensor& x) {
    if (x.c() % 4 != 0) {
        throw ShapeError("split_channels: channels not divisible by 4 (c=" +
                         std::to_string(x.c()) + ")");
    }
    const int part = x.c() / 4;
    const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
    std::array<Tensor, 4> out;
    for (int p = 0; p < 4; ++p) {
        out[p] = Tensor(x.n(), part, x.h(), x.w());
        for (int in = 0; in < x.n(); ++in) {
            const float* src = x.data() + (static_cast<std::size_t>(in) * x.c() + p * part) * plane;
            float* dst = out[p].data() + static_cast<std::size_t>(in) * part * plane;
            std::memcpy(dst, src, sizeof(float) * part * plane);
        }
    }
    return out;
}

Tensor concat_channels(std::span<const Tensor> parts) {
    if (parts.empty()) {
        throw ShapeError("concat_channels: no inputs");
    }
    const Tensor& first = parts[0];
    int c_total = 0;
    for (const Tensor& p : parts) {
        if (p.n() != first.n() || p.h() != first.h() || p.w() != first.w()) {
            throw ShapeError("concat_channels: spatial/batch axis mismatch (" +
                             std::to_string(p.n()) + "x*x" + std::to_string(p.h()) + "x" +
                             std::to_string(p.w()) + " vs " + std::to_string(first.n()) +
                             "x*x" + std::to_string(first.h()) + "x" +
                             std::to_string(first.w()) + ")");
        }
        c_total += p.c();
    }
    Tensor out(first.n(), c_total, first.h(), first.w());
    const std::size_t plane = static_cast<std::size_t>(first.h()) * first.w();
    for (int in = 0; in < first.n(); ++in) {
        int c_off = 0;
        for (const Tensor& p : parts) {
            const float* src = p.data() + static_cast<std::size_t>(in) * p.c() * plane;
            float* dst = out.data() + (static_cast<std::size_t>(in) * c_total + c_off) * plane;
            std::memcpy(dst, src, sizeof(float) * p.c() * plane);
            c_off += p.c();
        }
    }
    return out;
}

void softmax_rows(float* m, int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
        float* row = m + static_cast<std::size_t>(r) * cols;
        float mx = row[0];
        for (int j = 1; j < cols; ++j) {
            mx = std::max(mx, row[j]);
        }
        float sum = 0.0f;
        for (int j = 0; j < cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        const float inv = 1.0f / sum;
        for (int j = 0; j < cols; ++j) {
            row[j] *= inv;
        }
    }
}

namespace {

// out[T x N] = a[T x K] * b[K x N], fixed accumulation order over K.
void matmul(const float* a, const float* b, float* out, int t, int k, int n) {
    for (int i = 0; i < t; ++i) {
        const float* arow = a + static_cast<std::size_t>(i) * k;
        float* orow = out + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            float acc = 0.0f;
            for (int p = 0; p < k; ++p) {
                acc += arow[p] * b[static_cast<std::size_t>(p) * n + j];
            }
            orow[j] = acc;
        }
    }
}

} // namespace

Tensor mhsa(const Tensor& tokens, int heads, const Tensor& wq,
            const Tensor& wk, const Tensor& wv, const Tensor& wo) {
    if (tokens.c() != 1) {
        throw ShapeError("mhsa: token tensor must be n x 1 x T x D");
    }
    const int t = tokens.h();
    const int d = tokens.w();
    if (heads <= 0 || d % heads != 0) {
        throw ShapeError("mhsa: embedding axis " + std::to_string(d) +
                         " not divisible by heads " + std::to_string(heads));
    }
    for (const Tensor* w : {&wq, &wk, &wv, &wo}) {
        if (w->n() != 1 || w->c() != 1 || w->h() != d || w->w() != d) {
            throw ShapeError("mhsa: projection weight must be 1 x 1 x " +
                             std::to_string(d) + " x " + std::to_string(d));
        }
    }
    const int dh = d / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(dh));

    Tensor out(tokens.n(), 1, t, d);
    std::vector<float> q(static_cast<std::size_t>(t) * d), k(q.size()), v(q.size());
    std::vector<float> scores(static_cast<std::size_t>(t) * t);
    std::vector<float> ctx(static_cast<std::size_t>(t) * d);
    for (int in = 0; in < tokens.n(); ++in) {
        const float* x = tokens.data() + static_cast<std::size_t>(in) * t * d;
        matmul(x, wq.data(), q.data(), t, d, d);
        matmul(x, wk.data(), k.data(), t, d, d);
        matmul(x, wv.data(), v.data(), t, d, d);
        for (int hh = 0; hh < heads; ++hh) {
            const int off = hh * dh;
            for (int i = 0; i < t; ++i) {
                for (int j = 0; j < t; ++j) {
                    float acc = 0.0f;
                    for (int p = 0; p < dh; ++p) {
                        acc += q[static_cast<std::size_t>(i) * d + off + p] *
                               k[static_cast<std::size_t>(j) * d + off + p];
                    }
                    scores[static_cast<std::size_t>(i) * t + j] = acc * scale;
                }
            }
            softmax_rows(scores.data(), t, t);
            for (int i = 0; i < t; ++i) {
                for (int p = 0; p < dh; ++p) {
                    float acc = 0.0f;
                    for (int j = 0; j < t; ++j) {
                        acc += scores[static_cast<std::size_t>(i) * t + j] *
                               v[static_cast<std::size_t>(j) * d + off + p];
                    }
                    ctx[static_cast<std::size_t>(i) * d + off + p] = acc;
                }
            }
        }
        matmul(ctx.data(), wo.data(), out.data() + static_cast<std::size_t>(in) * t * d,
               t, d, d);
    }
    return out;
}

Tensor tokens_from_map(const Tensor& x) {
    Tensor out(x.n(), 1, x.h() * x.w(), x.c());
    for (int in = 0; in < x.n(); ++in) {
        for (int ic = 0; ic < x.c(); ++ic) {
            for (int iy = 0; iy < x.h(); ++iy) {
                for (int ix = 0; ix < x.w(); ++ix) {
                    out.at(in, 0, iy * x.w() + ix, ic) = x.at(in, ic, iy, ix);
                }
            }
        }
    }
    return out;
}

Tensor map_from_tokens(const Tensor& tokens, int c, int h, int w) {
    if (tokens.c() != 1 || tokens.h() != h * w || tokens.w() != c) {
        throw ShapeError("map_from_tokens: token axis " + std::to_string(tokens.h()) + "x" +
                         std::to_string(tokens.w()) + " does not match " +
                         std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w));
    }
    Tensor out(tokens.n(), c, h, w);
    for (int in = 0; in < tokens.n(); ++in) {
        for (int ic = 0; ic < c; ++ic) {
            for (int iy = 0; iy < h; ++iy) {
                for (int ix = 0; ix < w; ++ix) {
                    out.at(in, ic, iy, ix) = tokens.at(in, 0, iy * w + ix, ic);
                }
            }
        }
    }
    return out;
}

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) {
        throw ShapeError("bilinear_resize: output axis must be >= 1");
    }
    if (out_h == x.h() && out_w == x.w()) {
        return x;
    }
    Tensor out(x.n(), x.c(), out_h, out_w);
    const float sy = static_cast<float>(x.h()) / out_h;
    const float sx = static_cast<float>(x.w()) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        float fy = (oy + 0.5f) * sy - 0.5f;
        if (fy < 0.0f) fy = 0.0f;
        int y0 = std::min(static_cast<int>(fy), x.h() - 1);
        int y1 = std::min(y0 + 1, x.h() - 1);
        const float ty = fy - y0;
        for (int ox = 0; ox < out_w; ++ox) {
            float fx = (ox + 0.5f) * sx - 0.5f;
            if (fx < 0.0f) fx = 0.0f;
            int x0 = std::min(static_cast<int>(fx), x.w() - 1);
            int x1 = std::min(x0 + 1, x.w() - 1);
            const float tx = fx - x0;
            for (int in = 0; in < x.n(); ++in) {
                for (int ic = 0; ic < x.c(); ++ic) {
                    const float v00 = x.at(in, ic, y0, x0);
                    const float v01 = x.at(in, ic, y0, x1);
                    const float v10 = x.at(in, ic, y1, x0);
                    const float v11 = x.at(in, ic, y1, x1);
                    // Lerp form: exact for constant neighborhoods.
                    const float top = v00 + tx * (v01 - v00);
                    const float bot = v10 + tx * (v11 - v10);
                    out.at(in, ic, oy, ox) = top + ty * (bot - top);
                }
            }
        }
    }
    return out;
}

Tensor global_avg_pool(const Tensor& x) {
    Tensor out(x.n(), x.c(), 1, 1);
    const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
    const float inv = 1.0f / static_cast<float>(plane);
    for (int in = 0; in < x.n(); ++in) {
        for (int ic = 0; ic < x.c(); ++ic) {
            const float* p = x.data() + (static_cast<std::size_t>(in) * x.c() + ic) * plane;
            float acc = 0.0f;
            for (std::size_t i = 0; i < plane; ++i) {
                acc += p[i];
            }
            out.at(in, ic, 0, 0) = acc * inv;
        }
    }
    return out;
}

Tensor apply(const ConvLayer& layer, const Tensor& x) {
    return conv2d(x, layer.weight, layer.bias, layer.spec);
}

} // namespace lwga
