#include "lwga/reference.hpp"

#include <cmath>

#include "lwga/errors.hpp"

namespace lwga::ref {

Tensor conv2d(const Tensor& x, const Tensor& weight, const std::vector<float>& bias,
              const ConvSpec& s) {
    const int oh = conv_out_dim(x.h(), s.kh, s.stride, s.padding, s.dilation);
    const int ow = conv_out_dim(x.w(), s.kw, s.stride, s.padding, s.dilation);
    const int cg = s.in_ch / s.groups;
    const int oc_per_group = s.out_ch / s.groups;
    Tensor out(x.n(), s.out_ch, oh, ow);
    for (int in = 0; in < x.n(); ++in)
        for (int oc = 0; oc < s.out_ch; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = s.bias ? bias[oc] : 0.0;
                    for (int ky = 0; ky < s.kh; ++ky)
                        for (int kx = 0; kx < s.kw; ++kx)
                            for (int icg = 0; icg < cg; ++icg) {
                                const int iy = oy * s.stride - s.padding + ky * s.dilation;
                                const int ix = ox * s.stride - s.padding + kx * s.dilation;
                                const int ic = (oc / oc_per_group) * cg + icg;
                                const double xv =
                                    (iy >= 0 && iy < x.h() && ix >= 0 && ix < x.w())
                                        ? x.at(in, ic, iy, ix)
                                        : 0.0;
                                acc += xv * weight.at(oc, icg, ky, kx);
                            }
                    out.at(in, oc, oy, ox) = static_cast<float>(acc);
                }
    return out;
}

namespace {

// row-vector times matrix, double accumulation
std::vector<double> vecmat(const std::vector<double>& v, const Tensor& m) {
    const int d = m.h();
    std::vector<double> out(m.w(), 0.0);
    for (int j = 0; j < m.w(); ++j)
        for (int i = 0; i < d; ++i) out[j] += v[i] * m.at(0, 0, i, j);
    return out;
}

} // namespace

Tensor attention(const Tensor& tokens, int heads, const Tensor& wq, const Tensor& wk,
                 const Tensor& wv, const Tensor& wo) {
    const int t = tokens.h();
    const int d = tokens.w();
    const int dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor out(tokens.n(), 1, t, d);
    for (int in = 0; in < tokens.n(); ++in) {
        std::vector<std::vector<double>> q(t), k(t), v(t), ctx(t, std::vector<double>(d, 0.0));
        for (int i = 0; i < t; ++i) {
            std::vector<double> row(d);
            for (int j = 0; j < d; ++j) row[j] = tokens.at(in, 0, i, j);
            q[i] = vecmat(row, wq);
            k[i] = vecmat(row, wk);
            v[i] = vecmat(row, wv);
        }
        for (int hh = 0; hh < heads; ++hh) {
            const int off = hh * dh;
            for (int i = 0; i < t; ++i) {
                std::vector<double> logits(t, 0.0);
                double mx = -1e300;
                for (int j = 0; j < t; ++j) {
                    double dot = 0.0;
                    for (int p = 0; p < dh; ++p) dot += q[i][off + p] * k[j][off + p];
                    logits[j] = dot * scale;
                    mx = std::max(mx, logits[j]);
                }
                double denom = 0.0;
                for (int j = 0; j < t; ++j) {
                    logits[j] = std::exp(logits[j] - mx);
                    denom += logits[j];
                }
                for (int p = 0; p < dh; ++p) {
                    double acc = 0.0;
                    for (int j = 0; j < t; ++j) acc += logits[j] / denom * v[j][off + p];
                    ctx[i][off + p] = acc;
                }
            }
        }
        for (int i = 0; i < t; ++i) {
            std::vector<double> row = vecmat(ctx[i], wo);
            for (int j = 0; j < d; ++j) out.at(in, 0, i, j) = static_cast<float>(row[j]);
        }
    }
    return out;
}

Tensor bilinear(const Tensor& x, int out_h, int out_w) {
    Tensor out(x.n(), x.c(), out_h, out_w);
    const double sy = static_cast<double>(x.h()) / out_h;
    const double sx = static_cast<double>(x.w()) / out_w;
    for (int in = 0; in < x.n(); ++in)
        for (int c = 0; c < x.c(); ++c)
            for (int oy = 0; oy < out_h; ++oy)
                for (int ox = 0; ox < out_w; ++ox) {
                    double fy = (oy + 0.5) * sy - 0.5;
                    double fx = (ox + 0.5) * sx - 0.5;
                    fy = std::max(fy, 0.0);
                    fx = std::max(fx, 0.0);
                    const int y0 = std::min(static_cast<int>(fy), x.h() - 1);
                    const int x0 = std::min(static_cast<int>(fx), x.w() - 1);
                    const int y1 = std::min(y0 + 1, x.h() - 1);
                    const int x1 = std::min(x0 + 1, x.w() - 1);
                    const double ty = fy - y0;
                    const double tx = fx - x0;
                    // weighted four-corner sum (a different algebraic form
                    // than the production lerp)
                    const double val = (1.0 - ty) * (1.0 - tx) * x.at(in, c, y0, x0) +
                                       (1.0 - ty) * tx * x.at(in, c, y0, x1) +
                                       ty * (1.0 - tx) * x.at(in, c, y1, x0) +
                                       ty * tx * x.at(in, c, y1, x1);
                    out.at(in, c, oy, ox) = static_cast<float>(val);
                }
    return out;
}

Tensor sma_attention(const Tensor& xr, const SMAWeights& w) {
    const int half = (SMAWeights::window - 1) / 2;
    auto tap = [&](int in, int c, int y, int x) -> double {
        if (y < 0 || y >= xr.h() || x < 0 || x >= xr.w()) return 0.0;
        return xr.at(in, c, y, x);
    };
    Tensor out(xr.n(), xr.c(), xr.h(), xr.w());
    for (int in = 0; in < xr.n(); ++in)
        for (int c = 0; c < xr.c(); ++c)
            for (int y = 0; y < xr.h(); ++y)
                for (int x = 0; x < xr.w(); ++x) {
                    // vertical
                    double sv = w.coeff(0, half, c) * tap(in, c, y, x);
                    for (int n = 1; n <= half; ++n)
                        sv += w.coeff(0, half - n, c) * tap(in, c, y - n, x) +
                              w.coeff(0, half + n, c) * tap(in, c, y + n, x);
                    // main diagonal
                    double sd = w.coeff(1, half, c) * tap(in, c, y, x);
                    for (int n = 1; n <= half; ++n)
                        sd += w.coeff(1, half - n, c) * tap(in, c, y - n, x - n) +
                              w.coeff(1, half + n, c) * tap(in, c, y + n, x + n);
                    // horizontal
                    double sh = w.coeff(2, half, c) * tap(in, c, y, x);
                    for (int n = 1; n <= half; ++n)
                        sh += w.coeff(2, half - n, c) * tap(in, c, y, x - n) +
                              w.coeff(2, half + n, c) * tap(in, c, y, x + n);
                    // anti-diagonal
                    double sa = w.coeff(3, half, c) * tap(in, c, y, x);
                    for (int n = 1; n <= half; ++n)
                        sa += w.coeff(3, half - n, c) * tap(in, c, y + n, x - n) +
                              w.coeff(3, half + n, c) * tap(in, c, y - n, x + n);
                    out.at(in, c, y, x) = static_cast<float>(sv + sd + sh + sa);
                }
    return out;
}

std::vector<Coord> region_argmax(const Tensor& x, int rh, int rw) {
    const int gh = (x.h() + rh - 1) / rh;
    const int gw = (x.w() + rw - 1) / rw;
    std::vector<Coord> out;
    out.reserve(static_cast<std::size_t>(x.n()) * gh * gw);
    for (int in = 0; in < x.n(); ++in)
        for (int gy = 0; gy < gh; ++gy)
            for (int gx = 0; gx < gw; ++gx) {
                Coord best{-1, -1};
                double best_score = 0.0;
                for (int y = gy * rh; y < std::min((gy + 1) * rh, x.h()); ++y)
                    for (int xx = gx * rw; xx < std::min((gx + 1) * rw, x.w()); ++xx) {
                        double score = 0.0;
                        for (int c = 0; c < x.c(); ++c) score += std::fabs(x.at(in, c, y, xx));
                        // first visit wins ties: scan order is row-major
                        if (best.y < 0 || score > best_score) {
                            best = {y, xx};
                            best_score = score;
                        }
                    }
                out.push_back(best);
            }
    return out;
}

} // namespace lwga::ref
