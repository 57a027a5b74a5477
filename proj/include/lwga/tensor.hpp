#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lwga/errors.hpp"

namespace lwga {

// Dense rank-4 feature map, N x C x H x W, contiguous row-major (n-major,
// w-minor), 32-bit floats. Kernels return new tensors; a constructed tensor
// is never mutated by the ops below, so concurrent reads are safe.
class Tensor {
public:
    Tensor() = default;
    Tensor(int n, int c, int h, int w);
    Tensor(int n, int c, int h, int w, std::vector<float> values);

    static Tensor full(int n, int c, int h, int w, float value);

    int n() const { return n_; }
    int c() const { return c_; }
    int h() const { return h_; }
    int w() const { return w_; }
    std::size_t size() const { return data_.size(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    std::size_t index(int in, int ic, int iy, int ix) const {
        return ((static_cast<std::size_t>(in) * c_ + ic) * h_ + iy) * w_ + ix;
    }
    float& at(int in, int ic, int iy, int ix) { return data_[index(in, ic, iy, ix)]; }
    float at(int in, int ic, int iy, int ix) const { return data_[index(in, ic, iy, ix)]; }

    bool same_dims(const Tensor& other) const {
        return n_ == other.n_ && c_ == other.c_ && h_ == other.h_ && w_ == other.w_;
    }

    std::string shape_str() const {
        return std::to_string(n_) + "x" + std::to_string(c_) + "x" + std::to_string(h_) + "x" +
               std::to_string(w_);
    }

private:
    int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    std::vector<float> data_;
};

enum class Act { gelu, relu, sigmoid };

struct ConvSpec {
    int in_ch = 0;
    int out_ch = 0;
    int kh = 1;
    int kw = 1;
    int stride = 1;
    int padding = 0;
    int dilation = 1;
    int groups = 1;
    bool bias = false;
};

// floor((in + 2*pad - dilation*(k-1) - 1) / stride) + 1
int conv_out_dim(int in, int k, int stride, int pad, int dilation);

// Cross-correlation (no kernel flip) with zero padding. weight is
// out_ch x (in_ch/groups) x kh x kw; bias has out_ch entries when
// spec.bias is set, and must be empty otherwise. Accumulation is f32 in a
// fixed loop order (ic, ky, kx), so repeated calls are bitwise identical
// at any thread count.
Tensor conv2d(const Tensor& x, const Tensor& weight,
              const std::vector<float>& bias, const ConvSpec& spec);

struct BNParams {
    std::vector<float> gamma;
    std::vector<float> beta;
    std::vector<float> mean;
    std::vector<float> var;
    float eps = 1e-5f;

    // gamma=1, beta=0, mean=0, var=1, eps=0: batchnorm_infer becomes the
    // exact identity. Used by the analytic-identity configurations.
    static BNParams identity(int channels);
};

// y = gamma * (x - mean) / sqrt(var + eps) + beta, per channel.
Tensor batchnorm_infer(const Tensor& x, const BNParams& p);

// Elementwise. GELU is the exact erf form x/2 * (1 + erf(x/sqrt(2))).
Tensor activation(const Tensor& x, Act kind);
float activation_scalar(float v, Act kind);

// Contiguous channel blocks, in order. concat undoes split bitwise.
std::array<Tensor, 4> split_channels(const Tensor& x);
Tensor concat_channels(std::span<const Tensor> parts);

// In-place row softmax with max subtraction. m is rows x cols row-major.
void softmax_rows(float* m, int rows, int cols);

// Scaled dot-product attention over a token matrix. tokens is n x 1 x T x D;
// each projection weight is 1 x 1 x D x D applied as y = x * W (row vector
// times matrix). D must divide evenly into heads; scale is 1/sqrt(D/heads).
// Token order is preserved.
Tensor mhsa(const Tensor& tokens, int heads, const Tensor& wq,
            const Tensor& wk, const Tensor& wv, const Tensor& wo);

// n x c x h x w -> n x 1 x (h*w) x c, rows in row-major spatial order.
Tensor tokens_from_map(const Tensor& x);
Tensor map_from_tokens(const Tensor& tokens, int c, int h, int w);

// Half-pixel-centers (align-corners=false) bilinear resize. Identity when
// the output dims equal the input dims (bitwise).
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);

// Mean over H*W, yielding n x c x 1 x 1.
Tensor global_avg_pool(const Tensor& x);

// Weight + bias bundled with its spec.
struct ConvLayer {
    ConvSpec spec;
    Tensor weight;
    std::vector<float> bias;
};

Tensor apply(const ConvLayer& layer, const Tensor& x);

// Worker count for the data-parallel mode (conv2d splits output rows).
// 1 selects the single-threaded reference path. Results are bitwise
// identical at every setting: each output element is an independent,
// fixed-order accumulation.
void set_num_threads(int n);
int num_threads();

} // namespace lwga
