#include "lwga/backbone.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <unordered_set>

#include "lwga/errors.hpp"

namespace lwga {

namespace {

Tensor pad_bottom_right(const Tensor& x, int new_h, int new_w) {
    if (new_h == x.h() && new_w == x.w()) return x;
    Tensor out(x.n(), x.c(), new_h, new_w);
    for (int in = 0; in < x.n(); ++in)
        for (int c = 0; c < x.c(); ++c)
            for (int y = 0; y < x.h(); ++y)
                for (int xx = 0; xx < x.w(); ++xx)
                    out.at(in, c, y, xx) = x.at(in, c, y, xx);
    return out;
}

int round_up(int v, int to) { return (v + to - 1) / to * to; }

// 2x2 stride-2 max pool; odd edges behave as if zero-padded bottom/right.
Tensor maxpool2x2(const Tensor& x) {
    const int oh = (x.h() + 1) / 2;
    const int ow = (x.w() + 1) / 2;
    Tensor out(x.n(), x.c(), oh, ow);
    for (int in = 0; in < x.n(); ++in)
        for (int c = 0; c < x.c(); ++c)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    float m = -std::numeric_limits<float>::infinity();
                    bool padded = false;
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const int y = 2 * oy + dy;
                            const int xx = 2 * ox + dx;
                            if (y < x.h() && xx < x.w())
                                m = std::max(m, x.at(in, c, y, xx));
                            else
                                padded = true;
                        }
                    if (padded) m = std::max(m, 0.0f);
                    out.at(in, c, oy, ox) = m;
                }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_dims(b))
        throw ShapeError("elementwise sum dims " + a.shape_str() + " vs " + b.shape_str());
    Tensor out(a.n(), a.c(), a.h(), a.w());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    return out;
}

} // namespace

Tensor cmlp_block_forward(const Tensor& x, const LwgaWeights& lwga, const CMLPWeights& cmlp,
                          int stage, bool use_tgfi) {
    Tensor y = lwga_forward(x, lwga, stage, use_tgfi);
    y = apply(cmlp.up, y);
    y = activation(batchnorm_infer(y, cmlp.bn_mid), cmlp.act);
    y = apply(cmlp.down, y);
    // dropout site: identity at inference
    y = batchnorm_infer(y, cmlp.bn_out);
    return add(x, y);
}

Tensor stem_forward(const Tensor& img, const StemWeights& w) {
    if (img.h() < 4 || img.w() < 4)
        throw ShapeError("stem needs at least 4x4 input, got " + std::to_string(img.h()) + "x" +
                         std::to_string(img.w()));
    Tensor x = pad_bottom_right(img, round_up(img.h(), 4), round_up(img.w(), 4));
    return activation(batchnorm_infer(apply(w.conv, x), w.bn), w.act);
}

Tensor drfd_forward(const Tensor& x, const DrfdWeights& w) {
    Tensor a = apply(w.conv3, x);
    Tensor b = apply(w.conv1, maxpool2x2(x));
    return activation(batchnorm_infer(add(a, b), w.bn), w.act);
}

std::array<Tensor, 4> backbone_forward(const Tensor& img, const LwgaNet& model) {
    if (img.h() < 32 || img.w() < 32)
        throw ShapeError("backbone needs at least 32x32 input, got " + std::to_string(img.h()) +
                         "x" + std::to_string(img.w()));
    Tensor x = pad_bottom_right(img, round_up(img.h(), 32), round_up(img.w(), 32));
    x = stem_forward(x, model.stem);
    std::array<Tensor, 4> feats;
    for (int k = 0; k < 4; ++k) {
        if (k > 0) x = drfd_forward(x, *model.drfd[k]);
        for (const BlockWeights& b : model.stages[k])
            x = cmlp_block_forward(x, b.lwga, b.cmlp, k + 1, model.config.use_tgfi);
        feats[k] = x;
    }
    return feats;
}

std::vector<float> classify(const Tensor& img, const LwgaNet& model) {
    if (img.n() != 1)
        throw ShapeError("classify takes one image, got batch of " + std::to_string(img.n()));
    std::array<Tensor, 4> feats = backbone_forward(img, model);
    Tensor pooled = global_avg_pool(feats[3]);
    const int in_features = pooled.c();
    const int classes = model.head.weight.h();
    std::vector<float> logits(classes);
    for (int k = 0; k < classes; ++k) {
        float acc = model.head.bias[k];
        for (int c = 0; c < in_features; ++c)
            acc += model.head.weight.at(0, 0, k, c) * pooled.at(0, c, 0, 0);
        logits[k] = acc;
    }
    return logits;
}

namespace {

void push_bn(std::vector<TensorShape>& out, const std::string& prefix, std::uint64_t ch) {
    for (const char* part : {".gamma", ".beta", ".mean", ".var"})
        out.push_back({prefix + part, {ch}});
}

} // namespace

std::vector<TensorShape> weight_manifest(const ModelConfig& config) {
    std::vector<TensorShape> out;
    const std::uint64_t c0 = static_cast<std::uint64_t>(config.stem_channels);
    out.push_back({"stem.conv.weight", {c0, 3, 4, 4}});
    push_bn(out, "stem.bn", c0);

    for (int k = 1; k <= 4; ++k) {
        const std::uint64_t d = static_cast<std::uint64_t>(config.stages[k - 1].channels);
        const std::uint64_t c4 = d / 4;
        const std::uint64_t hidden =
            static_cast<std::uint64_t>(config.cmlp_hidden(static_cast<int>(d)));
        const std::string sk = "stage" + std::to_string(k);
        if (k > 1) {
            const std::uint64_t prev = d / 2;
            out.push_back({sk + ".drfd.conv3.weight", {d, prev, 3, 3}});
            out.push_back({sk + ".drfd.conv1.weight", {d, prev, 1, 1}});
            push_bn(out, sk + ".drfd.bn", d);
        }
        for (int b = 0; b < config.stages[k - 1].blocks; ++b) {
            const std::string p = sk + ".block" + std::to_string(b);
            out.push_back({p + ".gpa.conv1.weight", {d, c4, 1, 1}});
            push_bn(out, p + ".gpa.bn", d);
            out.push_back({p + ".gpa.conv2.weight", {c4, d, 1, 1}});
            out.push_back({p + ".gpa.conv2.bias", {c4}});
            out.push_back({p + ".rla.conv.weight", {c4, c4, 3, 3}});
            push_bn(out, p + ".rla.bn", c4);
            out.push_back({p + ".sma.alpha",
                           {SMAWeights::directions, SMAWeights::window, c4}});
            if (k <= 2) {
                out.push_back({p + ".sga.conv5.weight", {c4, c4 / 4, 5, 5}});
                out.push_back({p + ".sga.conv5.bias", {c4}});
                out.push_back({p + ".sga.conv7.weight", {c4, 1, 7, 7}});
                out.push_back({p + ".sga.conv7.bias", {c4}});
            } else {
                for (const char* w : {".sga.wq", ".sga.wk", ".sga.wv", ".sga.wo"})
                    out.push_back({p + w, {c4, c4}});
            }
            push_bn(out, p + ".sga.bn", c4);
            out.push_back({p + ".cmlp.up.weight", {hidden, d, 1, 1}});
            push_bn(out, p + ".cmlp.bn_mid", hidden);
            out.push_back({p + ".cmlp.down.weight", {d, hidden, 1, 1}});
            push_bn(out, p + ".cmlp.bn_out", d);
        }
    }
    out.push_back({"head.weight",
                   {static_cast<std::uint64_t>(config.num_classes),
                    static_cast<std::uint64_t>(config.stages[3].channels)}});
    out.push_back({"head.bias", {static_cast<std::uint64_t>(config.num_classes)}});
    return out;
}

namespace {

std::string dims_str(const std::vector<std::uint64_t>& dims) {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(dims[i]);
    }
    return s;
}

void check_store(const ModelConfig& config, const WeightStore& store,
                 const std::vector<TensorShape>& manifest) {
    for (const TensorShape& t : manifest) {
        if (!store.contains(t.name))
            throw IoError(IoErrc::manifest_mismatch,
                          std::string("manifest mismatch for variant ") +
                              variant_name(config.variant) + ": missing tensor '" + t.name +
                              "' (" + dims_str(t.dims) + ")");
        const WeightEntry& e = store.at(t.name);
        if (e.dims != t.dims)
            throw IoError(IoErrc::manifest_mismatch,
                          std::string("manifest mismatch for variant ") +
                              variant_name(config.variant) + ": tensor '" + t.name + "' is " +
                              dims_str(e.dims) + ", expected " + dims_str(t.dims));
    }
    if (store.size() != manifest.size()) {
        std::unordered_set<std::string> expected;
        for (const TensorShape& t : manifest) expected.insert(t.name);
        for (const WeightEntry& e : store.entries())
            if (!expected.count(e.name))
                throw IoError(IoErrc::manifest_mismatch,
                              std::string("manifest mismatch for variant ") +
                                  variant_name(config.variant) + ": unexpected tensor '" +
                                  e.name + "'");
    }
}

Tensor rank4_from(const WeightEntry& e, int n, int c, int h, int w) {
    return Tensor(n, c, h, w, e.data);
}

BNParams bn_from(const WeightStore& store, const std::string& prefix) {
    BNParams p;
    p.gamma = store.at(prefix + ".gamma").data;
    p.beta = store.at(prefix + ".beta").data;
    p.mean = store.at(prefix + ".mean").data;
    p.var = store.at(prefix + ".var").data;
    return p;
}

ConvLayer conv_from(const WeightStore& store, const std::string& name, ConvSpec spec) {
    ConvLayer layer;
    layer.spec = spec;
    const WeightEntry& w = store.at(name + ".weight");
    layer.weight = rank4_from(w, spec.out_ch, spec.in_ch / spec.groups, spec.kh, spec.kw);
    if (spec.bias) layer.bias = store.at(name + ".bias").data;
    return layer;
}

Tensor square_from(const WeightStore& store, const std::string& name, int d) {
    return Tensor(1, 1, d, d, store.at(name).data);
}

} // namespace

LwgaNet build_model(const ModelConfig& config, const WeightStore& store) {
    check_store(config, store, weight_manifest(config));

    LwgaNet m;
    m.config = config;
    const int c0 = config.stem_channels;

    m.stem.conv = conv_from(store, "stem.conv", {.in_ch = 3, .out_ch = c0, .kh = 4, .kw = 4,
                                                 .stride = 4});
    m.stem.bn = bn_from(store, "stem.bn");
    m.stem.act = config.act;

    for (int k = 1; k <= 4; ++k) {
        const int d = config.stages[k - 1].channels;
        const int c4 = d / 4;
        const int hidden = config.cmlp_hidden(d);
        const std::string sk = "stage" + std::to_string(k);

        if (k > 1) {
            const int prev = d / 2;
            DrfdWeights dw;
            dw.conv3 = conv_from(store, sk + ".drfd.conv3",
                                 {.in_ch = prev, .out_ch = d, .kh = 3, .kw = 3, .stride = 2,
                                  .padding = 1});
            dw.conv1 = conv_from(store, sk + ".drfd.conv1", {.in_ch = prev, .out_ch = d});
            dw.bn = bn_from(store, sk + ".drfd.bn");
            dw.act = config.act;
            m.drfd[k - 1] = std::move(dw);
        }

        for (int b = 0; b < config.stages[k - 1].blocks; ++b) {
            const std::string p = sk + ".block" + std::to_string(b);
            BlockWeights bw;

            bw.lwga.gpa.conv1 = conv_from(store, p + ".gpa.conv1", {.in_ch = c4, .out_ch = d});
            bw.lwga.gpa.bn = bn_from(store, p + ".gpa.bn");
            bw.lwga.gpa.act = config.act;
            bw.lwga.gpa.conv2 =
                conv_from(store, p + ".gpa.conv2", {.in_ch = d, .out_ch = c4, .bias = true});

            bw.lwga.rla.conv = conv_from(store, p + ".rla.conv",
                                         {.in_ch = c4, .out_ch = c4, .kh = 3, .kw = 3,
                                          .padding = 1});
            bw.lwga.rla.bn = bn_from(store, p + ".rla.bn");
            bw.lwga.rla.act = config.act;

            bw.lwga.sma = SMAWeights(c4);
            bw.lwga.sma.alpha = store.at(p + ".sma.alpha").data;

            if (k <= 2) {
                bw.lwga.sga.conv5 = conv_from(store, p + ".sga.conv5",
                                              {.in_ch = c4, .out_ch = c4, .kh = 5, .kw = 5,
                                               .padding = 2, .groups = 4, .bias = true});
                bw.lwga.sga.conv7 = conv_from(store, p + ".sga.conv7",
                                              {.in_ch = c4, .out_ch = c4, .kh = 7, .kw = 7,
                                               .padding = 9, .dilation = 3, .groups = c4,
                                               .bias = true});
            } else {
                bw.lwga.sga.wq = square_from(store, p + ".sga.wq", c4);
                bw.lwga.sga.wk = square_from(store, p + ".sga.wk", c4);
                bw.lwga.sga.wv = square_from(store, p + ".sga.wv", c4);
                bw.lwga.sga.wo = square_from(store, p + ".sga.wo", c4);
            }
            bw.lwga.sga.heads = 4;
            bw.lwga.sga.bn = bn_from(store, p + ".sga.bn");

            bw.cmlp.up = conv_from(store, p + ".cmlp.up", {.in_ch = d, .out_ch = hidden});
            bw.cmlp.bn_mid = bn_from(store, p + ".cmlp.bn_mid");
            bw.cmlp.act = config.act;
            bw.cmlp.down = conv_from(store, p + ".cmlp.down", {.in_ch = hidden, .out_ch = d});
            bw.cmlp.bn_out = bn_from(store, p + ".cmlp.bn_out");

            m.stages[k - 1].push_back(std::move(bw));
        }
    }

    const WeightEntry& hw = store.at("head.weight");
    m.head.weight = Tensor(1, 1, config.num_classes, config.stages[3].channels, hw.data);
    m.head.bias = store.at("head.bias").data;
    return m;
}

} // namespace lwga
