#include "lwga/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "lwga/backbone.hpp"
#include "lwga/config.hpp"
#include "lwga/pathways.hpp"
#include "lwga/reference.hpp"
#include "lwga/tensor.hpp"
#include "lwga/tgfi.hpp"
#include "lwga/weights_io.hpp"

namespace lwga {

namespace {

void fill_uniform(std::vector<float>& v, std::mt19937_64& rng, float lo, float hi) {
    std::uniform_real_distribution<float> dist(lo, hi);
    for (float& x : v) x = dist(rng);
}

Tensor random_tensor(std::mt19937_64& rng, int n, int c, int h, int w, float lo = -1.0f,
                     float hi = 1.0f) {
    Tensor t(n, c, h, w);
    fill_uniform(t.values(), rng, lo, hi);
    return t;
}

// Values on a 1/16 grid: channel sums are exact in both f32 and f64, so the
// argmax oracle comparison is immune to accumulation-order noise.
Tensor random_quantized(std::mt19937_64& rng, int n, int c, int h, int w) {
    Tensor t(n, c, h, w);
    std::uniform_int_distribution<int> dist(-80, 80);
    for (float& x : t.values()) x = static_cast<float>(dist(rng)) / 16.0f;
    return t;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
    float m = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
    return m;
}

bool value_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_dims(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.data()[i] != b.data()[i]) return false;
    return true;
}

std::string fmt(float v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

SuiteResult conv_suite(const SelftestOptions& opts) {
    SuiteResult res{"conv-vs-oracle", true, ""};
    struct Case {
        int n, in_ch, out_ch, kh, kw, stride, pad, dil, groups, h, w;
        bool bias;
    };
    std::vector<Case> cases;
    for (int k : {1, 3})
        for (int s : {1, 2})
            for (int p : {0, 1})
                for (int g : {1, 2})
                    cases.push_back({2, 4, 4, k, k, s, p, 1, g, 9, 10, g == 1});
    cases.push_back({1, 4, 8, 5, 5, 1, 2, 1, 1, 12, 12, true});
    cases.push_back({2, 8, 4, 5, 5, 2, 2, 1, 4, 11, 12, false});
    cases.push_back({1, 6, 6, 3, 3, 1, 2, 2, 1, 10, 10, true});
    cases.push_back({1, 4, 4, 3, 3, 1, 0, 2, 2, 12, 12, false});
    cases.push_back({2, 8, 8, 3, 3, 1, 1, 1, 8, 8, 9, true});
    cases.push_back({1, 8, 8, 5, 5, 1, 2, 1, 8, 12, 11, false});
    cases.push_back({1, 3, 5, 3, 1, 1, 1, 1, 1, 8, 8, true});
    cases.push_back({1, 4, 4, 1, 7, 1, 9, 3, 4, 10, 12, true});
    cases.push_back({2, 5, 10, 4, 4, 4, 0, 1, 1, 12, 12, false});
    cases.push_back({1, 2, 6, 3, 3, 2, 1, 1, 2, 12, 12, true});

    std::mt19937_64 rng(opts.seed);
    float worst = 0.0f;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const Case& c = cases[i];
        ConvSpec spec{c.in_ch, c.out_ch, c.kh, c.kw, c.stride, c.pad, c.dil, c.groups, c.bias};
        Tensor x = random_tensor(rng, c.n, c.in_ch, c.h, c.w);
        Tensor w = random_tensor(rng, c.out_ch, c.in_ch / c.groups, c.kh, c.kw, -0.2f, 0.2f);
        std::vector<float> bias;
        if (c.bias) {
            bias.resize(c.out_ch);
            fill_uniform(bias, rng, -0.2f, 0.2f);
        }
        Tensor got = conv2d(x, w, bias, spec);
        if (opts.inject_fault && i == 0) got.data()[0] += 1.0f;
        Tensor want = ref::conv2d(x, w, bias, spec);
        const float dev = max_abs_diff(got, want);
        worst = std::max(worst, dev);
        if (dev > 1e-5f) {
            res.passed = false;
            res.detail = "case " + std::to_string(i) + ": max |conv - oracle| = " + fmt(dev) +
                         " (tol 1e-5)";
            return res;
        }
    }
    res.detail = std::to_string(cases.size()) + " specs, max dev " + fmt(worst);
    return res;
}

SuiteResult attention_suite(const SelftestOptions& opts) {
    SuiteResult res{"attention-vs-oracle", true, ""};
    struct Case {
        int n, t, d, heads;
    };
    const Case cases[] = {{1, 1, 8, 1}, {1, 4, 8, 2},  {2, 9, 12, 4},
                          {1, 16, 16, 4}, {1, 7, 8, 4}, {2, 25, 8, 2}};
    std::mt19937_64 rng(opts.seed + 1);
    float worst = 0.0f;
    int i = 0;
    for (const Case& c : cases) {
        Tensor tokens = random_tensor(rng, c.n, 1, c.t, c.d);
        Tensor wq = random_tensor(rng, 1, 1, c.d, c.d, -0.3f, 0.3f);
        Tensor wk = random_tensor(rng, 1, 1, c.d, c.d, -0.3f, 0.3f);
        Tensor wv = random_tensor(rng, 1, 1, c.d, c.d, -0.3f, 0.3f);
        Tensor wo = random_tensor(rng, 1, 1, c.d, c.d, -0.3f, 0.3f);
        Tensor got = mhsa(tokens, c.heads, wq, wk, wv, wo);
        Tensor want = ref::attention(tokens, c.heads, wq, wk, wv, wo);
        const float dev = max_abs_diff(got, want);
        worst = std::max(worst, dev);
        if (dev > 1e-5f) {
            res.passed = false;
            res.detail = "case " + std::to_string(i) + ": max |mhsa - oracle| = " + fmt(dev);
            return res;
        }
        ++i;
    }
    res.detail = std::to_string(std::size(cases)) + " shapes, max dev " + fmt(worst);
    return res;
}

SuiteResult directional_suite(const SelftestOptions& opts) {
    SuiteResult res{"directional-attention-loop", true, ""};
    struct Case {
        int c, h, w;
    };
    const Case cases[] = {{1, 3, 3}, {2, 5, 7}, {3, 7, 5}, {4, 11, 11}, {2, 9, 11}, {1, 1, 13}};
    std::mt19937_64 rng(opts.seed + 2);
    float worst = 0.0f;
    for (const Case& c : cases) {
        SMAWeights w(c.c);
        fill_uniform(w.alpha, rng, -1.0f, 1.0f);
        Tensor x = random_tensor(rng, 1, c.c, c.h, c.w);
        const float dev = max_abs_diff(sma_attention(x, w), ref::sma_attention(x, w));
        worst = std::max(worst, dev);
        if (dev > 1e-5f) {
            res.passed = false;
            res.detail = "grid " + std::to_string(c.h) + "x" + std::to_string(c.w) +
                         ": max dev " + fmt(dev);
            return res;
        }
    }
    res.detail = std::to_string(std::size(cases)) + " grids, max dev " + fmt(worst);
    return res;
}

SuiteResult sampling_suite(const SelftestOptions& opts) {
    SuiteResult res{"sparse-sampling-roundtrip", true, ""};
    std::mt19937_64 rng(opts.seed + 3);
    std::uniform_int_distribution<int> dim(2, 8), chan(1, 4), region(2, 3);

    for (int iter = 0; iter < 200; ++iter) {
        const int h = dim(rng), w = dim(rng), c = chan(rng), r = region(rng);
        Tensor x = random_quantized(rng, 1, c, h, w);
        RegionGrid grid(r, r, h, w);
        SampledSet s = sample(x, grid);

        std::vector<Coord> want = ref::region_argmax(x, r, r);
        for (int gy = 0; gy < grid.gh; ++gy)
            for (int gx = 0; gx < grid.gw; ++gx) {
                const Coord& got = s.loc(0, gy, gx);
                const Coord& exp = want[static_cast<std::size_t>(gy) * grid.gw + gx];
                if (!(got == exp)) {
                    res.passed = false;
                    res.detail = "iter " + std::to_string(iter) + ": region (" +
                                 std::to_string(gy) + "," + std::to_string(gx) +
                                 ") picked (" + std::to_string(got.y) + "," +
                                 std::to_string(got.x) + "), oracle says (" +
                                 std::to_string(exp.y) + "," + std::to_string(exp.x) + ")";
                    return res;
                }
                // membership + channel-gather postcondition
                if (got.y < gy * r || got.y >= std::min((gy + 1) * r, h) || got.x < gx * r ||
                    got.x >= std::min((gx + 1) * r, w)) {
                    res.passed = false;
                    res.detail = "sampled coordinate escaped its region";
                    return res;
                }
                for (int ch = 0; ch < c; ++ch)
                    if (s.values.at(0, ch, gy, gx) != x.at(0, ch, got.y, got.x)) {
                        res.passed = false;
                        res.detail = "values does not hold the source feature";
                        return res;
                    }
            }

        // restore puts interacted values back exactly at every coordinate
        Tensor interacted = random_tensor(rng, 1, c, grid.gh, grid.gw);
        Tensor restored = restore(s, interacted);
        for (int gy = 0; gy < grid.gh; ++gy)
            for (int gx = 0; gx < grid.gw; ++gx) {
                const Coord& p = s.loc(0, gy, gx);
                for (int ch = 0; ch < c; ++ch)
                    if (restored.at(0, ch, p.y, p.x) != interacted.at(0, ch, gy, gx)) {
                        res.passed = false;
                        res.detail = "restore not exact at a preserved coordinate";
                        return res;
                    }
            }

        // argmax invariance under a uniform positive (power-of-two) scale
        Tensor scaled = x;
        for (float& v : scaled.values()) v *= 2.0f;
        SampledSet s2 = sample(scaled, grid);
        if (s2.p_loc != s.p_loc) {
            res.passed = false;
            res.detail = "scaling the map moved a sampled coordinate";
            return res;
        }
    }

    // all-ties: every region must pick its top-left pixel
    Tensor flat = Tensor::full(1, 3, 7, 7, 0.25f);
    RegionGrid g3(3, 3, 7, 7);
    SampledSet sf = sample(flat, g3);
    for (int gy = 0; gy < g3.gh; ++gy)
        for (int gx = 0; gx < g3.gw; ++gx) {
            const Coord& p = sf.loc(0, gy, gx);
            if (p.y != gy * 3 || p.x != gx * 3) {
                res.passed = false;
                res.detail = "constant map did not sample region top-left corners";
                return res;
            }
        }

    res.detail = "200 random maps + tie-break case";
    return res;
}

SuiteResult identity_suite(const SelftestOptions& opts) {
    SuiteResult res{"analytic-identities", true, ""};
    std::mt19937_64 rng(opts.seed + 4);
    const int c4 = 4, d = 16, h = 6, w = 6;

    // gate pathway with zero weights: sigmoid(0) = 0.5, so out = 1.5 * x
    {
        GPAWeights gw;
        gw.conv1 = {{c4, d}, Tensor(d, c4, 1, 1), {}};
        gw.bn = BNParams::identity(d);
        gw.act = Act::gelu;
        gw.conv2 = {{d, c4, 1, 1, 1, 0, 1, 1, true}, Tensor(c4, d, 1, 1),
                    std::vector<float>(c4, 0.0f)};
        Tensor x = random_tensor(rng, 1, c4, h, w);
        Tensor out = gpa_forward(x, gw);
        float dev = 0.0f;
        for (std::size_t i = 0; i < x.size(); ++i)
            dev = std::max(dev, std::fabs(out.data()[i] - 1.5f * x.data()[i]));
        if (dev > 1e-6f) {
            res.passed = false;
            res.detail = "zero-weight gate pathway is not 1.5x (dev " + fmt(dev) + ")";
            return res;
        }
    }

    // zero channel-MLP branch: block output must be the input, exactly
    {
        LwgaWeights lw;
        lw.gpa.conv1 = {{c4, d}, random_tensor(rng, d, c4, 1, 1, -0.1f, 0.1f), {}};
        lw.gpa.bn = BNParams::identity(d);
        lw.gpa.conv2 = {{d, c4, 1, 1, 1, 0, 1, 1, true},
                        random_tensor(rng, c4, d, 1, 1, -0.1f, 0.1f),
                        std::vector<float>(c4, 0.1f)};
        lw.rla.conv = {{c4, c4, 3, 3, 1, 1}, random_tensor(rng, c4, c4, 3, 3, -0.1f, 0.1f), {}};
        lw.rla.bn = BNParams::identity(c4);
        lw.sma = SMAWeights(c4);
        fill_uniform(lw.sma.alpha, rng, -0.5f, 0.5f);
        lw.sga.conv5 = {{c4, c4, 5, 5, 1, 2, 1, 4, true},
                        random_tensor(rng, c4, 1, 5, 5, -0.1f, 0.1f),
                        std::vector<float>(c4, 0.0f)};
        lw.sga.conv7 = {{c4, c4, 7, 7, 1, 9, 3, c4, true},
                        random_tensor(rng, c4, 1, 7, 7, -0.1f, 0.1f),
                        std::vector<float>(c4, 0.0f)};
        lw.sga.bn = BNParams::identity(c4);

        CMLPWeights cm;
        const int hidden = 2 * d;
        cm.up = {{d, hidden}, random_tensor(rng, hidden, d, 1, 1, -0.1f, 0.1f), {}};
        cm.bn_mid = BNParams::identity(hidden);
        cm.down = {{hidden, d}, Tensor(d, hidden, 1, 1), {}}; // zero
        cm.bn_out = BNParams::identity(d);

        Tensor x = random_tensor(rng, 1, d, h, w);
        Tensor out = cmlp_block_forward(x, lw, cm, 1);
        if (!value_equal(out, x)) {
            res.passed = false;
            res.detail = "zero channel-MLP branch is not the identity";
            return res;
        }
    }

    // zero conv proxy in the stage-1 global pathway: identity, exactly
    {
        SGAWeights sw;
        sw.conv5 = {{c4, c4, 5, 5, 1, 2, 1, 4, true}, Tensor(c4, 1, 5, 5),
                    std::vector<float>(c4, 0.0f)};
        sw.conv7 = {{c4, c4, 7, 7, 1, 9, 3, c4, true}, Tensor(c4, 1, 7, 7),
                    std::vector<float>(c4, 0.0f)};
        sw.bn = BNParams::identity(c4);
        Tensor x = random_tensor(rng, 1, c4, 7, 7); // odd dims: ragged regions too
        Tensor out = sga_forward(x, sw, 1);
        if (!value_equal(out, x)) {
            res.passed = false;
            res.detail = "zero-proxy global pathway is not the identity";
            return res;
        }
    }

    // residual skeleton: with every block branch zeroed, the backbone is
    // exactly the stem + downsampler chain
    {
        ModelConfig cfg = ModelConfig::make(Variant::L0, 8);
        WeightStore store;
        std::uniform_real_distribution<float> dist(-0.05f, 0.05f);
        for (const TensorShape& t : weight_manifest(cfg)) {
            std::vector<float> data(t.elements(), 0.0f);
            auto ends_with = [&](const char* sfx) {
                const std::string& n = t.name;
                const std::size_t m = std::string(sfx).size();
                return n.size() >= m && n.compare(n.size() - m, m, sfx) == 0;
            };
            if (ends_with(".gamma") || ends_with(".var"))
                std::fill(data.begin(), data.end(), 1.0f);
            else if (ends_with(".beta") || ends_with(".mean"))
                ; // zero
            else if (t.name.find(".block") == std::string::npos)
                for (float& v : data) v = dist(rng);
            store.add(t.name, t.dims, std::move(data));
        }
        LwgaNet model = build_model(cfg, store);
        Tensor img = random_tensor(rng, 1, 3, 64, 64);
        std::array<Tensor, 4> feats = backbone_forward(img, model);
        Tensor x = stem_forward(img, model.stem);
        for (int k = 0; k < 4; ++k) {
            if (k > 0) x = drfd_forward(x, *model.drfd[k]);
            if (!value_equal(feats[k], x)) {
                res.passed = false;
                res.detail = "stage " + std::to_string(k + 1) +
                             " output differs from the stem/downsampler chain";
                return res;
            }
        }
    }

    res.detail = "4 identities hold";
    return res;
}

} // namespace

std::vector<SuiteResult> run_selftest(const SelftestOptions& opts) {
    return {conv_suite(opts), attention_suite(opts), directional_suite(opts),
            sampling_suite(opts), identity_suite(opts)};
}

bool all_passed(const std::vector<SuiteResult>& results) {
    for (const SuiteResult& r : results)
        if (!r.passed) return false;
    return true;
}

} // namespace lwga
