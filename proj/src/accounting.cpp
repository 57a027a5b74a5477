#include "lwga/accounting.hpp"

#include <iomanip>
#include <sstream>

#include "lwga/errors.hpp"
#include "lwga/pathways.hpp"

namespace lwga {

std::int64_t CountReport::params_total() const {
    std::int64_t t = 0;
    for (const CountRow& r : rows) t += r.params;
    return t;
}

std::int64_t CountReport::macs_total() const {
    std::int64_t t = 0;
    for (const CountRow& r : rows) t += r.macs;
    return t;
}

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

struct Walker {
    std::vector<CountRow>& rows;

    void conv(const std::string& name, std::int64_t in_ch, std::int64_t out_ch, int kh, int kw,
              std::int64_t oh, std::int64_t ow, int groups = 1, bool bias = false) {
        const std::int64_t params = out_ch * (in_ch / groups) * kh * kw + (bias ? out_ch : 0);
        const std::int64_t macs = oh * ow * out_ch * (kh * kw * in_ch / groups);
        rows.push_back({name, "conv", params, macs});
    }
    void bn(const std::string& name, std::int64_t ch, std::int64_t h, std::int64_t w) {
        rows.push_back({name, "bn", 2 * ch, ch * h * w});
    }
    void mul(const std::string& name, std::int64_t ch, std::int64_t h, std::int64_t w) {
        rows.push_back({name, "mul", 0, ch * h * w});
    }
    void saliency(const std::string& name, std::int64_t ch, std::int64_t h, std::int64_t w) {
        rows.push_back({name, "saliency", 0, ch * h * w});
    }
    void resize(const std::string& name, std::int64_t ch, std::int64_t h, std::int64_t w) {
        rows.push_back({name, "resize", 0, 4 * ch * h * w});
    }
    void mhsa(const std::string& name, std::int64_t tokens, std::int64_t dim) {
        rows.push_back({name, "mhsa", 4 * dim * dim,
                        4 * tokens * dim * dim + 2 * tokens * tokens * dim});
    }
    void dirattn(const std::string& name, std::int64_t ch, std::int64_t gh, std::int64_t gw) {
        const std::int64_t taps = SMAWeights::directions * SMAWeights::window;
        rows.push_back({name, "dirattn", taps * ch, taps * ch * gh * gw});
    }
};

void walk_block(Walker& acc, const std::string& p, int d, int h, int w, int stage, int hidden,
                bool use_tgfi) {
    const int c4 = d / 4;

    acc.conv(p + ".gpa.conv1", c4, d, 1, 1, h, w);
    acc.bn(p + ".gpa.bn", d, h, w);
    acc.conv(p + ".gpa.conv2", d, c4, 1, 1, h, w, 1, true);
    acc.mul(p + ".gpa.gate", c4, h, w);

    acc.conv(p + ".rla.conv", c4, c4, 3, 3, h, w);
    acc.bn(p + ".rla.bn", c4, h, w);

    if (use_tgfi) {
        acc.saliency(p + ".sma.sample", c4, h, w);
        acc.dirattn(p + ".sma.attn", c4, ceil_div(h, 3), ceil_div(w, 3));
        acc.resize(p + ".sma.restore", c4, h, w);
    } else {
        acc.dirattn(p + ".sma.attn", c4, h, w);
    }
    acc.mul(p + ".sma.gate", c4, h, w);

    if (stage <= 2) {
        if (use_tgfi) {
            const int g2h = ceil_div(h, 2), g2w = ceil_div(w, 2);
            acc.saliency(p + ".sga.sample", c4, h, w);
            acc.conv(p + ".sga.conv5", c4, c4, 5, 5, g2h, g2w, 4, true);
            acc.conv(p + ".sga.conv7", c4, c4, 7, 7, g2h, g2w, c4, true);
            acc.mul(p + ".sga.gate", c4, g2h, g2w);
            acc.resize(p + ".sga.restore", c4, h, w);
        } else {
            acc.conv(p + ".sga.conv5", c4, c4, 5, 5, h, w, 4, true);
            acc.conv(p + ".sga.conv7", c4, c4, 7, 7, h, w, c4, true);
            acc.mul(p + ".sga.gate", c4, h, w);
        }
    } else if (stage == 3) {
        if (use_tgfi) {
            const int g2h = ceil_div(h, 2), g2w = ceil_div(w, 2);
            acc.saliency(p + ".sga.sample", c4, h, w);
            acc.mhsa(p + ".sga.attn", static_cast<std::int64_t>(g2h) * g2w, c4);
            acc.resize(p + ".sga.restore", c4, h, w);
        } else {
            acc.mhsa(p + ".sga.attn", static_cast<std::int64_t>(h) * w, c4);
        }
    } else {
        acc.mhsa(p + ".sga.attn", static_cast<std::int64_t>(h) * w, c4);
    }
    acc.bn(p + ".sga.bn", c4, h, w);

    acc.conv(p + ".cmlp.up", d, hidden, 1, 1, h, w);
    acc.bn(p + ".cmlp.bn_mid", hidden, h, w);
    acc.conv(p + ".cmlp.down", hidden, d, 1, 1, h, w);
    acc.bn(p + ".cmlp.bn_out", d, h, w);
}

CountReport walk_model(const ModelConfig& config, int input_h, int input_w) {
    CountReport rep;
    rep.variant = variant_name(config.variant);
    rep.input_h = input_h;
    rep.input_w = input_w;
    rep.tgfi = config.use_tgfi;
    Walker acc{rep.rows};

    const int c0 = config.stem_channels;
    int h = input_h / 4, w = input_w / 4;
    acc.conv("stem.conv", 3, c0, 4, 4, h, w);
    acc.bn("stem.bn", c0, h, w);

    for (int k = 1; k <= 4; ++k) {
        const int d = config.stages[k - 1].channels;
        const std::string sk = "stage" + std::to_string(k);
        if (k > 1) {
            const int prev = d / 2;
            h = (h - 1) / 2 + 1; // 3x3 stride-2 pad-1 output; equals ceil(h/2)
            w = (w - 1) / 2 + 1;
            acc.conv(sk + ".drfd.conv3", prev, d, 3, 3, h, w);
            acc.conv(sk + ".drfd.conv1", prev, d, 1, 1, h, w);
            acc.bn(sk + ".drfd.bn", d, h, w);
        }
        for (int b = 0; b < config.stages[k - 1].blocks; ++b)
            walk_block(acc, sk + ".block" + std::to_string(b), d, h, w, k,
                       config.cmlp_hidden(d), config.use_tgfi);
    }

    rep.rows.push_back({"head.linear", "linear",
                        static_cast<std::int64_t>(config.stages[3].channels) *
                                config.num_classes +
                            config.num_classes,
                        static_cast<std::int64_t>(config.stages[3].channels) *
                            config.num_classes});
    return rep;
}

int round_up32(int v) { return (v + 31) / 32 * 32; }

} // namespace

CountReport count_params(const ModelConfig& config) {
    CountReport rep = walk_model(config, 224, 224);
    for (CountRow& r : rep.rows) r.macs = 0;
    rep.input_h = 0;
    rep.input_w = 0;
    return rep;
}

CountReport count_macs(const ModelConfig& config, int input_h, int input_w) {
    if (input_h < 32 || input_w < 32)
        throw ShapeError("cost model needs at least 32x32 input, got " +
                         std::to_string(input_h) + "x" + std::to_string(input_w));
    return walk_model(config, round_up32(input_h), round_up32(input_w));
}

std::string CountReport::to_text() const {
    std::ostringstream os;
    os << "model " << variant;
    if (input_h > 0) os << "  input " << input_h << "x" << input_w;
    os << "  sparse sampling " << (tgfi ? "on" : "off") << "\n";
    os << std::left << std::setw(36) << "layer" << std::setw(10) << "kind" << std::right
       << std::setw(12) << "params" << std::setw(16) << "macs" << "\n";
    for (const CountRow& r : rows) {
        os << std::left << std::setw(36) << r.name << std::setw(10) << r.kind << std::right
           << std::setw(12) << r.params << std::setw(16) << r.macs << "\n";
    }
    os << std::left << std::setw(46) << "total" << std::right << std::setw(12) << params_total()
       << std::setw(16) << macs_total() << "\n";
    os << "flops at 2 per mac: " << 2 * macs_total() << "\n";
    os << "conventions: macs=multiply-accumulates; norm params=gamma+beta only; "
          "adds/activations/pool/gather free; resize 4 macs per output element\n";
    return os.str();
}

std::string CountReport::to_kv() const {
    std::ostringstream os;
    os << "variant=" << variant << "\n";
    os << "input_h=" << input_h << "\n";
    os << "input_w=" << input_w << "\n";
    os << "tgfi=" << (tgfi ? 1 : 0) << "\n";
    os << "rows=" << rows.size() << "\n";
    os << "params_total=" << params_total() << "\n";
    os << "macs_total=" << macs_total() << "\n";
    os << "flops_2x=" << 2 * macs_total() << "\n";
    return os.str();
}

} // namespace lwga
