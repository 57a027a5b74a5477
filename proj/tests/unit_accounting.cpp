#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>

#include "lwga/accounting.hpp"
#include "lwga/backbone.hpp"
#include "lwga/errors.hpp"
#include "lwga/weights_io.hpp"

using namespace lwga;

namespace {

const CountRow& row(const CountReport& r, const std::string& name) {
    for (const CountRow& row : r.rows)
        if (row.name == name) return row;
    FAIL("no row named " << name);
    static CountRow dummy;
    return dummy;
}

double rel_err(std::int64_t got, double want) {
    return std::fabs(static_cast<double>(got) - want) / want;
}

} // namespace

TEST_CASE("closed-form conv rows") {
    CountReport p = count_params(ModelConfig::make(Variant::L0, 1000));

    // stem: 32 x 3 x 4 x 4, no bias
    CHECK(row(p, "stem.conv").params == 32 * 3 * 4 * 4);
    // normalization: gamma and beta only
    CHECK(row(p, "stem.bn").params == 2 * 32);
    // gate bottleneck projection back down, with bias: C=32, C/4=8
    CHECK(row(p, "stage1.block0.gpa.conv2").params == 32 * 8 + 8);
    // a biased grouped conv: 5x5, groups 4, c4=8
    CHECK(row(p, "stage1.block0.sga.conv5").params == 8 * (8 / 4) * 25 + 8);
    // directional attention: 4 directions x 11 taps x 8 channels
    CHECK(row(p, "stage1.block0.sma.attn").params == 44 * 8);
    // params reports are resolution-free
    CHECK(p.input_h == 0);
    for (const CountRow& r : p.rows) CHECK(r.macs == 0);
}

TEST_CASE("closed-form mac rows at 224") {
    CountReport m = count_macs(ModelConfig::make(Variant::L0, 1000), 224, 224);
    // stem conv: 56x56 output, 3x4x4 window per output element
    CHECK(row(m, "stem.conv").macs == 56LL * 56 * 32 * (3 * 4 * 4));
    // 1x1 convs cost out_elems * in_ch: stage 3 runs at 14x14, C=128 -> c4=32
    CHECK(row(m, "stage3.block0.gpa.conv1").macs == 14LL * 14 * 128 * 32);
    // elementwise gate: 1 mac per element
    CHECK(row(m, "stage1.block0.gpa.gate").macs == 56LL * 56 * 8);
}

TEST_CASE("parameter totals hit the published windows") {
    const std::int64_t l0 = count_params(ModelConfig::make(Variant::L0, 1000)).params_total();
    const std::int64_t l1 = count_params(ModelConfig::make(Variant::L1, 1000)).params_total();
    const std::int64_t l2 = count_params(ModelConfig::make(Variant::L2, 1000)).params_total();

    // exact regression pins first (any drift is a real change)
    CHECK(l0 == 1706824);
    CHECK(l1 == 5843624);
    CHECK(l2 == 13062520);

    CHECK(rel_err(l0, 1.72e6) <= 0.03);
    CHECK(rel_err(l1, 5.90e6) <= 0.03);
    CHECK(rel_err(l2, 13.0e6) <= 0.03);
}

TEST_CASE("mac totals at 224 hit the published windows") {
    const std::int64_t l0 = count_macs(ModelConfig::make(Variant::L0, 1000), 224, 224)
                                .macs_total();
    const std::int64_t l1 = count_macs(ModelConfig::make(Variant::L1, 1000), 224, 224)
                                .macs_total();
    const std::int64_t l2 = count_macs(ModelConfig::make(Variant::L2, 1000), 224, 224)
                                .macs_total();

    CHECK(l0 == 193290848);
    CHECK(l1 == 695377344);
    CHECK(l2 == 1793795232);

    CHECK(rel_err(l0, 0.186e9) <= 0.05);
    CHECK(rel_err(l1, 0.709e9) <= 0.05);
    CHECK(rel_err(l2, 1.87e9) <= 0.05);
}

TEST_CASE("sparse sampling saves macs in the published proportion") {
    ModelConfig sparse = ModelConfig::make(Variant::L0, 1000);
    ModelConfig dense = sparse;
    dense.use_tgfi = false;

    const std::int64_t with = count_macs(sparse, 224, 224).macs_total();
    const std::int64_t without = count_macs(dense, 224, 224).macs_total();
    CHECK(without == 211967360);
    CHECK(with < without);

    const double ratio = static_cast<double>(with) / static_cast<double>(without);
    CHECK(ratio >= 0.895 - 0.05);
    CHECK(ratio <= 0.895 + 0.05);
}

TEST_CASE("sampling never increases cost, any variant or resolution") {
    for (Variant v : {Variant::L0, Variant::L1, Variant::L2})
        for (int res : {224, 256, 320}) {
            ModelConfig sparse = ModelConfig::make(v, 1000);
            ModelConfig dense = sparse;
            dense.use_tgfi = false;
            CHECK(count_macs(sparse, res, res).macs_total() <=
                  count_macs(dense, res, res).macs_total());
        }
}

TEST_CASE("parameter count is independent of resolution") {
    ModelConfig cfg = ModelConfig::make(Variant::L1, 1000);
    CountReport a = count_macs(cfg, 224, 224);
    CountReport b = count_macs(cfg, 512, 512);
    CHECK(a.params_total() == b.params_total());
    CHECK(a.params_total() == count_params(cfg).params_total());
    // macs do scale
    CHECK(b.macs_total() > a.macs_total());
}

TEST_CASE("totals equal the sum of rows") {
    CountReport r = count_macs(ModelConfig::make(Variant::L2, 1000), 224, 224);
    std::int64_t p = 0, m = 0;
    for (const CountRow& row : r.rows) {
        p += row.params;
        m += row.macs;
    }
    CHECK(p == r.params_total());
    CHECK(m == r.macs_total());
}

TEST_CASE("parameter total equals manifest elements minus running stats") {
    for (Variant v : {Variant::L0, Variant::L1, Variant::L2}) {
        ModelConfig cfg = ModelConfig::make(v, 1000);
        std::int64_t manifest_elems = 0;
        std::int64_t running = 0;
        for (const TensorShape& ts : weight_manifest(cfg)) {
            manifest_elems += static_cast<std::int64_t>(ts.elements());
            if (ts.name.ends_with(".mean") || ts.name.ends_with(".var"))
                running += static_cast<std::int64_t>(ts.elements());
        }
        CHECK(manifest_elems - running == count_params(cfg).params_total());
    }
}

TEST_CASE("sub-32 input rejected, padding rounds up") {
    ModelConfig cfg = ModelConfig::make(Variant::L0, 1000);
    CHECK_THROWS_AS(count_macs(cfg, 16, 224), ShapeError);
    // 200 pads to 224, so the counts coincide
    CHECK(count_macs(cfg, 200, 200).macs_total() == count_macs(cfg, 224, 224).macs_total());
}

TEST_CASE("report formats carry the essentials") {
    CountReport r = count_macs(ModelConfig::make(Variant::L0, 1000), 224, 224);
    std::string text = r.to_text();
    CHECK(text.find("L0") != std::string::npos);
    CHECK(text.find("224") != std::string::npos);
    CHECK(text.find("total") != std::string::npos);
    CHECK(text.find("stem.conv") != std::string::npos);

    std::string kv = r.to_kv();
    CHECK(kv.find("variant=L0") != std::string::npos);
    CHECK(kv.find("params_total=" + std::to_string(r.params_total())) != std::string::npos);
    CHECK(kv.find("macs_total=" + std::to_string(r.macs_total())) != std::string::npos);
    CHECK(kv.find("flops_2x=" + std::to_string(2 * r.macs_total())) != std::string::npos);
}
