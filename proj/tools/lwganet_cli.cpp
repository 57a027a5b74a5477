#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lwga/accounting.hpp"
#include "lwga/backbone.hpp"
#include "lwga/config.hpp"
#include "lwga/errors.hpp"
#include "lwga/ppm.hpp"
#include "lwga/selftest.hpp"
#include "lwga/tensor.hpp"
#include "lwga/weights_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSelftest = 3;

struct PublishedCosts {
    double params;
    double macs;
};

// Reference totals for the three variants at 224x224, used by describe to
// print how far the constructed model lands from them.
PublishedCosts reference_costs(lwga::Variant v) {
    switch (v) {
    case lwga::Variant::L0: return {1.72e6, 0.186e9};
    case lwga::Variant::L1: return {5.90e6, 0.709e9};
    case lwga::Variant::L2: return {13.0e6, 1.87e9};
    }
    return {0, 0};
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("LWGA_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

lwga::Variant parse_variant_or_throw(const std::string& s) {
    lwga::Variant v;
    if (!lwga::parse_variant(s, v))
        throw CLI::ValidationError("--variant", "unknown variant '" + s + "' (use L0, L1 or L2)");
    return v;
}

// Full float precision so a rerun prints byte-identical output.
std::string fmt_float(float v) {
    std::ostringstream os;
    os << std::setprecision(9) << v;
    return os.str();
}

int cmd_describe(const std::string& variant_str, int res, bool no_tgfi, const std::string& format) {
    lwga::ModelConfig cfg = lwga::ModelConfig::make(parse_variant_or_throw(variant_str));
    cfg.use_tgfi = !no_tgfi;
    const lwga::CountReport params = lwga::count_params(cfg);
    const lwga::CountReport macs = lwga::count_macs(cfg, res, res);
    const PublishedCosts ref = reference_costs(cfg.variant);

    std::ostringstream blocks;
    blocks << "[";
    for (int k = 0; k < 4; ++k) blocks << (k ? ", " : "") << cfg.stages[k].blocks;
    blocks << "]";

    if (format == "kv") {
        std::cout << macs.to_kv(); // carries params_total= and macs_total=
        std::cout << "blocks=" << blocks.str() << "\n";
        std::cout << "params_reference=" << static_cast<long long>(ref.params) << "\n";
        std::cout << "macs_reference=" << static_cast<long long>(ref.macs) << "\n";
        return kExitOk;
    }

    std::cout << "variant " << lwga::variant_name(cfg.variant) << "\n";
    std::cout << "stem channels " << cfg.stem_channels << ", classes " << cfg.num_classes
              << ", blocks " << blocks.str() << ", mlp ratio " << cfg.cmlp_ratio << "\n";
    std::cout << "stage  channels  blocks  map@" << res << "\n";
    int s = res / 4;
    for (int k = 0; k < 4; ++k) {
        std::cout << "  " << (k + 1) << "     " << std::setw(5) << cfg.stages[k].channels
                  << "   " << std::setw(5) << cfg.stages[k].blocks << "   " << s << "x" << s
                  << "\n";
        s = (s + 1) / 2;
    }
    std::cout << "\n" << macs.to_text() << "\n";

    const double dp = (params.params_total() - ref.params) / ref.params * 100.0;
    const double dm = (macs.macs_total() - ref.macs) / ref.macs * 100.0;
    std::cout << "params_total=" << params.params_total() << "\n";
    std::cout << "macs_total=" << macs.macs_total() << "\n";
    std::cout << "params_reference=" << static_cast<long long>(ref.params) << " (delta "
              << std::showpos << std::fixed << std::setprecision(2) << dp << "%)\n"
              << std::noshowpos;
    std::cout << "macs_reference=" << static_cast<long long>(ref.macs) << " (delta "
              << std::showpos << std::fixed << std::setprecision(2) << dm << "%)\n"
              << std::noshowpos;
    return kExitOk;
}

// Input file is either a weight container holding a tensor named "image"
// (1x3xHxW) or a binary P6 image; sniffed by magic.
lwga::Tensor load_input(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw lwga::IoError(lwga::IoErrc::unreadable, "cannot open '" + path + "'");
    char magic[4] = {};
    probe.read(magic, 4);
    probe.close();
    if (std::string(magic, magic + 4) == "LWGA") {
        lwga::WeightStore store = lwga::load(path);
        const lwga::WeightEntry& e = store.at("image");
        if (e.dims.size() != 4 || e.dims[0] != 1 || e.dims[1] != 3)
            throw lwga::IoError(lwga::IoErrc::malformed,
                                "input tensor 'image' must be 1x3xHxW");
        return lwga::Tensor(1, 3, static_cast<int>(e.dims[2]), static_cast<int>(e.dims[3]),
                            e.data);
    }
    return lwga::read_ppm(path);
}

int cmd_infer(const std::string& variant_str, const std::string& weights_path,
              const std::string& input_path, int classes, int topk, int threads, bool no_tgfi) {
    lwga::ModelConfig cfg = lwga::ModelConfig::make(parse_variant_or_throw(variant_str), classes);
    cfg.use_tgfi = !no_tgfi;
    lwga::set_num_threads(resolve_threads(threads));

    const lwga::WeightStore store = lwga::load(weights_path);
    const lwga::LwgaNet model = lwga::build_model(cfg, store);
    const lwga::Tensor img = load_input(input_path);
    const std::vector<float> logits = lwga::classify(img, model);

    std::cout << "variant=" << lwga::variant_name(cfg.variant) << "\n";
    std::cout << "classes=" << logits.size() << "\n";
    for (std::size_t i = 0; i < logits.size(); ++i)
        std::cout << "logit_" << i << "=" << fmt_float(logits[i]) << "\n";

    std::vector<int> order(logits.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return logits[a] > logits[b]; });
    const int k = std::min<std::size_t>(topk, order.size());
    for (int i = 0; i < k; ++i)
        std::cout << "top" << i << "=" << order[i] << ":" << fmt_float(logits[order[i]]) << "\n";
    return kExitOk;
}

int cmd_bench(const std::string& variant_str, int res, int iters, int threads, bool no_tgfi,
              std::uint64_t seed) {
    lwga::ModelConfig cfg = lwga::ModelConfig::make(parse_variant_or_throw(variant_str), 10);
    cfg.use_tgfi = !no_tgfi;
    lwga::set_num_threads(resolve_threads(threads));

    const lwga::WeightStore store = lwga::init_seeded(cfg, seed);
    const lwga::LwgaNet model = lwga::build_model(cfg, store);

    lwga::Tensor img(1, 3, res, res);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    for (float& v : img.values()) v = dist(rng);

    (void)lwga::classify(img, model); // warmup
    std::vector<double> ms(iters);
    for (int i = 0; i < iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        volatile float sink = lwga::classify(img, model)[0];
        (void)sink;
        const auto t1 = std::chrono::steady_clock::now();
        ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    std::vector<double> sorted = ms;
    std::sort(sorted.begin(), sorted.end());
    const double mean = std::accumulate(ms.begin(), ms.end(), 0.0) / iters;
    const double median = sorted[iters / 2];

    const lwga::CountReport macs = lwga::count_macs(cfg, res, res);
    std::cout << "variant=" << lwga::variant_name(cfg.variant) << "\n";
    std::cout << "resolution=" << res << "\n";
    std::cout << "iterations=" << iters << "\n";
    std::cout << "threads=" << lwga::num_threads() << "\n";
    std::cout << "tgfi=" << (cfg.use_tgfi ? 1 : 0) << "\n";
    std::cout << std::fixed << std::setprecision(3);
    std::cout << "latency_mean_ms=" << mean << "\n";
    std::cout << "latency_median_ms=" << median << "\n";
    std::cout << "images_per_s=" << (mean > 0 ? 1000.0 / mean : 0.0) << "\n";
    std::cout << "macs_total=" << macs.macs_total() << "\n";
    std::cout << "gmacs=" << std::setprecision(4) << macs.macs_total() / 1e9 << "\n";
    return kExitOk;
}

int cmd_selftest(bool inject_fault, std::uint64_t seed) {
    lwga::SelftestOptions opts;
    opts.inject_fault = inject_fault;
    opts.seed = seed;
    const std::vector<lwga::SuiteResult> results = lwga::run_selftest(opts);
    for (const lwga::SuiteResult& r : results)
        std::cout << "suite " << r.name << ": " << (r.passed ? "ok" : "FAIL") << " — " << r.detail
                  << "\n";
    if (!lwga::all_passed(results)) {
        std::cout << "selftest: FAILED\n";
        return kExitSelftest;
    }
    std::cout << "selftest: all suites passed\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LWGANet inference, cost accounting and self checks"};
    app.require_subcommand(1);

    std::string variant, weights_path, input_path, format = "text";
    int res = 224, iters = 5, threads = 0, classes = 1000, topk = 5;
    bool no_tgfi = false, inject_fault = false;
    std::uint64_t seed = 0;

    CLI::App* describe = app.add_subcommand("describe", "print the architecture and cost tables");
    describe->add_option("--variant", variant, "L0, L1 or L2")->required();
    describe->add_option("--res", res, "input resolution (default 224)");
    describe->add_flag("--no-tgfi", no_tgfi, "cost the dense interaction variants");
    describe->add_option("--format", format, "text or kv")
        ->check(CLI::IsMember({"text", "kv"}));

    CLI::App* infer = app.add_subcommand("infer", "classify one image");
    infer->add_option("--variant", variant, "L0, L1 or L2")->required();
    infer->add_option("--weights", weights_path, "weight container path")->required();
    infer->add_option("--input", input_path, "P6 image or tensor container with an 'image' entry")
        ->required();
    infer->add_option("--classes", classes, "head width (default 1000)");
    infer->add_option("--topk", topk, "how many top logits to list");
    infer->add_option("--threads", threads, "worker threads (0 = LWGA_THREADS or all cores)");
    infer->add_flag("--no-tgfi", no_tgfi, "run the dense interaction variants");

    CLI::App* bench = app.add_subcommand("bench", "time the forward pass and report costs");
    bench->add_option("--variant", variant, "L0, L1 or L2")->required();
    bench->add_option("--res", res, "input resolution (default 224)");
    bench->add_option("--iters", iters, "timed iterations (default 5)");
    bench->add_option("--threads", threads, "worker threads (0 = LWGA_THREADS or all cores)");
    bench->add_option("--seed", seed, "weight init seed");
    bench->add_flag("--no-tgfi", no_tgfi, "run and cost the dense interaction variants");

    CLI::App* selftest = app.add_subcommand("selftest", "run the built-in oracle suites");
    selftest->add_flag("--inject-fault", inject_fault, "deliberately corrupt one kernel output");
    selftest->add_option("--seed", seed, "suite RNG seed (default 42)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (describe->parsed()) return cmd_describe(variant, res, no_tgfi, format);
        if (infer->parsed())
            return cmd_infer(variant, weights_path, input_path, classes, topk, threads, no_tgfi);
        if (bench->parsed()) return cmd_bench(variant, res, iters, threads, no_tgfi, seed);
        if (selftest->parsed())
            return cmd_selftest(inject_fault, selftest->count("--seed") ? seed : 42);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const lwga::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const lwga::ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
