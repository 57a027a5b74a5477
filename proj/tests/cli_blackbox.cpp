#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "lwga/backbone.hpp"
#include "lwga/config.hpp"
#include "lwga/ppm.hpp"
#include "lwga/tensor.hpp"
#include "lwga/weights_io.hpp"

// LWGA_CLI_PATH is injected by the build; every test here drives the real
// binary through its public command line, nothing else.

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string out; // stdout and stderr merged
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(LWGA_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

// first "key=value" line wins
std::string kv_lookup(const std::string& out, const std::string& key) {
    const std::string needle = key + "=";
    std::size_t pos = 0;
    while (pos < out.size()) {
        std::size_t eol = out.find('\n', pos);
        if (eol == std::string::npos) eol = out.size();
        const std::string line = out.substr(pos, eol - pos);
        if (line.rfind(needle, 0) == 0) return line.substr(needle.size());
        pos = eol + 1;
    }
    return {};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("lwga_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

TempDir& tmp() {
    static TempDir dir;
    return dir;
}

// weights for the small variant with an 8-class head, built once
const std::string& small_weights() {
    static std::string path = [] {
        lwga::ModelConfig cfg = lwga::ModelConfig::make(lwga::Variant::L0, 8);
        std::string p = tmp().file("l0_c8_seed1.lwga");
        lwga::save(lwga::init_seeded(cfg, 1), p);
        return p;
    }();
    return path;
}

const std::string& zero_image_64() {
    static std::string path = [] {
        std::string p = tmp().file("zero64.ppm");
        lwga::write_ppm(p, lwga::Tensor(1, 3, 64, 64));
        return p;
    }();
    return path;
}

} // namespace

TEST_CASE("describe reports parameter totals near the published value") {
    RunResult r = run_cli("describe --variant L0 --format kv");
    CHECK(r.exit_code == 0);
    const std::string total = kv_lookup(r.out, "params_total");
    REQUIRE(!total.empty());
    const double v = std::stod(total);
    CHECK(std::fabs(v - 1.72e6) / 1.72e6 <= 0.03);
}

TEST_CASE("describe prints the block schedule of the large variant") {
    RunResult text = run_cli("describe --variant L2");
    CHECK(text.exit_code == 0);
    CHECK(text.out.find("[1, 4, 4, 2]") != std::string::npos);
    RunResult kv = run_cli("describe --variant L2 --format kv");
    CHECK(kv_lookup(kv.out, "blocks") == "[1, 4, 4, 2]");
}

TEST_CASE("describe rejects an unknown variant") {
    RunResult r = run_cli("describe --variant L9");
    CHECK(r.exit_code != 0);
    CHECK(r.out.find("L9") != std::string::npos);
}

TEST_CASE("describe kv output is parseable and self-consistent") {
    RunResult r = run_cli("describe --variant L1 --format kv");
    CHECK(r.exit_code == 0);
    CHECK(kv_lookup(r.out, "variant") == "L1");
    CHECK(kv_lookup(r.out, "input_h") == "224");
    CHECK(kv_lookup(r.out, "tgfi") == "1");
    CHECK(!kv_lookup(r.out, "macs_total").empty());
    CHECK(!kv_lookup(r.out, "params_reference").empty());
}

TEST_CASE("infer is byte-deterministic across process runs") {
    const std::string args = "infer --variant L0 --weights " + small_weights() + " --input " +
                             zero_image_64() + " --classes 8 --threads 1";
    RunResult a = run_cli(args);
    RunResult b = run_cli(args);
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(kv_lookup(a.out, "classes") == "8");
    CHECK(!kv_lookup(a.out, "logit_0").empty());
    CHECK(!kv_lookup(a.out, "top0").empty());
}

TEST_CASE("cli logits equal the library's logits exactly") {
    // 224x224 random image, written as PPM so both sides read identical bytes
    const std::string img_path = tmp().file("rand224.ppm");
    {
        lwga::Tensor img(1, 3, 224, 224);
        std::mt19937_64 rng(31337);
        std::uniform_real_distribution<float> dist(0.0f, 1.0f);
        for (float& v : img.values()) v = dist(rng);
        lwga::write_ppm(img_path, img);
    }
    const std::string weights_path = tmp().file("l0_c10_seed0.lwga");
    lwga::ModelConfig cfg = lwga::ModelConfig::make(lwga::Variant::L0, 10);
    lwga::save(lwga::init_seeded(cfg, 0), weights_path);

    RunResult r = run_cli("infer --variant L0 --weights " + weights_path + " --input " +
                          img_path + " --classes 10 --topk 3");
    REQUIRE(r.exit_code == 0);

    const lwga::LwgaNet model = lwga::build_model(cfg, lwga::load(weights_path));
    const std::vector<float> logits = lwga::classify(lwga::read_ppm(img_path), model);
    REQUIRE(logits.size() == 10);
    for (int i = 0; i < 10; ++i) {
        const std::string printed = kv_lookup(r.out, "logit_" + std::to_string(i));
        REQUIRE(!printed.empty());
        CHECK(std::stof(printed) == logits[i]);
    }
}

TEST_CASE("weights for one variant are rejected under another") {
    RunResult r = run_cli("infer --variant L1 --weights " + small_weights() + " --input " +
                          zero_image_64() + " --classes 8");
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("manifest mismatch") != std::string::npos);
}

TEST_CASE("unreadable input path is a data error") {
    RunResult r = run_cli("infer --variant L0 --weights " + small_weights() +
                          " --input /nonexistent.ppm --classes 8");
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("error") != std::string::npos);
}

TEST_CASE("missing required flags are a usage error") {
    RunResult r = run_cli("infer --variant L0");
    CHECK(r.exit_code == 1);
}

TEST_CASE("bench reports costs in the published window") {
    RunResult r = run_cli("bench --variant L0 --res 224 --iters 1");
    CHECK(r.exit_code == 0);
    const std::string macs = kv_lookup(r.out, "macs_total");
    REQUIRE(!macs.empty());
    const double v = std::stod(macs);
    CHECK(std::fabs(v - 0.186e9) / 0.186e9 <= 0.05);
    CHECK(!kv_lookup(r.out, "latency_mean_ms").empty());
    CHECK(!kv_lookup(r.out, "latency_median_ms").empty());
    CHECK(!kv_lookup(r.out, "images_per_s").empty());
    CHECK(kv_lookup(r.out, "iterations") == "1");
}

TEST_CASE("disabling sparse sampling strictly raises the mac count") {
    RunResult sparse = run_cli("bench --variant L0 --res 64 --iters 1");
    RunResult dense = run_cli("bench --variant L0 --res 64 --iters 1 --no-tgfi");
    CHECK(sparse.exit_code == 0);
    CHECK(dense.exit_code == 0);
    CHECK(kv_lookup(sparse.out, "tgfi") == "1");
    CHECK(kv_lookup(dense.out, "tgfi") == "0");
    const long long with = std::stoll(kv_lookup(sparse.out, "macs_total"));
    const long long without = std::stoll(kv_lookup(dense.out, "macs_total"));
    CHECK(without > with);
}

TEST_CASE("selftest passes on a fresh build, fails with an injected fault") {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult ok = run_cli("selftest");
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(ok.exit_code == 0);
    CHECK(ok.out.find("all suites passed") != std::string::npos);
    CHECK(secs < 60.0);

    RunResult bad = run_cli("selftest --inject-fault");
    CHECK(bad.exit_code == 3);
    CHECK(bad.out.find("FAIL") != std::string::npos);
}
