#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "lwga/config.hpp"
#include "lwga/errors.hpp"
#include "lwga/weights_io.hpp"

using namespace lwga;

namespace {

namespace fs = std::filesystem;

// fresh path under the system temp dir; removed by the fixture
struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("lwga_io_test_" + tag + "_" + std::to_string(::getpid()) + ".bin");
        std::error_code ec;
        fs::remove(path, ec);
    }
    ~TempFile() {
        std::error_code ec;
        fs::remove(path, ec);
    }
    std::string str() const { return path.string(); }
};

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out.good());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

bool stores_bitwise_equal(const WeightStore& a, const WeightStore& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.entries().size(); ++i) {
        const WeightEntry& x = a.entries()[i];
        const WeightEntry& y = b.entries()[i];
        if (x.name != y.name || x.dims != y.dims || x.data.size() != y.data.size()) return false;
        if (std::memcmp(x.data.data(), y.data.data(), x.data.size() * sizeof(float)) != 0)
            return false;
    }
    return true;
}

WeightStore random_store(std::mt19937_64& rng, int tensors) {
    WeightStore store;
    std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
    for (int i = 0; i < tensors; ++i) {
        int rank = 1 + static_cast<int>(rng() % 4);
        std::vector<std::uint64_t> dims;
        std::uint64_t elems = 1;
        for (int r = 0; r < rank; ++r) {
            std::uint64_t d = 1 + rng() % 5;
            dims.push_back(d);
            elems *= d;
        }
        std::vector<float> data(elems);
        for (float& v : data) v = dist(rng);
        store.add("tensor_" + std::to_string(i), dims, std::move(data));
    }
    return store;
}

IoErrc load_error(const std::string& path) {
    try {
        load(path);
    } catch (const IoError& e) {
        return e.code();
    }
    FAIL("expected a load error for " << path);
    return IoErrc::malformed;
}

} // namespace

TEST_CASE("store add/at basics and duplicate rejection") {
    WeightStore s;
    s.add("a", {2, 3}, std::vector<float>(6, 1.0f));
    CHECK(s.contains("a"));
    CHECK(s.at("a").dims == std::vector<std::uint64_t>{2, 3});
    CHECK(s.total_elements() == 6);
    try {
        s.add("a", {1}, {0.0f});
        FAIL("duplicate accepted");
    } catch (const IoError& e) {
        CHECK(e.code() == IoErrc::duplicate_name);
    }
    try {
        s.at("missing");
        FAIL("missing lookup succeeded");
    } catch (const IoError& e) {
        CHECK(e.code() == IoErrc::manifest_mismatch);
    }
    // payload length must match dims
    CHECK_THROWS_AS(s.add("b", {2, 2}, std::vector<float>(3, 0.0f)), IoError);
    // rank bounds
    CHECK_THROWS_AS(s.add("c", {}, {}), IoError);
    CHECK_THROWS_AS(s.add("d", {1, 1, 1, 1, 1}, std::vector<float>(1, 0.0f)), IoError);
}

TEST_CASE("iteration order is insertion order") {
    WeightStore s;
    for (const char* name : {"zeta", "alpha", "mid"})
        s.add(name, {1}, std::vector<float>(1, 0.0f));
    REQUIRE(s.size() == 3);
    CHECK(s.entries()[0].name == "zeta");
    CHECK(s.entries()[1].name == "alpha");
    CHECK(s.entries()[2].name == "mid");
}

TEST_CASE("seeded init is reproducible, seeds distinguish stores") {
    ModelConfig cfg = ModelConfig::make(Variant::L0, 10);
    WeightStore a = init_seeded(cfg, 1234);
    WeightStore b = init_seeded(cfg, 1234);
    CHECK(stores_bitwise_equal(a, b));
    CHECK(a.content_hash() == b.content_hash());

    WeightStore c = init_seeded(cfg, 1235);
    CHECK(!stores_bitwise_equal(a, c));
    CHECK(a.content_hash() != c.content_hash());
}

TEST_CASE("seeded init respects value and statistic conventions") {
    ModelConfig cfg = ModelConfig::make(Variant::L0, 4);
    WeightStore s = init_seeded(cfg, 7);
    bool saw_weight = false;
    for (const WeightEntry& e : s.entries()) {
        if (e.name.ends_with(".gamma") || e.name.ends_with(".var")) {
            for (float v : e.data) CHECK(v == 1.0f);
        } else if (e.name.ends_with(".beta") || e.name.ends_with(".mean")) {
            for (float v : e.data) CHECK(v == 0.0f);
        } else {
            saw_weight = true;
            for (float v : e.data) {
                CHECK(v >= -0.05f);
                CHECK(v <= 0.05f);
            }
        }
    }
    CHECK(saw_weight);
}

TEST_CASE("golden hash for the small variant at seed zero") {
    // pinned when the generator was first run; guards the PRNG stream
    // derivation, the manifest order, and the value mapping all at once
    ModelConfig cfg = ModelConfig::make(Variant::L0, 1000);
    WeightStore s = init_seeded(cfg, 0);
    const std::uint64_t golden = 0x251b4260d9cac0f0ull;
    CHECK(s.content_hash() == golden);
}

TEST_CASE("save/load round-trip is bitwise") {
    std::mt19937_64 rng(77);
    WeightStore store = random_store(rng, 25);
    // include an all-zeros tensor explicitly
    store.add("zeros", {3, 1, 2}, std::vector<float>(6, 0.0f));
    TempFile f("roundtrip");
    save(store, f.str());
    WeightStore back = load(f.str());
    CHECK(stores_bitwise_equal(store, back));
    CHECK(store.content_hash() == back.content_hash());
}

TEST_CASE("model store round-trip") {
    ModelConfig cfg = ModelConfig::make(Variant::L0, 10);
    WeightStore store = init_seeded(cfg, 3);
    TempFile f("model");
    save(store, f.str());
    CHECK(stores_bitwise_equal(store, load(f.str())));
}

TEST_CASE("corrupt magic is rejected") {
    std::mt19937_64 rng(78);
    TempFile f("magic");
    save(random_store(rng, 3), f.str());
    auto bytes = slurp(f.str());
    bytes[0] = 'X';
    spit(f.str(), bytes);
    CHECK(load_error(f.str()) == IoErrc::bad_magic);
}

TEST_CASE("unsupported version is rejected") {
    std::mt19937_64 rng(79);
    TempFile f("version");
    save(random_store(rng, 3), f.str());
    auto bytes = slurp(f.str());
    bytes[4] = 0x7F; // version lives right after the magic
    spit(f.str(), bytes);
    CHECK(load_error(f.str()) == IoErrc::bad_version);
}

TEST_CASE("one missing byte is reported as truncation") {
    std::mt19937_64 rng(80);
    TempFile f("trunc");
    save(random_store(rng, 5), f.str());
    auto bytes = slurp(f.str());
    bytes.pop_back();
    spit(f.str(), bytes);
    CHECK(load_error(f.str()) == IoErrc::truncated);
}

TEST_CASE("trailing garbage is malformed") {
    std::mt19937_64 rng(81);
    TempFile f("trail");
    save(random_store(rng, 2), f.str());
    auto bytes = slurp(f.str());
    bytes.push_back(0xAB);
    spit(f.str(), bytes);
    CHECK(load_error(f.str()) == IoErrc::malformed);
}

TEST_CASE("duplicate names inside a file are rejected") {
    // craft a container holding the same tensor twice
    std::vector<unsigned char> bytes;
    auto put_u16 = [&](std::uint16_t v) {
        bytes.push_back(v & 0xFF);
        bytes.push_back((v >> 8) & 0xFF);
    };
    auto put_u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back((v >> (8 * i)) & 0xFF);
    };
    auto put_u64 = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back((v >> (8 * i)) & 0xFF);
    };
    auto put_f32 = [&](float v) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        put_u32(u);
    };
    bytes.insert(bytes.end(), {'L', 'W', 'G', 'A'});
    put_u16(1); // version
    put_u32(2); // two tensors...
    for (int rep = 0; rep < 2; ++rep) {
        const char* name = "twin";
        put_u16(4);
        bytes.insert(bytes.end(), name, name + 4);
        bytes.push_back(1); // rank
        put_u64(2);         // dims
        put_f32(1.0f);
        put_f32(2.0f);
    }
    TempFile f("dup");
    spit(f.str(), bytes);
    CHECK(load_error(f.str()) == IoErrc::duplicate_name);
}

TEST_CASE("missing file is unreadable") {
    CHECK(load_error("/nonexistent/dir/none.bin") == IoErrc::unreadable);
}

TEST_CASE("saved files are byte-identical for equal stores") {
    ModelConfig cfg = ModelConfig::make(Variant::L0, 10);
    TempFile f1("bytes1"), f2("bytes2");
    save(init_seeded(cfg, 11), f1.str());
    save(init_seeded(cfg, 11), f2.str());
    CHECK(slurp(f1.str()) == slurp(f2.str()));
}
