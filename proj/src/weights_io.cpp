#include "lwga/weights_io.hpp"

#include <cstring>
#include <fstream>

#include "lwga/backbone.hpp"
#include "lwga/errors.hpp"

namespace lwga {

namespace {

constexpr char kMagic[4] = {'L', 'W', 'G', 'A'};
constexpr std::uint16_t kVersion = 1;

std::uint64_t fnv1a64(const void* bytes, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// xoshiro256** — tiny, seedable, identical everywhere.
struct Xoshiro256 {
    std::uint64_t s[4];

    explicit Xoshiro256(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& si : s) si = splitmix64(sm);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // uniform(-0.05, 0.05) from the top 24 bits; every value is an exact
    // small multiple, so the stream is bit-reproducible as f32.
    float uniform_small() {
        const float u = static_cast<float>(next() >> 40) * (1.0f / 16777216.0f);
        return (u * 2.0f - 1.0f) * 0.05f;
    }
};

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

std::string serialize(const WeightStore& store) {
    std::string out;
    out.append(kMagic, 4);
    put_u16(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(store.size()));
    for (const WeightEntry& e : store.entries()) {
        put_u16(out, static_cast<std::uint16_t>(e.name.size()));
        out.append(e.name);
        out.push_back(static_cast<char>(e.dims.size()));
        for (std::uint64_t d : e.dims) put_u64(out, d);
        for (float v : e.data) put_f32(out, v);
    }
    return out;
}

// Cursor over a loaded byte buffer; every read checks the remaining length.
struct Reader {
    const unsigned char* p;
    std::size_t len;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > len)
            throw IoError(IoErrc::truncated, "container truncated at byte " + std::to_string(pos) +
                                                 " (need " + std::to_string(n) + " more)");
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(p[pos] | (p[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    std::uint8_t u8() {
        need(1);
        return p[pos++];
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(p + pos), n);
        pos += n;
        return s;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

bool is_norm_stat(const std::string& name, const char* suffix) {
    const std::size_t n = name.size(), m = std::strlen(suffix);
    return n >= m && name.compare(n - m, m, suffix) == 0;
}

} // namespace

void WeightStore::add(std::string name, std::vector<std::uint64_t> dims, std::vector<float> data) {
    if (name.empty() || name.size() > 0xffff)
        throw IoError(IoErrc::malformed, "tensor name length out of range");
    if (dims.empty() || dims.size() > 4)
        throw IoError(IoErrc::malformed, "tensor rank must be 1..4, got " +
                                             std::to_string(dims.size()) + " for '" + name + "'");
    std::uint64_t elems = 1;
    for (std::uint64_t d : dims) {
        if (d == 0) throw IoError(IoErrc::malformed, "zero dim in '" + name + "'");
        elems *= d;
    }
    if (elems != data.size())
        throw IoError(IoErrc::malformed, "payload of '" + name + "' has " +
                                             std::to_string(data.size()) + " values, dims need " +
                                             std::to_string(elems));
    if (!index_.emplace(name, entries_.size()).second)
        throw IoError(IoErrc::duplicate_name, "duplicate tensor name '" + name + "'");
    entries_.push_back({std::move(name), std::move(dims), std::move(data)});
}

const WeightEntry& WeightStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
        throw IoError(IoErrc::manifest_mismatch, "store has no tensor named '" + name + "'");
    return entries_[it->second];
}

std::uint64_t WeightStore::total_elements() const {
    std::uint64_t total = 0;
    for (const WeightEntry& e : entries_) total += e.data.size();
    return total;
}

std::uint64_t WeightStore::content_hash() const {
    const std::string bytes = serialize(*this);
    return fnv1a64(bytes.data(), bytes.size());
}

WeightStore init_seeded(const ModelConfig& config, std::uint64_t seed) {
    WeightStore store;
    for (const TensorShape& t : weight_manifest(config)) {
        std::vector<float> data(t.elements());
        if (is_norm_stat(t.name, ".gamma") || is_norm_stat(t.name, ".var")) {
            std::fill(data.begin(), data.end(), 1.0f);
        } else if (is_norm_stat(t.name, ".beta") || is_norm_stat(t.name, ".mean")) {
            // already zero
        } else {
            Xoshiro256 rng(seed ^ fnv1a64(t.name.data(), t.name.size()));
            for (float& v : data) v = rng.uniform_small();
        }
        store.add(t.name, t.dims, std::move(data));
    }
    return store;
}

void save(const WeightStore& store, const std::string& path) {
    const std::string bytes = serialize(store);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(IoErrc::unreadable, "cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError(IoErrc::unreadable, "short write to '" + path + "'");
}

WeightStore load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(IoErrc::unreadable, "cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()};

    r.need(4);
    if (std::memcmp(r.p, kMagic, 4) != 0)
        throw IoError(IoErrc::bad_magic, "'" + path + "' is not a weight container (bad magic)");
    r.pos += 4;
    const std::uint16_t version = r.u16();
    if (version != kVersion)
        throw IoError(IoErrc::bad_version,
                      "unsupported container version " + std::to_string(version));
    const std::uint32_t count = r.u32();

    WeightStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t name_len = r.u16();
        if (name_len == 0) throw IoError(IoErrc::malformed, "empty tensor name");
        std::string name = r.str(name_len);
        const std::uint8_t rank = r.u8();
        if (rank < 1 || rank > 4)
            throw IoError(IoErrc::malformed,
                          "tensor '" + name + "' has rank " + std::to_string(rank));
        std::vector<std::uint64_t> dims(rank);
        std::uint64_t elems = 1;
        for (auto& d : dims) {
            d = r.u64();
            if (d == 0 || elems > (1ull << 32) / d)
                throw IoError(IoErrc::malformed, "bad dims in tensor '" + name + "'");
            elems *= d;
        }
        r.need(elems * 4);
        std::vector<float> data(elems);
        for (auto& v : data) v = r.f32();
        store.add(std::move(name), std::move(dims), std::move(data));
    }
    if (r.pos != r.len)
        throw IoError(IoErrc::malformed, std::to_string(r.len - r.pos) +
                                             " trailing bytes after last tensor");
    return store;
}

} // namespace lwga
