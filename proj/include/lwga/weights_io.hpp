#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lwga/config.hpp"

namespace lwga {

// Name + dims of one tensor a model expects; the unit a manifest is made of.
struct TensorShape {
    std::string name;
    std::vector<std::uint64_t> dims; // rank 1..4

    std::uint64_t elements() const {
        std::uint64_t e = 1;
        for (std::uint64_t d : dims) e *= d;
        return e;
    }
};

struct WeightEntry {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<float> data;
};

// Ordered name -> tensor map. Iteration order is insertion order; names are
// unique; entries are immutable once added.
class WeightStore {
public:
    void add(std::string name, std::vector<std::uint64_t> dims, std::vector<float> data);
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const WeightEntry& at(const std::string& name) const;
    const std::vector<WeightEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::uint64_t total_elements() const;

    // FNV-1a over the exact serialized byte stream; equal stores hash equal
    // on every platform.
    std::uint64_t content_hash() const;

private:
    std::vector<WeightEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Fills every tensor of the model's manifest from a per-tensor PRNG stream
// (xoshiro256**, stream = seed mixed with a hash of the tensor name) with
// uniform(-0.05, 0.05). Normalization statistics get identity values
// instead: gamma=1, beta=0, mean=0, var=1. Same seed, same store, any
// platform.
WeightStore init_seeded(const ModelConfig& config, std::uint64_t seed);

// Container format, little-endian throughout: magic "LWGA", version u16,
// tensor count u32; per tensor: name length u16 + UTF-8 bytes, rank u8
// (1..4), dims as u64, payload as raw f32.
void save(const WeightStore& store, const std::string& path);
WeightStore load(const std::string& path);

} // namespace lwga
