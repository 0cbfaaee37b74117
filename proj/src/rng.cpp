#include "valae/rng.hpp"

namespace valae {

std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

CounterRng::result_type CounterRng::at(std::uint64_t index) const {
    return mix64(mix64(index ^ 0x243F6A8885A308D3ULL) ^ key_);
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace

std::uint64_t derive_stream_key(std::uint64_t master_seed, std::string_view label,
                                std::string_view run_key) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    h = fnv1a(h, label);
    h = fnv1a(h ^ 0xFF, run_key);
    return mix64(mix64(master_seed) ^ h);
}

} // namespace valae
