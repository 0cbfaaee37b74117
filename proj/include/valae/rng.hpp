#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace valae {

/// Counter-based generator: the i-th output is a pure function of (key, i).
/// Streams for different components are derived from the master seed by hashing,
/// so adding a stream never shifts the numbers another stream sees.
class CounterRng {
  public:
    using result_type = std::uint64_t;

    CounterRng() = default;
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return at(counter_++); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    result_type at(std::uint64_t index) const;

  private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

/// Key for the stream identified by (master seed, component label, run key).
std::uint64_t derive_stream_key(std::uint64_t master_seed, std::string_view label,
                                std::string_view run_key = {});

inline CounterRng make_stream(std::uint64_t master_seed, std::string_view label,
                              std::string_view run_key = {}) {
    return CounterRng(derive_stream_key(master_seed, label, run_key));
}

} // namespace valae
