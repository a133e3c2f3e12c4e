#pragma once

// Counter-based random streams.
//
// Every random draw in the library comes from a Stream identified by
// (master seed, replicate index, substream index). The key is a hash of those
// three numbers and the i-th output is splitmix64(key + i * golden), so any
// replicate can be regenerated in isolation and results never depend on how
// replicates were scheduled across workers.

#include <cstdint>
#include <limits>

namespace vrjp {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Stream {
public:
    using result_type = std::uint64_t;

    Stream() = default;
    Stream(std::uint64_t master_seed, std::uint64_t replicate, std::uint64_t substream = 0)
        : master_(master_seed), replicate_(replicate), substream_(substream) {
        key_ = splitmix64(splitmix64(splitmix64(master_seed) ^ replicate) ^
                          (substream * 0xD1B54A32D192ED03ULL));
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        return splitmix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL);
    }

    // Independent stream for another component of the same replicate.
    Stream substream(std::uint64_t index) const {
        return Stream(master_, replicate_, substream_ * 0x100000001B3ULL + index + 1);
    }

    std::uint64_t master_seed() const noexcept { return master_; }
    std::uint64_t replicate() const noexcept { return replicate_; }
    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t master_ = 0;
    std::uint64_t replicate_ = 0;
    std::uint64_t substream_ = 0;
    std::uint64_t key_ = splitmix64(0);
    std::uint64_t counter_ = 0;
};

}  // namespace vrjp
