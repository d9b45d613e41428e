#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace zpi {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: the same
/// (counter, key) always yields the same four words.
class Philox4x32 {
  public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

  private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Independent substreams of one master seed.
enum class StreamTag : std::uint32_t {
    pattern = 1,
    frame = 2,
};

/// Random word sequence fully determined by (seed, tag, index). Word i of a stream can be
/// computed without generating words 0..i-1, so streams can be consumed in any order or
/// in parallel. Satisfies UniformRandomBitGenerator.
class CounterStream {
  public:
    using result_type = std::uint32_t;

    CounterStream(std::uint64_t seed, StreamTag tag, std::uint64_t index) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          index_lo_(static_cast<std::uint32_t>(index)),
          index_hi_(static_cast<std::uint32_t>(index >> 32)),
          tag_(static_cast<std::uint32_t>(tag)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    /// Word `position` of this stream.
    result_type word_at(std::uint64_t position) const noexcept {
        const auto out = Philox4x32::block(counter(position >> 2), key_);
        return out[position & 3u];
    }

    result_type operator()() noexcept {
        if (lane_ == 4) {
            buffer_ = Philox4x32::block(counter(block_++), key_);
            lane_ = 0;
        }
        return buffer_[lane_++];
    }

    /// Uniform double on the open interval (0, 1) with 53 random bits.
    double uniform_open() noexcept {
        const std::uint64_t hi = (*this)();
        const std::uint64_t lo = (*this)();
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound) by Lemire's multiply-shift with rejection.
    std::uint32_t below(std::uint32_t bound) noexcept {
        std::uint64_t m = std::uint64_t{(*this)()} * bound;
        auto low = static_cast<std::uint32_t>(m);
        if (low < bound) {
            const std::uint32_t threshold = static_cast<std::uint32_t>(-bound) % bound;
            while (low < threshold) {
                m = std::uint64_t{(*this)()} * bound;
                low = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

  private:
    Philox4x32::Counter counter(std::uint64_t block) const noexcept {
        return {static_cast<std::uint32_t>(block), index_lo_, index_hi_,
                tag_ ^ (static_cast<std::uint32_t>(block >> 32) << 8)};
    }

    Philox4x32::Key key_;
    std::uint32_t index_lo_;
    std::uint32_t index_hi_;
    std::uint32_t tag_;
    std::uint64_t block_ = 0;
    Philox4x32::Counter buffer_{};
    int lane_ = 4;
};

}  // namespace zpi
