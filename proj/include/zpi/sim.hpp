#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zpi/stats.hpp"

namespace zpi {

/// Bytes needed to hold `pixels` bits, padded to a byte boundary.
constexpr std::size_t packed_size(std::size_t pixels) noexcept { return (pixels + 7) / 8; }

/// Bit `pixel` of a row-major, most-significant-bit-first packed plane.
inline bool packed_bit(std::span<const std::uint8_t> plane, std::size_t pixel) noexcept {
    return (plane[pixel >> 3] >> (7 - (pixel & 7))) & 1u;
}

/// Binary scene: 1 = reflective object pixel, 0 = background.
class ObjectMask {
  public:
    ObjectMask(int width, int height, std::vector<std::uint8_t> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixels() const noexcept { return values_.size(); }
    std::span<const std::uint8_t> values() const noexcept { return values_; }
    std::span<const std::uint8_t> packed() const noexcept { return packed_; }
    bool operator[](std::size_t pixel) const noexcept { return values_[pixel] != 0; }

    /// Number of object pixels, the mode count M.
    int count() const noexcept { return count_; }

    friend bool operator==(const ObjectMask& a, const ObjectMask& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.values_ == b.values_;
    }

  private:
    int width_;
    int height_;
    std::vector<std::uint8_t> values_;
    std::vector<std::uint8_t> packed_;
    int count_ = 0;
};

/// One modulation pattern, a view into a PatternSet.
struct PatternView {
    int width = 0;
    int height = 0;
    std::span<const std::uint8_t> bits;

    std::size_t pixels() const noexcept { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    bool operator[](std::size_t pixel) const noexcept { return packed_bit(bits, pixel); }
};

/// Sequence of Bernoulli(q) binary patterns stored bit-packed, one padded plane per pattern.
class PatternSet {
  public:
    PatternSet(int width, int height, std::int64_t count, double q, std::uint64_t seed,
               std::vector<std::uint8_t> bits);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::int64_t count() const noexcept { return count_; }
    double q() const noexcept { return q_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t bytes_per_pattern() const noexcept { return stride_; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    PatternView operator[](std::int64_t index) const noexcept {
        return {width_, height_,
                std::span<const std::uint8_t>(bits_).subspan(static_cast<std::size_t>(index) * stride_, stride_)};
    }

    friend bool operator==(const PatternSet&, const PatternSet&) = default;

  private:
    int width_;
    int height_;
    std::int64_t count_;
    double q_;
    std::uint64_t seed_;
    std::size_t stride_;
    std::vector<std::uint8_t> bits_;
};

/// Generates `count` patterns. Pixel p of pattern i depends only on (seed, i, p), so the
/// result is identical for every thread count.
PatternSet generate_patterns(int width, int height, std::int64_t count, double q, std::uint64_t seed,
                             int threads = 1);

/// Number of ON pattern pixels that fall on object pixels.
int overlap_count(const PatternView& pattern, const ObjectMask& mask);

enum class SimMode { poisson, pulse };

std::string to_string(SimMode mode);
SimMode parse_sim_mode(const std::string& text);

struct SimConfig {
    ModePhysics phys;
    int pulses_per_frame = 25'960;
    std::int64_t frames = 81'920;
    std::uint64_t seed = 1;
    SimMode mode = SimMode::poisson;
    int threads = 1;

    void validate() const;

    /// Message when the worst-case per-pulse mean M lambda / N1 reaches 0.1, where the
    /// binary-slot and Poisson count models start to diverge.
    std::optional<std::string> fidelity_warning(int M) const;
};

/// Measurement for one pattern: photon count and index of the first detecting pulse.
struct FrameRecord {
    std::int64_t pattern_index = 0;
    int n = 0;
    std::optional<int> first_pulse;

    friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

/// Simulates one frame with m ON object pixels. The result depends only on
/// (config, m, frame_index).
///
/// Poisson mode draws n ~ Poisson(m lambda) and the first pulse as the minimum of n uniform
/// slots. Pulse mode treats each of the N1 slots as a binary detection with probability
/// 1 - exp(-m lambda / N1) and walks the slot train with geometric gaps.
FrameRecord simulate_frame(int m, const SimConfig& config, std::int64_t frame_index);

/// Pulse-mode reference that tests every slot individually. Same distribution as the
/// geometric-gap sampler, O(N1) per frame.
FrameRecord simulate_frame_naive(int m, const SimConfig& config, std::int64_t frame_index);

struct Experiment {
    PatternSet patterns;
    std::vector<FrameRecord> frames;
};

/// Generates config.frames patterns over the mask and simulates one frame per pattern.
Experiment run_experiment(const ObjectMask& mask, const SimConfig& config);

/// Simulates frames for an existing pattern sequence.
std::vector<FrameRecord> simulate_frames(const PatternSet& patterns, const ObjectMask& mask, const SimConfig& config);

}  // namespace zpi
