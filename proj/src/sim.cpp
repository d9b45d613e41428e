#include "zpi/sim.hpp"

#include <bit>
#include <cmath>
#include <random>

#include "parallel.hpp"
#include "zpi/error.hpp"
#include "zpi/rng.hpp"

namespace zpi {
namespace {

std::vector<std::uint8_t> pack(std::span<const std::uint8_t> values) {
    std::vector<std::uint8_t> out(packed_size(values.size()), 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i]) out[i >> 3] |= static_cast<std::uint8_t>(0x80u >> (i & 7));
    }
    return out;
}

// Philox words below this threshold switch a pixel ON; exact probability threshold / 2^32.
std::uint64_t on_threshold(double q) { return static_cast<std::uint64_t>(std::llround(std::ldexp(q, 32))); }

}  // namespace

ObjectMask::ObjectMask(int width, int height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (width <= 0 || height <= 0) {
        throw DataError("mask dimensions must be positive");
    }
    if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DataError("mask has " + std::to_string(values_.size()) + " values, expected " +
                        std::to_string(width) + "x" + std::to_string(height));
    }
    for (auto& v : values_) {
        if (v > 1) throw DataError("mask values must be 0 or 1");
        count_ += v;
    }
    packed_ = pack(values_);
}

PatternSet::PatternSet(int width, int height, std::int64_t count, double q, std::uint64_t seed,
                       std::vector<std::uint8_t> bits)
    : width_(width), height_(height), count_(count), q_(q), seed_(seed),
      stride_(packed_size(static_cast<std::size_t>(width) * static_cast<std::size_t>(height))),
      bits_(std::move(bits)) {
    if (width <= 0 || height <= 0 || count < 0) {
        throw DataError("invalid pattern set dimensions");
    }
    if (bits_.size() != stride_ * static_cast<std::size_t>(count)) {
        throw DataError("pattern payload is " + std::to_string(bits_.size()) + " bytes, expected " +
                        std::to_string(stride_ * static_cast<std::size_t>(count)));
    }
}

PatternSet generate_patterns(int width, int height, std::int64_t count, double q, std::uint64_t seed, int threads) {
    ModePhysics{q, 0.0}.validate();
    if (width <= 0 || height <= 0 || count < 0) {
        throw DomainError("pattern dimensions and count must be positive");
    }
    const std::size_t pixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    const std::size_t stride = packed_size(pixels);
    std::vector<std::uint8_t> bits(stride * static_cast<std::size_t>(count), 0);
    const std::uint64_t threshold = on_threshold(q);
    detail::parallel_for(count, threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
            if (threshold == 0) continue;
            CounterStream stream(seed, StreamTag::pattern, static_cast<std::uint64_t>(i));
            std::uint8_t* plane = bits.data() + static_cast<std::size_t>(i) * stride;
            for (std::size_t p = 0; p < pixels; ++p) {
                if (stream() < threshold) plane[p >> 3] |= static_cast<std::uint8_t>(0x80u >> (p & 7));
            }
        }
    });
    return PatternSet(width, height, count, q, seed, std::move(bits));
}

int overlap_count(const PatternView& pattern, const ObjectMask& mask) {
    if (pattern.width != mask.width() || pattern.height != mask.height()) {
        throw DataError("pattern is " + std::to_string(pattern.width) + "x" + std::to_string(pattern.height) +
                        " but mask is " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()));
    }
    const auto object = mask.packed();
    int m = 0;
    for (std::size_t b = 0; b < object.size(); ++b) {
        m += std::popcount(static_cast<unsigned>(pattern.bits[b] & object[b]));
    }
    return m;
}

std::string to_string(SimMode mode) { return mode == SimMode::poisson ? "poisson" : "pulse"; }

SimMode parse_sim_mode(const std::string& text) {
    if (text == "poisson") return SimMode::poisson;
    if (text == "pulse") return SimMode::pulse;
    throw ConfigError("unknown simulation mode '" + text + "' (expected poisson or pulse)");
}

void SimConfig::validate() const {
    phys.validate();
    if (pulses_per_frame < 1) {
        throw DomainError("pulses_per_frame must be at least 1");
    }
    if (frames < 0) {
        throw DomainError("frame count must be nonnegative");
    }
}

std::optional<std::string> SimConfig::fidelity_warning(int M) const {
    const double per_pulse = M * phys.lambda / pulses_per_frame;
    if (per_pulse < 0.1) return std::nullopt;
    return "per-pulse mean M*lambda/N1 = " + std::to_string(per_pulse) +
           " >= 0.1: binary pulse detection saturates and departs from the Poisson count model";
}

FrameRecord simulate_frame(int m, const SimConfig& config, std::int64_t frame_index) {
    FrameRecord rec{frame_index, 0, std::nullopt};
    const double mean = m * config.phys.lambda;
    if (m <= 0 || mean <= 0.0) return rec;
    CounterStream stream(config.seed, StreamTag::frame, static_cast<std::uint64_t>(frame_index));
    const auto slots = static_cast<std::uint32_t>(config.pulses_per_frame);

    if (config.mode == SimMode::poisson) {
        std::poisson_distribution<int> count(mean);
        // A frame cannot register more detections than it has pulse slots.
        rec.n = std::min(count(stream), config.pulses_per_frame);
        if (rec.n > 0) {
            std::uint32_t first = slots;
            for (int i = 0; i < rec.n; ++i) first = std::min(first, stream.below(slots));
            rec.first_pulse = static_cast<int>(first);
        }
        return rec;
    }

    // Slot detection probability is 1 - exp(-rate), so the number of empty slots before a
    // detection is geometric with log(1 - p) = -rate.
    const double rate = mean / config.pulses_per_frame;
    std::int64_t slot = -1;
    for (;;) {
        const double gap = std::floor(-std::log(stream.uniform_open()) / rate);
        if (gap >= static_cast<double>(slots)) break;
        slot += 1 + static_cast<std::int64_t>(gap);
        if (slot >= static_cast<std::int64_t>(slots)) break;
        if (rec.n == 0) rec.first_pulse = static_cast<int>(slot);
        ++rec.n;
    }
    return rec;
}

FrameRecord simulate_frame_naive(int m, const SimConfig& config, std::int64_t frame_index) {
    FrameRecord rec{frame_index, 0, std::nullopt};
    const double mean = m * config.phys.lambda;
    if (m <= 0 || mean <= 0.0) return rec;
    CounterStream stream(config.seed, StreamTag::frame, static_cast<std::uint64_t>(frame_index));
    const double p = -std::expm1(-mean / config.pulses_per_frame);
    for (int slot = 0; slot < config.pulses_per_frame; ++slot) {
        if (stream.uniform_open() < p) {
            if (rec.n == 0) rec.first_pulse = slot;
            ++rec.n;
        }
    }
    return rec;
}

std::vector<FrameRecord> simulate_frames(const PatternSet& patterns, const ObjectMask& mask, const SimConfig& config) {
    config.validate();
    if (mask.count() < 1) {
        throw DataError("mask has no object pixels");
    }
    std::vector<FrameRecord> frames(static_cast<std::size_t>(patterns.count()));
    detail::parallel_for(patterns.count(), config.threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
            frames[static_cast<std::size_t>(i)] = simulate_frame(overlap_count(patterns[i], mask), config, i);
        }
    });
    return frames;
}

Experiment run_experiment(const ObjectMask& mask, const SimConfig& config) {
    config.validate();
    PatternSet patterns =
        generate_patterns(mask.width(), mask.height(), config.frames, config.phys.q, config.seed, config.threads);
    std::vector<FrameRecord> frames = simulate_frames(patterns, mask, config);
    return {std::move(patterns), std::move(frames)};
}

}  // namespace zpi
