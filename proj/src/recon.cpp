#include "zpi/recon.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <optional>

#include "parallel.hpp"
#include "zpi/error.hpp"

namespace zpi {

Image::Image(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (width <= 0 || height <= 0 ||
        values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DataError("image values do not match its dimensions");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw DataError("image values must be finite");
    }
}

namespace detail {

void WeightedSums::add(const PatternView& pattern, double weight) {
    frames += 1.0;
    weight_total += weight;
    const std::size_t pixels = pattern.pixels();
    for (std::size_t b = 0; b < pattern.bits.size(); ++b) {
        unsigned byte = pattern.bits[b];
        while (byte) {
            const int lead = std::countl_zero(static_cast<std::uint8_t>(byte));
            const std::size_t pixel = b * 8 + static_cast<std::size_t>(lead);
            byte &= ~(0x80u >> lead);
            if (pixel >= pixels) break;
            on[pixel] += 1.0;
            weighted[pixel] += weight;
        }
    }
}

void WeightedSums::merge(const WeightedSums& other) {
    for (std::size_t i = 0; i < on.size(); ++i) {
        on[i] += other.on[i];
        weighted[i] += other.weighted[i];
    }
    frames += other.frames;
    weight_total += other.weight_total;
}

}  // namespace detail

namespace {

using Weight = std::function<std::optional<double>(const FrameRecord&)>;

void check_frames(const PatternSet& patterns, std::span<const FrameRecord> frames) {
    for (const auto& f : frames) {
        if (f.pattern_index < 0 || f.pattern_index >= patterns.count()) {
            throw DataError("frame references pattern " + std::to_string(f.pattern_index) + " outside the set of " +
                            std::to_string(patterns.count()));
        }
    }
}

// Folds the selected frames in fixed chunks and merges the partial sums in chunk order.
detail::WeightedSums fold(const PatternSet& patterns, std::span<const FrameRecord> frames, const Weight& weight,
                          int threads) {
    check_frames(patterns, frames);
    const std::size_t pixels = static_cast<std::size_t>(patterns.width()) * static_cast<std::size_t>(patterns.height());
    // Frames are summed in fixed-size blocks merged in block order, so the floating-point
    // result is the same for every thread count. Blocks are processed in waves of `workers`.
    constexpr std::int64_t kBlock = 8192;
    const auto count = static_cast<std::int64_t>(frames.size());
    const std::int64_t blocks = (count + kBlock - 1) / kBlock;
    const auto workers = static_cast<std::int64_t>(std::max(1, threads));
    detail::WeightedSums total(pixels);
    std::vector<detail::WeightedSums> parts(static_cast<std::size_t>(std::min(workers, std::max<std::int64_t>(blocks, 1))),
                                            detail::WeightedSums(pixels));
    for (std::int64_t first = 0; first < blocks; first += workers) {
        const std::int64_t wave = std::min(workers, blocks - first);
        detail::parallel_for(wave, static_cast<int>(wave), [&](std::int64_t wb, std::int64_t we) {
            for (std::int64_t w = wb; w < we; ++w) {
                auto& part = parts[static_cast<std::size_t>(w)];
                part = detail::WeightedSums(pixels);
                const std::int64_t begin = (first + w) * kBlock;
                const std::int64_t end = std::min(count, begin + kBlock);
                for (std::int64_t i = begin; i < end; ++i) {
                    const FrameRecord& f = frames[static_cast<std::size_t>(i)];
                    if (auto x = weight(f)) part.add(patterns[f.pattern_index], *x);
                }
            }
        });
        for (std::int64_t w = 0; w < wave; ++w) total.merge(parts[static_cast<std::size_t>(w)]);
    }
    return total;
}

Image covariance_image(const PatternSet& patterns, const detail::WeightedSums& sums, double frames) {
    std::vector<double> out(sums.on.size());
    const double mean_weight = sums.weight_total / frames;
    for (std::size_t p = 0; p < out.size(); ++p) {
        out[p] = sums.weighted[p] / frames - mean_weight * (sums.on[p] / frames);
    }
    return Image(patterns.width(), patterns.height(), std::move(out));
}

}  // namespace

Image kphoton_reconstruct(const PatternSet& patterns, std::span<const FrameRecord> frames, int k, int threads) {
    if (k < 0) {
        throw DomainError("photon number k must be nonnegative");
    }
    const auto sums = fold(
        patterns, frames, [k](const FrameRecord& f) { return f.n == k ? std::optional<double>(1.0) : std::nullopt; },
        threads);
    if (sums.frames == 0.0) {
        throw EmptySelectionError(k);
    }
    std::vector<double> out(sums.on.size());
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = sums.on[p] / sums.frames;
    return Image(patterns.width(), patterns.height(), std::move(out));
}

Image zpi_reconstruct(const PatternSet& patterns, std::span<const FrameRecord> frames, int threads) {
    return kphoton_reconstruct(patterns, frames, 0, threads);
}

Image cgi_reconstruct(const PatternSet& patterns, std::span<const FrameRecord> frames, int threads) {
    if (frames.size() < 2) {
        throw DataError("ghost imaging needs at least two frames");
    }
    const auto sums = fold(
        patterns, frames, [](const FrameRecord& f) { return std::optional<double>(f.n); }, threads);
    return covariance_image(patterns, sums, sums.frames);
}

Image ffgi_reconstruct(const PatternSet& patterns, std::span<const FrameRecord> frames, int pulses_per_frame,
                       int threads) {
    if (frames.size() < 2) {
        throw DataError("ghost imaging needs at least two frames");
    }
    if (pulses_per_frame < 1) {
        throw DomainError("pulses_per_frame must be at least 1");
    }
    for (const auto& f : frames) {
        if (f.n > 0 && !f.first_pulse) {
            throw DataError("frame " + std::to_string(f.pattern_index) +
                            " has photons but no first-pulse timestamp; first-photon imaging needs timestamps");
        }
    }
    const double slots = pulses_per_frame;
    const auto sums = fold(
        patterns, frames,
        [slots](const FrameRecord& f) {
            return std::optional<double>(f.first_pulse ? slots / (*f.first_pulse + 1.0) : 0.0);
        },
        threads);
    return covariance_image(patterns, sums, sums.frames);
}

Image normalize_max(const Image& img) {
    const auto values = img.values();
    const double top = *std::max_element(values.begin(), values.end());
    if (top == 0.0) {
        if (std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; })) {
            throw DataError("cannot normalise an all-zero image");
        }
        throw DataError("image maximum is zero; normalising by it is undefined");
    }
    std::vector<double> out(values.begin(), values.end());
    for (double& v : out) v /= top;
    return Image(img.width(), img.height(), std::move(out));
}

}  // namespace zpi
