#pragma once

#include <span>
#include <vector>

#include "zpi/sim.hpp"

namespace zpi {

/// Real-valued reconstruction on the pattern grid, row-major.
class Image {
  public:
    Image(int width, int height, std::vector<double> values);
    Image(int width, int height) : Image(width, height, std::vector<double>(static_cast<std::size_t>(width * height))) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixels() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t pixel) const noexcept { return values_[pixel]; }
    double at(int x, int y) const noexcept { return values_[static_cast<std::size_t>(y * width_ + x)]; }

  private:
    int width_;
    int height_;
    std::vector<double> values_;
};

// Reconstructions sum frames in fixed blocks merged in order; results are bit-identical
// for every thread count.

/// Mean pattern over frames that recorded exactly k photons. k = 0 is the zero-photon image.
/// Throws EmptySelectionError when no frame matches.
Image kphoton_reconstruct(const PatternSet& patterns, std::span<const FrameRecord> frames, int k, int threads = 1);

/// Zero-photon image, kphoton_reconstruct with k = 0.
Image zpi_reconstruct(const PatternSet& patterns, std::span<const FrameRecord> frames, int threads = 1);

/// Ghost image <n u> - <n><u> with 1/N normalisation. Needs at least two frames.
Image cgi_reconstruct(const PatternSet& patterns, std::span<const FrameRecord> frames, int threads = 1);

/// First-photon ghost image: covariance of the patterns with the flux proxy
/// x = N1 / (first_pulse + 1), x = 0 for frames without a detection.
Image ffgi_reconstruct(const PatternSet& patterns, std::span<const FrameRecord> frames, int pulses_per_frame,
                       int threads = 1);

/// Divides by the maximum value. Throws DataError if the image is all zero.
Image normalize_max(const Image& img);

namespace detail {

// Pattern sums weighted by a per-frame scalar. Partial accumulators merge by addition, so
// any partition of the frames gives the same totals up to floating-point reassociation.
struct WeightedSums {
    explicit WeightedSums(std::size_t pixels) : on(pixels, 0.0), weighted(pixels, 0.0) {}

    void add(const PatternView& pattern, double weight);
    void merge(const WeightedSums& other);

    std::vector<double> on;
    std::vector<double> weighted;
    double frames = 0.0;
    double weight_total = 0.0;
};

}  // namespace detail

}  // namespace zpi
