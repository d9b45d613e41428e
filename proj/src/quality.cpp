#include "zpi/quality.hpp"

#include <algorithm>
#include <cmath>

#include "zpi/error.hpp"

namespace zpi {

ClassMoments class_moments(const Image& img, const ObjectMask& mask) {
    if (img.width() != mask.width() || img.height() != mask.height()) {
        throw DataError("image and mask dimensions differ");
    }
    const auto M = static_cast<std::size_t>(mask.count());
    const std::size_t background = mask.pixels() - M;
    if (M == 0 || background == 0) {
        throw DataError("scoring needs at least one object and one background pixel");
    }
    double sum1 = 0.0;
    double sum0 = 0.0;
    for (std::size_t p = 0; p < img.pixels(); ++p) {
        (mask[p] ? sum1 : sum0) += img[p];
    }
    ClassMoments m;
    m.g1 = sum1 / static_cast<double>(M);
    m.g0 = sum0 / static_cast<double>(background);
    // Two-pass variance around the class means.
    double ss1 = 0.0;
    double ss0 = 0.0;
    for (std::size_t p = 0; p < img.pixels(); ++p) {
        if (mask[p]) {
            ss1 += (img[p] - m.g1) * (img[p] - m.g1);
        } else {
            ss0 += (img[p] - m.g0) * (img[p] - m.g0);
        }
    }
    m.dg1 = ss1 / static_cast<double>(M);
    m.dg0 = ss0 / static_cast<double>(background);
    return m;
}

double visibility(const ClassMoments& m) {
    if (m.g1 + m.g0 == 0.0) {
        throw UndefinedMetricError("visibility undefined: g1 + g0 = 0");
    }
    return (m.g1 - m.g0) / (m.g1 + m.g0);
}

double cnr(const ClassMoments& m) {
    if (!(m.dg1 + m.dg0 > 0.0)) {
        throw UndefinedMetricError("CNR undefined: both pixel classes have zero variance");
    }
    return (m.g1 - m.g0) / std::sqrt(m.dg1 + m.dg0);
}

double peak_cnr(const ClassMoments& m) {
    if (!(m.dg1 > 0.0)) {
        throw UndefinedMetricError("peak CNR undefined: object pixels have zero variance");
    }
    return (m.g1 - m.g0) / std::sqrt(m.dg1);
}

QualityEmpirical empirical_quality(const Image& img, const ObjectMask& mask) {
    const ClassMoments m = class_moments(img, mask);
    return {m.g1, m.g0, m.dg1, m.dg0, visibility(m), cnr(m), peak_cnr(m)};
}

PhotonPdf empirical_histogram(std::span<const FrameRecord> frames) {
    if (frames.empty()) {
        throw DataError("histogram needs at least one frame");
    }
    int top = 0;
    for (const auto& f : frames) {
        if (f.n < 0) throw DataError("negative photon count in frame " + std::to_string(f.pattern_index));
        top = std::max(top, f.n);
    }
    std::vector<double> counts(static_cast<std::size_t>(top) + 1, 0.0);
    for (const auto& f : frames) counts[static_cast<std::size_t>(f.n)] += 1.0;
    const auto total = static_cast<double>(frames.size());
    for (double& c : counts) c /= total;
    return PhotonPdf(std::move(counts));
}

}  // namespace zpi
