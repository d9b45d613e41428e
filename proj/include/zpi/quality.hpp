#pragma once

#include <span>

#include "zpi/pdf.hpp"
#include "zpi/recon.hpp"
#include "zpi/sim.hpp"

namespace zpi {

/// Means and population variances of an image over the object (1) and background (0) pixels.
struct ClassMoments {
    double g1 = 0.0;
    double g0 = 0.0;
    double dg1 = 0.0;
    double dg0 = 0.0;
};

ClassMoments class_moments(const Image& img, const ObjectMask& mask);

/// (g1 - g0) / (g1 + g0). Throws UndefinedMetricError when g1 + g0 = 0.
double visibility(const ClassMoments& m);
/// (g1 - g0) / sqrt(dg1 + dg0).
double cnr(const ClassMoments& m);
/// (g1 - g0) / sqrt(dg1).
double peak_cnr(const ClassMoments& m);

struct QualityEmpirical {
    double g1 = 0.0;
    double g0 = 0.0;
    double dg1 = 0.0;
    double dg0 = 0.0;
    double v = 0.0;
    double r = 0.0;
    double rp = 0.0;
};

/// Visibility, CNR and peak CNR of a reconstruction scored against the true mask.
/// Requires both pixel classes; throws UndefinedMetricError on zero denominators.
QualityEmpirical empirical_quality(const Image& img, const ObjectMask& mask);

/// Normalised histogram of the recorded photon counts.
PhotonPdf empirical_histogram(std::span<const FrameRecord> frames);

}  // namespace zpi
