#pragma once

#include <optional>

#include "zpi/pdf.hpp"

namespace zpi {

/// Photon statistics of one modulator pixel: flip probability q and the mean photon
/// number lambda an ON pixel sends to the detector per frame.
struct ModePhysics {
    double q = 0.0;
    double lambda = 0.0;

    /// Throws DomainError unless 0 <= q <= 1 and lambda is finite and >= 0.
    void validate() const;
};

/// Number of reflective object pixels, i.e. independent modes reaching the detector.
struct SceneSpec {
    int M = 1;

    void validate() const;
};

/// Default truncation bound ceil(Mq lambda + 10 sqrt(max(Mq lambda, 1)) + 20).
int default_n_max(const ModePhysics& phys, const SceneSpec& scene);

/// Single-pixel mixed state: (1-q) delta_n + q Poisson(n; lambda), entries 0..n_max.
PhotonPdf single_mode_pdf(const ModePhysics& phys, int n_max);

/// Photon-number distribution of M independent modes, a binomial mixture of Poisson
/// distributions evaluated in log space.
///
/// With no n_max the bound starts at default_n_max and is doubled until the tail drops
/// below kTailTol. An explicit n_max that drops more than kTailTol throws TruncationError.
PhotonPdf multimode_pdf(const ModePhysics& phys, const SceneSpec& scene, std::optional<int> n_max = {});

/// n = 0 mass of the M-mode distribution, (1 - q + q e^-lambda)^M.
double zero_weight(const ModePhysics& phys, const SceneSpec& scene);

/// Same closed form for any mode count >= 0 (zero modes give 1).
double vacuum_probability(const ModePhysics& phys, int modes);

/// Joint distribution of count n and one object pixel's value u. The remaining M-1 modes
/// follow multimode_pdf; with M = 1 they contribute the vacuum.
JointPdf joint_pdf(const ModePhysics& phys, const SceneSpec& scene, std::optional<int> n_max = {});

/// Joint zero-photon probabilities for an object pixel (g1) and a background pixel (g0).
struct ImageValues {
    double g1 = 0.0;
    double g0 = 0.0;
};

ImageValues image_values(const ModePhysics& phys, const SceneSpec& scene);

/// Zero-photon image visibility; independent of M and negative for lambda > 0, 0 < q < 1.
double theoretical_visibility(const ModePhysics& phys);

struct QualityTheory {
    double g1 = 0.0;
    double g0 = 0.0;
    double dg1 = 0.0;
    double dg0 = 0.0;
    double v = 0.0;
    double r = 0.0;
    double rp = 0.0;
};

/// Image values, fluctuations, visibility, CNR and peak CNR of the zero-photon image.
/// Throws UndefinedMetricError when the fluctuations vanish.
QualityTheory quality_theory(const ModePhysics& phys, const SceneSpec& scene);

}  // namespace zpi
