#pragma once

#include <vector>

#include "zpi/error.hpp"
#include "zpi/pdf.hpp"
#include "zpi/stats.hpp"

namespace zpi {

/// Three-tap smoothing kernel applied as out(n) = l1 p(n-1) + l2 p(n) + l3 p(n+1).
struct SmoothKernel {
    double l1 = 0.0;
    double l2 = 1.0;
    double l3 = 0.0;

    static SmoothKernel identity() { return {0.0, 1.0, 0.0}; }
    /// l1 = l3 = 1/6.6, l2 = 5.6/6.6. These taps sum to 7.6/6.6, not 1.
    static SmoothKernel tapered() { return {1.0 / 6.6, 5.6 / 6.6, 1.0 / 6.6}; }

    void validate() const;
    /// Same kernel scaled to unit sum.
    SmoothKernel renormalized() const;

    friend bool operator==(const SmoothKernel&, const SmoothKernel&) = default;
};

/// Applies the three-tap kernel on 0..n_max with zero padding on both ends. The output is
/// not renormalised; its mass is l1 (1 - p(n_max)) + l2 + l3 (1 - p(0)) for a unit-mass p.
PhotonPdf smooth_pdf(const PhotonPdf& p, const SmoothKernel& k);

/// Convolution with a unit-sum discrete Gaussian of width sigma (taps out to 5 sigma),
/// rescaled so the output keeps the input mass on 0..n_max. sigma = 0 returns p unchanged.
PhotonPdf gaussian_smooth(const PhotonPdf& p, double sigma);

struct FitOptions {
    int max_evaluations = 10'000;
    /// A trial point replaces the current one only if it lowers the residual by this
    /// relative amount.
    double residual_tol = 1e-10;
    /// Search stops once every step (log q, log lambda, sigma) is below this.
    double step_tol = 1e-10;
    double initial_step = 0.1;
    /// Also fit a Gaussian smoothing width applied after the three-tap kernel.
    bool fit_gaussian_width = false;
    double initial_sigma = 0.5;
};

struct FitResult {
    ModePhysics params;
    double sigma = 0.0;
    double residual = 0.0;
    double nbar = 0.0;
    int evaluations = 0;
    bool converged = false;
    /// The data cannot separate q from lambda (no photons recorded, or the fit collapsed
    /// onto the vacuum ridge).
    bool degenerate = false;
    /// Residual after every accepted base move.
    std::vector<double> residual_history;
};

class FitError : public Error {
  public:
    FitError(const std::string& what, FitResult best) : Error(what), best_(std::move(best)) {}
    const FitResult& best() const noexcept { return best_; }

  private:
    FitResult best_;
};

/// Model histogram: three-tap smoothing, then optional Gaussian smoothing, of multimode_pdf.
PhotonPdf fit_model(const ModePhysics& phys, int M, const SmoothKernel& kernel, double sigma = 0.0);

/// Least-squares calibration of (q, lambda) for a known mode count M. Minimises
/// sum_n (model(n) - hist(n))^2 by Hooke-Jeeves pattern search in (log q, log lambda)
/// starting from `init`. Throws FitError carrying the best point when the evaluation
/// budget runs out first.
FitResult fit_params(const PhotonPdf& hist, int M, const ModePhysics& init, const SmoothKernel& kernel,
                     const FitOptions& opts = {});

}  // namespace zpi
