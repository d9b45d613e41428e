#pragma once

#include <span>
#include <vector>

namespace zpi {

/// Tail mass a truncated distribution may drop before it counts as a truncation error.
inline constexpr double kTailTol = 1e-9;

/// Probability distribution over photon number n = 0..n_max.
class PhotonPdf {
  public:
    PhotonPdf() : values_{1.0} {}
    explicit PhotonPdf(std::vector<double> values);

    /// Point mass at n (the vacuum state for n = 0), zero-padded up to n_max when n_max > n.
    static PhotonPdf delta(int n, int n_max = 0);

    int n_max() const noexcept { return static_cast<int>(values_.size()) - 1; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }

    /// Probability of n, zero outside [0, n_max].
    double operator()(int n) const noexcept {
        return n < 0 || n > n_max() ? 0.0 : values_[static_cast<std::size_t>(n)];
    }
    double operator[](std::size_t n) const noexcept { return values_[n]; }

    double mass() const noexcept;
    double tail() const noexcept { return 1.0 - mass(); }

    friend bool operator==(const PhotonPdf&, const PhotonPdf&) = default;

  private:
    std::vector<double> values_;
};

/// Joint distribution of photon count n and the value u of one object pixel.
struct JointPdf {
    PhotonPdf row_u0;
    PhotonPdf row_u1;

    double mass() const noexcept { return row_u0.mass() + row_u1.mass(); }
};

/// Discrete convolution. The result spans n = 0..a.n_max + b.n_max, so no mass is dropped.
PhotonPdf pdf_convolve(const PhotonPdf& a, const PhotonPdf& b);

/// Mean photon number, sum of n p(n).
double pdf_mean(const PhotonPdf& p);

/// Total-variation distance, half the L1 distance; the shorter support is zero-extended.
double total_variation(const PhotonPdf& a, const PhotonPdf& b);

/// Poisson(mean) truncated to 0..n_max.
PhotonPdf poisson_pdf(double mean, int n_max);

}  // namespace zpi
