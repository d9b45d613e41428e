#include "zpi/pdf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zpi/error.hpp"

namespace zpi {

PhotonPdf::PhotonPdf(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw DataError("PhotonPdf needs at least one entry");
    }
    for (double v : values_) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw DataError("PhotonPdf entries must be finite and nonnegative");
        }
    }
}

PhotonPdf PhotonPdf::delta(int n, int n_max) {
    if (n < 0) {
        throw DomainError("delta: negative photon number");
    }
    std::vector<double> v(static_cast<std::size_t>(std::max(n, n_max)) + 1, 0.0);
    v[static_cast<std::size_t>(n)] = 1.0;
    return PhotonPdf(std::move(v));
}

double PhotonPdf::mass() const noexcept { return std::accumulate(values_.begin(), values_.end(), 0.0); }

PhotonPdf pdf_convolve(const PhotonPdf& a, const PhotonPdf& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return PhotonPdf(std::move(out));
}

double pdf_mean(const PhotonPdf& p) {
    double mean = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
        mean += static_cast<double>(n) * p[n];
    }
    return mean;
}

double total_variation(const PhotonPdf& a, const PhotonPdf& b) {
    const int top = std::max(a.n_max(), b.n_max());
    double l1 = 0.0;
    for (int n = 0; n <= top; ++n) {
        l1 += std::abs(a(n) - b(n));
    }
    return 0.5 * l1;
}

PhotonPdf poisson_pdf(double mean, int n_max) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw DomainError("poisson_pdf: mean must be finite and nonnegative");
    }
    if (n_max < 0) {
        throw DomainError("poisson_pdf: n_max must be nonnegative");
    }
    std::vector<double> v(static_cast<std::size_t>(n_max) + 1, 0.0);
    if (mean == 0.0) {
        v[0] = 1.0;
        return PhotonPdf(std::move(v));
    }
    const double log_mean = std::log(mean);
    for (int n = 0; n <= n_max; ++n) {
        v[static_cast<std::size_t>(n)] = std::exp(n * log_mean - mean - std::lgamma(n + 1.0));
    }
    return PhotonPdf(std::move(v));
}

}  // namespace zpi
