#include "zpi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "zpi/error.hpp"

namespace zpi {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Binomial weights below max - kPrune contribute less than 1e-35 relative.
constexpr double kPrune = 80.0;

constexpr int kMaxAutoNMax = 1 << 22;

// Auto-truncation keeps growing n_max until the dropped mass is below this, well inside
// kTailTol, so marginals of the truncated joint distribution stay exact to ~1e-12.
constexpr double kAutoTail = 1e-12;

double log_poisson(int n, double mean) {
    if (mean == 0.0) {
        return n == 0 ? 0.0 : kNegInf;
    }
    return n * std::log(mean) - mean - std::lgamma(n + 1.0);
}

// sum_{m=0..modes} C(modes,m) q^m (1-q)^(modes-m) Poisson(n; (m+shift) lambda), n = 0..n_max.
std::vector<double> binomial_poisson_mixture(const ModePhysics& phys, int modes, int shift, int n_max) {
    struct Term {
        double log_weight;
        double mean;
    };
    std::vector<Term> terms;
    if (phys.q == 0.0) {
        terms.push_back({0.0, shift * phys.lambda});
    } else if (phys.q == 1.0) {
        terms.push_back({0.0, (modes + shift) * phys.lambda});
    } else {
        const double log_q = std::log(phys.q);
        const double log_p = std::log1p(-phys.q);
        const double log_fact = std::lgamma(modes + 1.0);
        std::vector<double> lw(static_cast<std::size_t>(modes) + 1);
        double top = kNegInf;
        for (int m = 0; m <= modes; ++m) {
            lw[static_cast<std::size_t>(m)] =
                log_fact - std::lgamma(m + 1.0) - std::lgamma(modes - m + 1.0) + m * log_q + (modes - m) * log_p;
            top = std::max(top, lw[static_cast<std::size_t>(m)]);
        }
        for (int m = 0; m <= modes; ++m) {
            if (lw[static_cast<std::size_t>(m)] >= top - kPrune) {
                terms.push_back({lw[static_cast<std::size_t>(m)], (m + shift) * phys.lambda});
            }
        }
    }

    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
    std::vector<double> logs(terms.size());
    for (int n = 0; n <= n_max; ++n) {
        double top = kNegInf;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            logs[i] = terms[i].log_weight + log_poisson(n, terms[i].mean);
            top = std::max(top, logs[i]);
        }
        if (top == kNegInf) continue;
        double acc = 0.0;
        for (double l : logs) {
            acc += std::exp(l - top);
        }
        out[static_cast<std::size_t>(n)] = std::exp(top + std::log(acc));
    }
    return out;
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

// Smallest n_max whose cumulative mass of `build(n_max)` reaches 1 - kTailTol.
template <typename Build>
int required_n_max(int start, Build build) {
    int n_max = start;
    for (;;) {
        const std::vector<double> cdf_source = build(n_max);
        double acc = 0.0;
        for (std::size_t n = 0; n < cdf_source.size(); ++n) {
            acc += cdf_source[n];
            if (acc >= 1.0 - kTailTol) {
                return static_cast<int>(n);
            }
        }
        if (n_max >= kMaxAutoNMax) {
            throw TruncationError(n_max, kMaxAutoNMax);
        }
        n_max = std::min(2 * n_max, kMaxAutoNMax);
    }
}

}  // namespace

void ModePhysics::validate() const {
    if (!(q >= 0.0 && q <= 1.0)) {
        throw DomainError("q must lie in [0, 1], got " + std::to_string(q));
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw DomainError("lambda must be finite and nonnegative, got " + std::to_string(lambda));
    }
}

void SceneSpec::validate() const {
    if (M < 1) {
        throw DomainError("M must be at least 1, got " + std::to_string(M));
    }
}

int default_n_max(const ModePhysics& phys, const SceneSpec& scene) {
    const double mean = scene.M * phys.q * phys.lambda;
    return static_cast<int>(std::ceil(mean + 10.0 * std::sqrt(std::max(mean, 1.0)) + 20.0));
}

PhotonPdf single_mode_pdf(const ModePhysics& phys, int n_max) {
    phys.validate();
    if (n_max < 0) {
        throw DomainError("n_max must be nonnegative");
    }
    std::vector<double> v(static_cast<std::size_t>(n_max) + 1);
    for (int n = 0; n <= n_max; ++n) {
        const double poisson = phys.q == 0.0 ? 0.0 : std::exp(log_poisson(n, phys.lambda));
        v[static_cast<std::size_t>(n)] = phys.q * poisson + (n == 0 ? 1.0 - phys.q : 0.0);
    }
    return PhotonPdf(std::move(v));
}

PhotonPdf multimode_pdf(const ModePhysics& phys, const SceneSpec& scene, std::optional<int> n_max) {
    phys.validate();
    scene.validate();
    auto build = [&](int bound) { return binomial_poisson_mixture(phys, scene.M, 0, bound); };
    if (!n_max) {
        int bound = default_n_max(phys, scene);
        for (;;) {
            std::vector<double> v = build(bound);
            if (sum(v) >= 1.0 - kAutoTail) {
                return PhotonPdf(std::move(v));
            }
            if (bound >= kMaxAutoNMax) {
                throw TruncationError(bound, kMaxAutoNMax);
            }
            bound = std::min(2 * bound, kMaxAutoNMax);
        }
    }
    if (*n_max < 0) {
        throw DomainError("n_max must be nonnegative");
    }
    std::vector<double> v = build(*n_max);
    if (sum(v) < 1.0 - kTailTol) {
        throw TruncationError(*n_max, required_n_max(default_n_max(phys, scene), build));
    }
    return PhotonPdf(std::move(v));
}

double vacuum_probability(const ModePhysics& phys, int modes) {
    phys.validate();
    if (modes < 0) {
        throw DomainError("mode count must be nonnegative");
    }
    // 1 - q + q e^-lambda = 1 - q (1 - e^-lambda)
    return std::exp(modes * std::log1p(phys.q * std::expm1(-phys.lambda)));
}

double zero_weight(const ModePhysics& phys, const SceneSpec& scene) {
    scene.validate();
    return vacuum_probability(phys, scene.M);
}

JointPdf joint_pdf(const ModePhysics& phys, const SceneSpec& scene, std::optional<int> n_max) {
    phys.validate();
    scene.validate();
    const int rest = scene.M - 1;
    auto build = [&](int bound) {
        std::vector<double> u0 = binomial_poisson_mixture(phys, rest, 0, bound);
        std::vector<double> u1 = binomial_poisson_mixture(phys, rest, 1, bound);
        for (std::size_t n = 0; n < u0.size(); ++n) {
            u0[n] = (1.0 - phys.q) * u0[n] + phys.q * u1[n];
        }
        return u0;
    };
    int bound = n_max ? *n_max : multimode_pdf(phys, scene).n_max();
    if (bound < 0) {
        throw DomainError("n_max must be nonnegative");
    }
    std::vector<double> u0;
    std::vector<double> u1;
    for (;;) {
        u0 = binomial_poisson_mixture(phys, rest, 0, bound);
        u1 = binomial_poisson_mixture(phys, rest, 1, bound);
        for (double& x : u0) x *= 1.0 - phys.q;
        for (double& x : u1) x *= phys.q;
        if (n_max || sum(u0) + sum(u1) >= 1.0 - kAutoTail || bound >= kMaxAutoNMax) break;
        bound = std::min(2 * bound, kMaxAutoNMax);
    }
    if (sum(u0) + sum(u1) < 1.0 - kTailTol) {
        throw TruncationError(bound, required_n_max(default_n_max(phys, scene), build));
    }
    return JointPdf{PhotonPdf(std::move(u0)), PhotonPdf(std::move(u1))};
}

ImageValues image_values(const ModePhysics& phys, const SceneSpec& scene) {
    scene.validate();
    const double base = vacuum_probability(phys, scene.M - 1);
    const double vacuum_one = 1.0 + phys.q * std::expm1(-phys.lambda);
    return {phys.q * std::exp(-phys.lambda) * base, phys.q * base * vacuum_one};
}

double theoretical_visibility(const ModePhysics& phys) {
    phys.validate();
    const double e = std::exp(-phys.lambda);
    const double denom = 1.0 - phys.q + phys.q * e + e;
    if (!(denom > 0.0)) {
        throw DomainError("visibility denominator vanishes");
    }
    return -std::expm1(-phys.lambda) * (phys.q - 1.0) / denom;
}

QualityTheory quality_theory(const ModePhysics& phys, const SceneSpec& scene) {
    const ImageValues iv = image_values(phys, scene);
    QualityTheory t;
    t.g1 = iv.g1;
    t.g0 = iv.g0;
    t.dg1 = iv.g1 - iv.g1 * iv.g1;
    t.dg0 = iv.g0 - iv.g0 * iv.g0;
    if (!(t.dg1 + t.dg0 > 0.0) || !(t.dg1 > 0.0)) {
        throw UndefinedMetricError("image fluctuations vanish (q=" + std::to_string(phys.q) +
                                   ", lambda=" + std::to_string(phys.lambda) + "); CNR is undefined");
    }
    t.v = (t.g1 - t.g0) / (t.g1 + t.g0);
    t.r = (t.g1 - t.g0) / std::sqrt(t.dg1 + t.dg0);
    t.rp = (t.g1 - t.g0) / std::sqrt(t.dg1);
    return t;
}

}  // namespace zpi
