#include "zpi/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zpi {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogFloor = -700.0;

double residual(const PhotonPdf& model, const PhotonPdf& hist) {
    const int top = std::max(model.n_max(), hist.n_max());
    double ss = 0.0;
    for (int n = 0; n <= top; ++n) {
        const double d = model(n) - hist(n);
        ss += d * d;
    }
    return ss;
}

// Search coordinates: x[0] = log q, x[1] = log lambda, x[2] = sigma (when fitted).
struct Point {
    std::vector<double> x;
    double f = kInf;
};

}  // namespace

void SmoothKernel::validate() const {
    if (!(l1 >= 0.0) || !(l2 >= 0.0) || !(l3 >= 0.0)) {
        throw DomainError("smoothing kernel taps must be nonnegative");
    }
}

SmoothKernel SmoothKernel::renormalized() const {
    validate();
    const double s = l1 + l2 + l3;
    if (s == 0.0) {
        throw DomainError("cannot renormalise an all-zero kernel");
    }
    return {l1 / s, l2 / s, l3 / s};
}

PhotonPdf smooth_pdf(const PhotonPdf& p, const SmoothKernel& k) {
    k.validate();
    if (k == SmoothKernel::identity()) {
        return p;
    }
    std::vector<double> out(p.size());
    for (int n = 0; n <= p.n_max(); ++n) {
        out[static_cast<std::size_t>(n)] = k.l1 * p(n - 1) + k.l2 * p(n) + k.l3 * p(n + 1);
    }
    return PhotonPdf(std::move(out));
}

PhotonPdf gaussian_smooth(const PhotonPdf& p, double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw DomainError("Gaussian width must be finite and nonnegative");
    }
    if (sigma == 0.0) {
        return p;
    }
    const int reach = static_cast<int>(std::ceil(5.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * reach + 1));
    double total = 0.0;
    for (int j = -reach; j <= reach; ++j) {
        const double w = std::exp(-0.5 * (j / sigma) * (j / sigma));
        taps[static_cast<std::size_t>(j + reach)] = w;
        total += w;
    }
    std::vector<double> out(p.size(), 0.0);
    double kept = 0.0;
    for (int n = 0; n <= p.n_max(); ++n) {
        double acc = 0.0;
        for (int j = -reach; j <= reach; ++j) {
            acc += taps[static_cast<std::size_t>(j + reach)] * p(n - j);
        }
        out[static_cast<std::size_t>(n)] = acc / total;
        kept += acc / total;
    }
    // Mass pushed below 0 or past n_max is folded back proportionally.
    if (kept > 0.0) {
        const double scale = p.mass() / kept;
        for (double& v : out) v *= scale;
    }
    return PhotonPdf(std::move(out));
}

PhotonPdf fit_model(const ModePhysics& phys, int M, const SmoothKernel& kernel, double sigma) {
    return gaussian_smooth(smooth_pdf(multimode_pdf(phys, SceneSpec{M}), kernel), sigma);
}

FitResult fit_params(const PhotonPdf& hist, int M, const ModePhysics& init, const SmoothKernel& kernel,
                     const FitOptions& opts) {
    SceneSpec{M}.validate();
    init.validate();
    kernel.validate();
    if (std::abs(hist.mass() - 1.0) > 1e-6) {
        throw DataError("histogram must be normalised (mass " + std::to_string(hist.mass()) + ")");
    }
    if (init.q <= 0.0 || init.lambda <= 0.0) {
        throw DomainError("fit needs a starting point with q > 0 and lambda > 0");
    }

    // Parameter sets whose mean count dwarfs the histogram support cannot be near the optimum.
    const double mean_cap = 10.0 * (hist.n_max() + 10.0);
    const std::size_t dims = opts.fit_gaussian_width ? 3 : 2;

    FitResult out;
    auto clamp_point = [&](std::vector<double>& x) {
        x[0] = std::clamp(x[0], kLogFloor, 0.0);
        x[1] = std::max(x[1], kLogFloor);
        if (dims == 3) x[2] = std::max(x[2], 0.0);
    };
    struct BudgetExhausted {};
    auto evaluate = [&](std::vector<double> x) {
        if (out.evaluations >= opts.max_evaluations) throw BudgetExhausted{};
        clamp_point(x);
        ++out.evaluations;
        const ModePhysics phys{std::exp(x[0]), std::exp(x[1])};
        if (!std::isfinite(phys.lambda) || M * phys.q * phys.lambda > mean_cap) {
            return Point{std::move(x), kInf};
        }
        const double sigma = dims == 3 ? x[2] : 0.0;
        const double f = residual(fit_model(phys, M, kernel, sigma), hist);
        return Point{std::move(x), f};
    };
    auto better = [&](const Point& trial, const Point& current) {
        return trial.f < current.f - opts.residual_tol * current.f;
    };

    std::vector<double> steps(dims, opts.initial_step);
    std::vector<double> x0{std::log(init.q), std::log(init.lambda)};
    if (dims == 3) x0.push_back(opts.initial_sigma);
    Point base = evaluate(x0);
    out.residual_history.push_back(base.f);

    auto explore = [&](Point from) {
        for (std::size_t i = 0; i < dims; ++i) {
            for (double dir : {1.0, -1.0}) {
                std::vector<double> x = from.x;
                x[i] += dir * steps[i];
                Point trial = evaluate(std::move(x));
                if (better(trial, from)) {
                    from = std::move(trial);
                    break;
                }
            }
        }
        return from;
    };

    auto finish = [&](const Point& p) {
        out.params = ModePhysics{std::exp(p.x[0]), std::exp(p.x[1])};
        out.sigma = dims == 3 ? p.x[2] : 0.0;
        out.residual = p.f;
        out.nbar = M * out.params.q * out.params.lambda;
        out.degenerate = hist(0) >= 1.0 - 1e-12 || zero_weight(out.params, SceneSpec{M}) >= 1.0 - kTailTol;
    };

    try {
        for (;;) {
            if (*std::max_element(steps.begin(), steps.end()) < opts.step_tol) {
                out.converged = true;
                break;
            }
            Point moved = explore(base);
            if (!better(moved, base)) {
                for (double& h : steps) h *= 0.5;
                continue;
            }
            // Pattern move: keep stepping along the last improving direction while it pays.
            for (;;) {
                std::vector<double> ahead(dims);
                for (std::size_t i = 0; i < dims; ++i) ahead[i] = 2.0 * moved.x[i] - base.x[i];
                base = std::move(moved);
                out.residual_history.push_back(base.f);
                Point probe = explore(evaluate(std::move(ahead)));
                if (!better(probe, base)) break;
                moved = std::move(probe);
            }
        }
    } catch (const BudgetExhausted&) {
    }

    finish(base);
    if (!out.converged) {
        throw FitError("fit did not converge within " + std::to_string(opts.max_evaluations) +
                           " evaluations (best residual " + std::to_string(out.residual) + ")",
                       out);
    }
    return out;
}

}  // namespace zpi
