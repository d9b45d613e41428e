#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zpi/fit.hpp"
#include "zpi/sim.hpp"

namespace zpi {

/// Flat key = value run configuration. '#' starts a comment; unknown keys are errors.
struct RunConfig {
    std::optional<double> q;
    std::optional<double> lambda;
    std::optional<double> nbar;
    std::optional<int> M;
    std::optional<std::filesystem::path> mask;
    std::optional<std::string> mask_digest;
    std::optional<int> width;
    std::optional<int> height;
    std::int64_t frames = 81'920;
    int pulses_per_frame = 25'960;
    std::uint64_t seed = 1;
    SimMode mode = SimMode::poisson;
    int threads = 1;
    std::vector<std::string> methods{"zpi", "kphoton", "cgi", "ffgi"};
    std::vector<int> k{1, 2, 3, 4};
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> patterns_file;
    std::optional<std::filesystem::path> frames_file;
    std::optional<std::filesystem::path> hist_file;
    SmoothKernel kernel = SmoothKernel::identity();
    bool renormalize = false;
    bool normalize = false;
    bool fit_sigma = false;
    int max_evaluations = 10'000;

    /// Reads key = value lines; errors name the line and key.
    static RunConfig parse(std::istream& is, const std::string& source = "config");
    static RunConfig load(const std::filesystem::path& path);

    /// Applies one key = value assignment (shared by files and command-line flags).
    void set(const std::string& key, const std::string& value);

    /// Mode count from M or the mask (which must agree when both are given).
    int resolve_M() const;
    /// lambda, or nbar / (M q) when nbar is given instead. Exactly one must be present.
    double resolve_lambda(int M) const;
    ModePhysics resolve_physics(int M) const;
    SmoothKernel effective_kernel() const { return renormalize ? kernel.renormalized() : kernel; }
};

/// Default output directory: $ZPI_OUT_DIR, else "zpi_out".
std::filesystem::path default_out_dir();

}  // namespace zpi
