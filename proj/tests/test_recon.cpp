#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "zpi/error.hpp"
#include "zpi/io.hpp"
#include "zpi/quality.hpp"
#include "zpi/recon.hpp"
#include "zpi/stats.hpp"

using namespace zpi;

namespace {

ObjectMask checker_mask(int w, int h) {
    std::vector<std::uint8_t> v(static_cast<std::size_t>(w * h));
    for (int i = 0; i < w * h; ++i) v[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((i / w + i % w) % 2);
    return ObjectMask(w, h, std::move(v));
}

void check_close(const Image& a, const Image& b, double rel) {
    REQUIRE(a.pixels() == b.pixels());
    for (std::size_t p = 0; p < a.pixels(); ++p) {
        const double scale = std::max({std::abs(a[p]), std::abs(b[p]), 1e-300});
        CHECK(std::abs(a[p] - b[p]) <= rel * scale);
    }
}

// Direct per-pixel covariance <w u> - <w><u>, without the shared accumulator.
std::vector<double> direct_covariance(const PatternSet& patterns, std::span<const FrameRecord> frames,
                                      const std::vector<double>& weight) {
    const std::size_t pixels = static_cast<std::size_t>(patterns.width() * patterns.height());
    std::vector<double> out(pixels);
    const double N = static_cast<double>(frames.size());
    for (std::size_t p = 0; p < pixels; ++p) {
        double wu = 0.0, w = 0.0, u = 0.0;
        for (std::size_t f = 0; f < frames.size(); ++f) {
            const double up = patterns[frames[f].pattern_index][p] ? 1.0 : 0.0;
            wu += weight[f] * up;
            w += weight[f];
            u += up;
        }
        out[p] = wu / N - (w / N) * (u / N);
    }
    return out;
}

Experiment small_run(double q, double lambda, std::int64_t frames, std::uint64_t seed) {
    SimConfig cfg;
    cfg.phys = {q, lambda};
    cfg.frames = frames;
    cfg.seed = seed;
    cfg.threads = 2;
    return run_experiment(checker_mask(4, 4), cfg);
}

}  // namespace

TEST_CASE("Image rejects bad input") {
    CHECK_THROWS(Image(2, 2, {1.0, 2.0}));
    CHECK_THROWS(Image(1, 2, {1.0, std::nan("")}));
    const Image img(3, 2, {0, 1, 2, 3, 4, 5});
    CHECK(img.at(2, 1) == 5.0);
}

TEST_CASE("all-zero patterns give an all-zero ZPI image") {
    const auto patterns = generate_patterns(4, 4, 10, 0.0, 1);
    std::vector<FrameRecord> frames;
    for (int i = 0; i < 10; ++i) frames.push_back({i, 0, std::nullopt});
    const auto img = zpi_reconstruct(patterns, frames);
    for (double v : img.values()) CHECK(v == 0.0);
}

TEST_CASE("kphoton_reconstruct is the conditional mean of matching patterns") {
    const auto patterns = generate_patterns(3, 3, 4, 0.5, 11);
    const std::vector<FrameRecord> frames = {{0, 1, 3}, {1, 0, {}}, {2, 1, 0}, {3, 2, 1}, {1, 1, 5}};
    const auto img = kphoton_reconstruct(patterns, frames, 1);
    for (std::size_t p = 0; p < 9; ++p) {
        const double expect = (patterns[0][p] + patterns[2][p] + patterns[1][p]) / 3.0;
        CHECK(img[p] == doctest::Approx(expect));
    }
    const auto zpi = zpi_reconstruct(patterns, frames);
    const auto k0 = kphoton_reconstruct(patterns, frames, 0);
    CHECK(std::equal(zpi.values().begin(), zpi.values().end(), k0.values().begin()));
}

TEST_CASE("empty selection names k") {
    const auto patterns = generate_patterns(2, 2, 1, 0.5, 1);
    const std::vector<FrameRecord> frames = {{0, 0, {}}};
    try {
        kphoton_reconstruct(patterns, frames, 9);
        FAIL("expected EmptySelectionError");
    } catch (const EmptySelectionError& e) {
        CHECK(e.k() == 9);
    }
    CHECK_THROWS_AS(kphoton_reconstruct(patterns, frames, -1), DomainError);
}

TEST_CASE("4x4 synthetic run: ZPI pixel means match the closed form within 3 sigma") {
    const double q = 0.1;
    const double lambda = 1.0;
    const auto exp = small_run(q, lambda, 1'000'000, 1);
    const auto mask = checker_mask(4, 4);
    const auto img = zpi_reconstruct(exp.patterns, exp.frames, 2);
    const double z = 1.0 - q + q * std::exp(-lambda);
    const double object = q * std::exp(-lambda) / z;
    const std::int64_t selected =
        std::count_if(exp.frames.begin(), exp.frames.end(), [](const FrameRecord& f) { return f.n == 0; });
    for (std::size_t p = 0; p < 16; ++p) {
        const double mean = mask[p] ? object : q;
        const double sd = std::sqrt(mean * (1.0 - mean) / static_cast<double>(selected));
        CAPTURE(p);
        CHECK(std::abs(img[p] - mean) <= 3.0 * sd);
    }
}

TEST_CASE("k-photon pixel means follow joint_pdf conditionals") {
    const double q = 0.1;
    const double lambda = 1.0;
    const auto exp = small_run(q, lambda, 1'000'000, 2);
    const auto mask = checker_mask(4, 4);
    const auto joint = joint_pdf({q, lambda}, {mask.count()});
    for (int k = 1; k <= 2; ++k) {
        const auto img = kphoton_reconstruct(exp.patterns, exp.frames, k);
        const double p_k = joint.row_u0(k) + joint.row_u1(k);
        const double object = joint.row_u1(k) / p_k;
        const double selected = static_cast<double>(
            std::count_if(exp.frames.begin(), exp.frames.end(), [k](const FrameRecord& f) { return f.n == k; }));
        for (std::size_t p = 0; p < 16; ++p) {
            const double mean = mask[p] ? object : q;
            CAPTURE(k);
            CAPTURE(p);
            CHECK(std::abs(img[p] - mean) <= 3.0 * std::sqrt(mean * (1.0 - mean) / selected));
        }
    }
}

TEST_CASE("CGI") {
    SUBCASE("constant n gives a zero image") {
        const auto patterns = generate_patterns(4, 4, 50, 0.5, 3);
        std::vector<FrameRecord> frames;
        for (int i = 0; i < 50; ++i) frames.push_back({i, 3, 0});
        const auto img = cgi_reconstruct(patterns, frames);
        for (double v : img.values()) CHECK(std::abs(v) < 1e-12);
    }
    SUBCASE("fewer than two frames") {
        const auto patterns = generate_patterns(2, 2, 1, 0.5, 3);
        const std::vector<FrameRecord> frames = {{0, 1, 0}};
        CHECK_THROWS_AS(cgi_reconstruct(patterns, frames), DataError);
    }
    SUBCASE("4x4 synthetic run: object pixels carry lambda q (1 - q)") {
        const double q = 0.1;
        const double lambda = 1.0;
        const auto exp = small_run(q, lambda, 1'000'000, 3);
        const auto mask = checker_mask(4, 4);
        const auto img = cgi_reconstruct(exp.patterns, exp.frames, 3);
        std::vector<double> n(exp.frames.size());
        for (std::size_t f = 0; f < n.size(); ++f) n[f] = exp.frames[f].n;
        const auto direct = direct_covariance(exp.patterns, exp.frames, n);
        for (std::size_t p = 0; p < 16; ++p) {
            CHECK(img[p] == doctest::Approx(direct[p]).epsilon(1e-9));
            if (mask[p]) {
                CHECK(img[p] > 0.0);
                CHECK(img[p] == doctest::Approx(lambda * q * (1 - q)).epsilon(0.05));
            } else {
                CHECK(std::abs(img[p]) < 0.005);
            }
        }
    }
}

TEST_CASE("FFGI") {
    // Two pixels, all four pattern outcomes, fixed timestamps, N1 = 9.
    const std::vector<std::uint8_t> bits = {0x00, 0x40, 0x80, 0xC0};  // (u0,u1) = 00, 01, 10, 11
    const PatternSet patterns(2, 1, 4, 0.5, 0, bits);
    SUBCASE("exhaustive 2-pixel hand computation") {
        // x = 9 / (first + 1): 0, 3, 9, 1; <x> = 13/4
        const std::vector<FrameRecord> frames = {{0, 0, {}}, {1, 1, 2}, {2, 2, 0}, {3, 1, 8}};
        const auto img = ffgi_reconstruct(patterns, frames, 9);
        CHECK(img[0] == doctest::Approx(2.5 - 13.0 / 8.0));
        CHECK(img[1] == doctest::Approx(1.0 - 13.0 / 8.0));
        CHECK(img[0] > img[1]);
    }
    SUBCASE("no detections give a zero image") {
        const std::vector<FrameRecord> frames = {{0, 0, {}}, {1, 0, {}}, {3, 0, {}}};
        const auto img = ffgi_reconstruct(patterns, frames, 9);
        for (double v : img.values()) CHECK(v == 0.0);
    }
    SUBCASE("missing first-pulse data") {
        const std::vector<FrameRecord> frames = {{0, 0, {}}, {1, 2, {}}};
        CHECK_THROWS_AS(ffgi_reconstruct(patterns, frames, 9), DataError);
    }
}

TEST_CASE("normalize_max") {
    const Image img(2, 2, {2.0, 1.0, -1.0, 0.5});
    const auto half = normalize_max(img);
    CHECK(half[0] == 1.0);
    CHECK(half[1] == 0.5);
    CHECK(half[2] == -0.5);
    const auto again = normalize_max(half);
    CHECK(std::equal(again.values().begin(), again.values().end(), half.values().begin()));
    CHECK_THROWS_AS(normalize_max(Image(2, 2)), DataError);
}

TEST_CASE("reconstructions are invariant to frame order and thread count") {
    const auto exp = small_run(0.2, 0.7, 50'000, 5);
    auto shuffled = exp.frames;
    std::mt19937_64 rng(12);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    check_close(zpi_reconstruct(exp.patterns, exp.frames), zpi_reconstruct(exp.patterns, shuffled), 1e-10);
    check_close(kphoton_reconstruct(exp.patterns, exp.frames, 2), kphoton_reconstruct(exp.patterns, shuffled, 2),
                1e-10);
    check_close(cgi_reconstruct(exp.patterns, exp.frames), cgi_reconstruct(exp.patterns, shuffled), 1e-10);
    check_close(ffgi_reconstruct(exp.patterns, exp.frames, 25'960), ffgi_reconstruct(exp.patterns, shuffled, 25'960),
                1e-10);

    // Block-ordered reduction: thread count does not change a single bit.
    const auto big = small_run(0.2, 0.7, 70'000, 6);
    for (int threads : {2, 3, 7}) {
        auto same = [](const Image& a, const Image& b) {
            return std::equal(a.values().begin(), a.values().end(), b.values().begin());
        };
        CHECK(same(zpi_reconstruct(big.patterns, big.frames, 1), zpi_reconstruct(big.patterns, big.frames, threads)));
        CHECK(same(cgi_reconstruct(big.patterns, big.frames, 1), cgi_reconstruct(big.patterns, big.frames, threads)));
        CHECK(same(ffgi_reconstruct(big.patterns, big.frames, 25'960, 1),
                   ffgi_reconstruct(big.patterns, big.frames, 25'960, threads)));
    }
}

TEST_CASE("reference regime at nbar = 1.6") {
    const auto mask = io::read_mask(std::filesystem::path(ZPI_TEST_DATA) / "note_32x32.pbm");
    SimConfig cfg;
    cfg.phys = {0.001, 1.6 / (394 * 0.001)};
    cfg.frames = 81'920;
    cfg.seed = 1;
    const auto exp = run_experiment(mask, cfg);

    const std::int64_t zeros =
        std::count_if(exp.frames.begin(), exp.frames.end(), [](const FrameRecord& f) { return f.n == 0; });
    REQUIRE(zeros >= 10'000);

    const auto zpi = zpi_reconstruct(exp.patterns, exp.frames);
    const double v0 = visibility(class_moments(zpi, mask));
    CHECK(v0 < 0.0);
    CHECK(std::abs(v0 - theoretical_visibility(cfg.phys)) <= 0.05);

    int crossing = -1;
    double previous = v0;
    for (int k = 1; k <= 4; ++k) {
        const double vk = visibility(class_moments(kphoton_reconstruct(exp.patterns, exp.frames, k), mask));
        MESSAGE("k = " << k << ": V = " << vk);
        if (crossing < 0 && previous < 0.0 && vk > 0.0) crossing = k;
        previous = vk;
    }
    MESSAGE("sign crossing at k = " << crossing);
    CHECK(crossing >= 1);
    CHECK(previous > 0.0);

    const auto cgi = cgi_reconstruct(exp.patterns, exp.frames);
    const auto ffgi = ffgi_reconstruct(exp.patterns, exp.frames, cfg.pulses_per_frame);
    CHECK(visibility(class_moments(cgi, mask)) > 0.0);
    CHECK(visibility(class_moments(ffgi, mask)) > 0.0);
    const auto q_zpi = empirical_quality(zpi, mask);
    const auto q_ffgi = empirical_quality(ffgi, mask);
    MESSAGE("|R| zpi " << std::abs(q_zpi.r) << ", ffgi " << std::abs(q_ffgi.r));
    CHECK(std::abs(q_zpi.r) > std::abs(q_ffgi.r));
}
