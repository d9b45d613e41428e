#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "zpi/rng.hpp"

using namespace zpi;

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter streams are random-access and independent of consumption order") {
    CounterStream seq(42, StreamTag::frame, 7);
    CounterStream random_access(42, StreamTag::frame, 7);
    for (std::uint64_t i = 0; i < 1000; ++i) {
        CHECK(seq() == random_access.word_at(i));
    }
}

TEST_CASE("streams differ by seed, tag and index") {
    std::set<std::uint32_t> first_words;
    for (std::uint64_t seed : {1ull, 2ull, 1ull << 40}) {
        for (auto tag : {StreamTag::pattern, StreamTag::frame}) {
            for (std::uint64_t index : {0ull, 1ull, 1ull << 33}) {
                first_words.insert(CounterStream(seed, tag, index).word_at(0));
            }
        }
    }
    CHECK(first_words.size() == 18);
}

TEST_CASE("uniform draws lie strictly inside the unit interval") {
    CounterStream s(9, StreamTag::frame, 0);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform_open();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("bounded integers cover the range uniformly") {
    CounterStream s(3, StreamTag::pattern, 11);
    std::array<int, 7> counts{};
    for (int i = 0; i < 70000; ++i) {
        const auto v = s.below(7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    // Binomial sd is ~90 per bin.
    for (int c : counts) CHECK(std::abs(c - 10000) < 450);
}
