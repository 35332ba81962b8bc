#include <catch2/catch.hpp>

#include <set>

#include <editkit/rng.hpp>

using editkit::CounterRng;

TEST_CASE("counter rng is a pure function of seed, stream, counter", "[rng]") {
    const CounterRng a(42, 7);
    const CounterRng b(42, 7);
    for (std::uint64_t c = 0; c < 64; ++c) {
        REQUIRE(a.bits(c) == b.bits(c));
    }
    const CounterRng other_seed(43, 7);
    const CounterRng other_stream(42, 8);
    bool seed_differs = false;
    bool stream_differs = false;
    for (std::uint64_t c = 0; c < 64; ++c) {
        seed_differs = seed_differs || a.bits(c) != other_seed.bits(c);
        stream_differs = stream_differs || a.bits(c) != other_stream.bits(c);
    }
    REQUIRE(seed_differs);
    REQUIRE(stream_differs);
}

TEST_CASE("counter rng draws are order-independent and well spread", "[rng]") {
    const CounterRng rng(1, 1);
    std::set<std::uint64_t> forward;
    for (std::uint64_t c = 0; c < 1000; ++c) {
        forward.insert(rng.bits(c));
    }
    REQUIRE(forward.size() == 1000); // no collisions in a small window
    // Reading backwards gives the same values.
    for (std::uint64_t c = 1000; c-- > 0;) {
        REQUIRE(forward.contains(rng.bits(c)));
    }
}

TEST_CASE("bounded draws stay in range", "[rng]") {
    const CounterRng rng(9, 2);
    for (std::uint64_t c = 0; c < 2000; ++c) {
        const auto v = rng.below(c, 17);
        REQUIRE(v < 17);
        const int r = rng.range(c, -5, 5);
        REQUIRE(r >= -5);
        REQUIRE(r <= 5);
        const double u = rng.unit(c);
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        const float s = rng.symmetric(c, 0.25f);
        REQUIRE(s >= -0.25f);
        REQUIRE(s < 0.25f);
    }
    REQUIRE(rng.below(3, 0) == 0);
    REQUIRE(rng.range(3, 4, 4) == 4);
}

TEST_CASE("range endpoints are reachable", "[rng]") {
    const CounterRng rng(5, 3);
    bool lo = false;
    bool hi = false;
    for (std::uint64_t c = 0; c < 4000; ++c) {
        const int v = rng.range(c, 0, 3);
        lo = lo || v == 0;
        hi = hi || v == 3;
    }
    REQUIRE(lo);
    REQUIRE(hi);
}
