#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <vector>

#include "engage/rng.hpp"

using engage::Rng;

TEST_CASE("same seed same stream") {
    Rng a(123), b(123);
    for (int i = 0; i < 1000; ++i)
        CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 100; ++i)
        if (a.next_u64() == b.next_u64())
            ++same;
    CHECK(same == 0);
}

TEST_CASE("doubles in unit interval") {
    Rng r(7);
    for (int i = 0; i < 10000; ++i) {
        double x = r.next_double();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("uniform respects bounds") {
    Rng r(9);
    for (int i = 0; i < 1000; ++i) {
        double x = r.uniform(-0.5, 0.5);
        CHECK(x >= -0.5);
        CHECK(x < 0.5);
    }
}

TEST_CASE("next_index covers range") {
    Rng r(11);
    std::map<std::size_t, int> counts;
    for (int i = 0; i < 6000; ++i)
        ++counts[r.next_index(6)];
    CHECK(counts.size() == 6);
    for (const auto& [idx, c] : counts) {
        CHECK(idx < 6);
        // 6000 draws, expected 1000 each; 5 sigma is ~145
        CHECK(c > 800);
        CHECK(c < 1200);
    }
}

TEST_CASE("bernoulli edge probabilities") {
    Rng r(13);
    for (int i = 0; i < 100; ++i) {
        CHECK_FALSE(r.bernoulli(0.0));
        CHECK(r.bernoulli(1.0));
    }
}

TEST_CASE("shuffle is a permutation and deterministic") {
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i)
        v[static_cast<std::size_t>(i)] = i;
    auto v2 = v;
    Rng a(21), b(21);
    a.shuffle(v);
    b.shuffle(v2);
    CHECK(v == v2);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i)
        CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("derived streams are independent of consumption") {
    Rng a(5);
    Rng d1 = a.derive(3);
    a.next_u64();
    a.next_u64();
    Rng d2 = a.derive(3);
    CHECK(d1.next_u64() == d2.next_u64());

    Rng d3 = a.derive(4);
    CHECK(d3.next_u64() != a.derive(3).next_u64());
}

TEST_CASE("seed_mix separates nearby seeds") {
    CHECK(Rng::seed_mix(0, 0) != Rng::seed_mix(0, 1));
    CHECK(Rng::seed_mix(0, 0) != Rng::seed_mix(1, 0));
    CHECK(Rng::seed_mix(42, 7) == Rng::seed_mix(42, 7));
}
