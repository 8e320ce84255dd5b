#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "scc/layout.hpp"

using namespace scc;

TEST_CASE("cfo slots: segments of a position are consecutive") {
    const SequenceLayout lay(2, 2, 4, 2, CodingOrder::ChannelFirst);
    CHECK(lay.slot_of({0, 0, 0}) == 0);
    CHECK(lay.slot_of({0, 0, 1}) == 1);
    CHECK(lay.slot_of({0, 1, 0}) == 2);
}

TEST_CASE("sfo slots: whole segment before the next one") {
    const SequenceLayout lay(2, 2, 4, 2, CodingOrder::SpatialFirst);
    CHECK(lay.slot_of({0, 0, 1}) == 4);
    CHECK(lay.slot_of({1, 1, 0}) == 3);
}

TEST_CASE("slot_of is a bijection for every admissible small layout") {
    for (CodingOrder order : {CodingOrder::ChannelFirst, CodingOrder::SpatialFirst})
        for (int h = 1; h <= 4; ++h)
            for (int w = 1; w <= 4; ++w)
                for (int n_cs : {1, 2, 4}) {
                    const SequenceLayout lay(h, w, 8, n_cs, order);
                    std::set<int64_t> seen;
                    for (int i = 0; i < h; ++i)
                        for (int j = 0; j < w; ++j)
                            for (int k = 0; k < n_cs; ++k) {
                                const int64_t s = lay.slot_of({i, j, k});
                                REQUIRE(s >= 0);
                                REQUIRE(s < lay.seq_len());
                                REQUIRE(seen.insert(s).second);
                                const SeqElement back = lay.coords_of(s);
                                REQUIRE(back == SeqElement{i, j, k});
                            }
                    REQUIRE(static_cast<int64_t>(seen.size()) == lay.seq_len());
                }
}

TEST_CASE("cfo keeps a position's segments adjacent; sfo orders segments in blocks") {
    const SequenceLayout cfo(3, 3, 4, 4, CodingOrder::ChannelFirst);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k + 1 < 4; ++k)
                CHECK(cfo.slot_of({i, j, k + 1}) == cfo.slot_of({i, j, k}) + 1);

    const SequenceLayout sfo(3, 3, 4, 4, CodingOrder::SpatialFirst);
    for (int k = 0; k + 1 < 4; ++k) {
        int64_t max_k = -1, min_k1 = sfo.seq_len();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                max_k = std::max(max_k, sfo.slot_of({i, j, k}));
                min_k1 = std::min(min_k1, sfo.slot_of({i, j, k + 1}));
            }
        CHECK(max_k < min_k1);
    }
}

TEST_CASE("single-segment layouts coincide across orders") {
    const SequenceLayout cfo(4, 3, 8, 1, CodingOrder::ChannelFirst);
    const SequenceLayout sfo(4, 3, 8, 1, CodingOrder::SpatialFirst);
    for (int64_t s = 0; s < cfo.seq_len(); ++s) CHECK(cfo.coords_of(s) == sfo.coords_of(s));
}

TEST_CASE("to_sequence prepends a zero start token") {
    const SequenceLayout lay(1, 1, 2, 2, CodingOrder::ChannelFirst);
    const Tensor latent({1, 1, 2}, {3.5f, -2.0f});
    const Tensor seq = to_sequence(lay, latent);
    REQUIRE(seq.shape == Shape{3, 1});
    CHECK(seq.data[0] == 0.0f);
    CHECK(seq.data[1] == 3.5f);
    CHECK(seq.data[2] == -2.0f);
}

TEST_CASE("zero latent maps to zero sequence and back") {
    const SequenceLayout lay(3, 2, 4, 2, CodingOrder::SpatialFirst);
    const Tensor latent = Tensor::zeros({3, 2, 4});
    const Tensor seq = to_sequence(lay, latent);
    for (float v : seq.data) CHECK(v == 0.0f);
    CHECK(from_sequence(lay, seq).same_bits(latent));
}

TEST_CASE("sequence roundtrip on random latents, both orders") {
    SeededRng rng(4);
    for (CodingOrder order : {CodingOrder::ChannelFirst, CodingOrder::SpatialFirst})
        for (int n_cs : {1, 2, 4}) {
            const SequenceLayout lay(4, 4, 8, n_cs, order);
            const Tensor latent = seeded_normal(rng, {4, 4, 8}, 2.0);
            CHECK(from_sequence(lay, to_sequence(lay, latent)).same_bits(latent));
        }
}

TEST_CASE("single nonzero element lands at its slot") {
    const SequenceLayout lay(2, 2, 4, 2, CodingOrder::ChannelFirst);
    Tensor latent = Tensor::zeros({2, 2, 4});
    // element (1, 0, 1) covers channels [2, 4)
    latent.data[(1 * 2 + 0) * 4 + 2] = 9.0f;
    const Tensor seq = to_sequence(lay, latent);
    const int64_t slot = lay.slot_of({1, 0, 1});
    for (int64_t r = 0; r < seq.dim(0); ++r)
        for (float v : seq.row(r)) {
            if (r == slot + 1 && v == 9.0f) continue;
            CHECK(v == 0.0f);
        }
}

TEST_CASE("out-of-bounds coordinates rejected") {
    const SequenceLayout lay(2, 2, 4, 2, CodingOrder::ChannelFirst);
    CHECK_THROWS_AS(lay.slot_of({2, 0, 0}), std::out_of_range);
    CHECK_THROWS_AS(lay.slot_of({0, 0, 2}), std::out_of_range);
    CHECK_THROWS_AS(lay.coords_of(8), std::out_of_range);
}

TEST_CASE("layout rejects indivisible channel counts") {
    CHECK_THROWS_AS(SequenceLayout(2, 2, 5, 2, CodingOrder::ChannelFirst), std::invalid_argument);
}

TEST_CASE("window_context restricts to the causal spatial rectangle") {
    const SequenceLayout lay(4, 4, 4, 2, CodingOrder::ChannelFirst);
    // the window of (i, j) spans [i-R+1, i] x [j-R+1, j]; it holds the full
    // coding prefix exactly when no prior element lies right of column j,
    // i.e. for row-0 targets and last-column targets
    for (int64_t s = 0; s < lay.seq_len(); ++s) {
        const SeqElement t = lay.coords_of(s);
        const auto ctx = window_context(lay, 8, 8, t);
        if (t.i == 0 || t.j == lay.W - 1) {
            REQUIRE(static_cast<int64_t>(ctx.size()) == s);
            for (int64_t u = 0; u < s; ++u) CHECK(lay.slot_of(ctx[static_cast<size_t>(u)]) == u);
        } else {
            // interior targets: everything in the rectangle and prior, nothing else
            CHECK(static_cast<int64_t>(ctx.size()) < s);
            for (const SeqElement& e : ctx) {
                CHECK(e.i <= t.i);
                CHECK(e.j <= t.j);
                CHECK(lay.slot_of(e) < s);
            }
        }
    }
    // single-column layouts are always fully covered
    const SequenceLayout col(6, 1, 4, 2, CodingOrder::ChannelFirst);
    for (int64_t s = 0; s < col.seq_len(); ++s)
        CHECK(static_cast<int64_t>(window_context(col, 8, 8, col.coords_of(s)).size()) == s);
    // cropped window: only the 2x2 neighborhood above-left of the target
    const auto ctx = window_context(lay, 2, 2, {3, 3, 0});
    for (const SeqElement& e : ctx) {
        CHECK(e.i >= 2);
        CHECK(e.j >= 2);
    }
    CHECK(ctx.size() == 6);  // 3 positions * 2 segments before (3,3,0) in cfo
}
