#include "ms/errors.hpp"
#include "ms/prior.hpp"

#include "testbeds.hpp"

#include <doctest.h>

#include <memory>
#include <sstream>

using namespace ms;

namespace {

TokenSeq seq(std::vector<int32_t> v) { return TokenSeq(std::move(v)); }

} // namespace

TEST_CASE("exact_conditional: uniform joint") {
    const TabularExactPrior p(2, 2, std::vector<double>(4, 0.25));
    for (auto context : {seq({0, MASK}), seq({1, MASK}), seq({MASK, MASK})}) {
        const auto cond = exact_conditional(p, context, 1);
        CHECK(cond[0] == doctest::Approx(0.5));
        CHECK(cond[1] == doctest::Approx(0.5));
    }
}

TEST_CASE("exact_conditional: point mass") {
    // all mass on (1, 0)
    std::vector<double> joint(4, 0.0);
    joint[2] = 1.0; // index 1*2 + 0
    const TabularExactPrior p(2, 2, joint);
    const auto cond = exact_conditional(p, seq({1, MASK}), 1);
    CHECK(cond[0] == doctest::Approx(1.0));
    CHECK(cond[1] == doctest::Approx(0.0));
}

TEST_CASE("exact_conditional: hand-enumerated 0.8/0.2") {
    // P{(0,0)}=0.4 P{(0,1)}=0.1 P{(1,0)}=0.1 P{(1,1)}=0.4
    const TabularExactPrior p(2, 2, {0.4, 0.1, 0.1, 0.4});
    const auto cond = exact_conditional(p, seq({0, MASK}), 1);
    CHECK(cond[0] == doctest::Approx(0.4 / 0.5)); // 0.8
    CHECK(cond[1] == doctest::Approx(0.1 / 0.5)); // 0.2
}

TEST_CASE("exact_conditional ignores the slot's own value") {
    const TabularExactPrior p(2, 2, {0.4, 0.1, 0.1, 0.4});
    const auto cond = exact_conditional(p, seq({0, 1}), 1); // slot 1 filled: ignored
    CHECK(cond[0] == doctest::Approx(0.8));
}

TEST_CASE("exact_conditional: zero support raises") {
    std::vector<double> joint(4, 0.0);
    joint[0] = 1.0; // only (0,0)
    const TabularExactPrior p(2, 2, joint);
    CHECK_THROWS_AS(exact_conditional(p, seq({1, MASK}), 1), ZeroSupportError);
}

TEST_CASE("TabularExactPrior guards and validation") {
    CHECK_THROWS_AS(TabularExactPrior(2, 21, std::vector<double>(1, 1.0)), UsageError);
    CHECK_THROWS_AS(TabularExactPrior(2, 2, {0.5, 0.5, 0.5}), UsageError);
    CHECK_THROWS_AS(TabularExactPrior(2, 1, {-0.5, 1.5}), DataError);
}

TEST_CASE("TabularExactPrior predict on single-MASK equals exact_conditional") {
    Rng rng(5);
    std::vector<double> joint(8);
    for (auto& v : joint) v = rng.uniform();
    const TabularExactPrior p(2, 3, joint);
    for (int slot = 0; slot < 3; ++slot) {
        TokenSeq s = seq({1, 0, 1});
        s.slots[slot] = MASK;
        const auto pred = p.predict(s)[slot];
        const auto cond = exact_conditional(p, s, slot);
        for (int v = 0; v < 2; ++v) CHECK(pred[v] == doctest::Approx(cond[v]));
    }
}

TEST_CASE("predict returns valid categoricals for every masking pattern") {
    Rng rng(17);
    std::vector<double> joint(27);
    for (auto& v : joint) v = rng.uniform();
    const TabularExactPrior exact(3, 3, joint);

    std::vector<TokenSeq> train;
    for (int i = 0; i < 50; ++i) train.push_back(exact.sample(rng));
    const CountPrior counts = CountPrior::fit(train, 3);

    auto inner = std::make_shared<TabularExactPrior>(exact);
    const CorruptedPrior corrupted(inner, 0.3);

    const PriorModel* models[] = {&exact, &counts, &corrupted};
    for (const PriorModel* m : models) {
        for (int pattern = 0; pattern < 8; ++pattern) {
            TokenSeq s = seq({0, 2, 1});
            for (int i = 0; i < 3; ++i)
                if (pattern & (1 << i)) s.slots[i] = MASK;
            const auto dists = m->predict(s);
            for (int i = 0; i < 3; ++i) {
                if (s.slots[i] != MASK) {
                    CHECK(dists[i].empty());
                    continue;
                }
                double total = 0.0;
                for (double v : dists[i]) {
                    CHECK(v >= 0.0);
                    total += v;
                }
                CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("CountPrior concentrates on a repeated training sequence") {
    std::vector<TokenSeq> train(100, seq({1, 2, 3, 0}));
    const CountPrior p = CountPrior::fit(train, 4);
    for (int slot = 0; slot < 4; ++slot) {
        TokenSeq query = seq({1, 2, 3, 0});
        const int32_t target = query.slots[slot];
        query.slots[slot] = MASK;
        const auto dist = p.predict(query)[slot];
        // (100 + 1) / (100 + 4) with add-one smoothing
        CHECK(dist[target] == doctest::Approx(101.0 / 104.0));
        CHECK(dist[target] > 0.9);
    }
}

TEST_CASE("CountPrior: unseen context falls back to uniform smoothing") {
    const CountPrior p = CountPrior::fit({seq({0, 0, 0})}, 4);
    // context (left=3, right=3) never occurs in training
    const auto dist = p.predict(seq({3, MASK, 3}))[1];
    for (int v = 0; v < 4; ++v) CHECK(dist[v] == doctest::Approx(0.25));
}

TEST_CASE("CountPrior: all-MASK query returns smoothed per-slot marginals") {
    std::vector<TokenSeq> train;
    for (int i = 0; i < 30; ++i) train.push_back(seq({0, 1}));
    for (int i = 0; i < 10; ++i) train.push_back(seq({1, 1}));
    const CountPrior p = CountPrior::fit(train, 2);
    const auto dists = p.predict(seq({MASK, MASK}));
    CHECK(dists[0][0] == doctest::Approx((30.0 + 1) / (40.0 + 2)));
    CHECK(dists[0][1] == doctest::Approx((10.0 + 1) / (40.0 + 2)));
    CHECK(dists[1][1] == doctest::Approx((40.0 + 1) / (40.0 + 2)));
}

TEST_CASE("CountPrior rejects bad input") {
    CHECK_THROWS_AS(CountPrior::fit({}, 4), UsageError);
    CHECK_THROWS_AS(CountPrior::fit({seq({0, 1}), seq({0})}, 4), UsageError);
    CHECK_THROWS_AS(CountPrior::fit({seq({0, 9})}, 4), UsageError);
    CHECK_THROWS_AS(CountPrior::fit({seq({0, MASK})}, 4), UsageError);
}

TEST_CASE("CountPrior serialization round-trips deterministically") {
    std::vector<TokenSeq> train;
    Rng rng(3);
    for (int i = 0; i < 40; ++i) {
        std::vector<int32_t> s(5);
        for (auto& v : s) v = static_cast<int32_t>(rng.uniform() * 4);
        train.push_back(seq(std::move(s)));
    }
    const CountPrior p = CountPrior::fit(train, 4);

    std::stringstream first, second;
    p.save(first);
    const CountPrior back = CountPrior::load(first);
    back.save(second);
    CHECK(first.str() == second.str());

    const auto a = p.predict(seq({MASK, 2, MASK, 0, MASK}));
    const auto b = back.predict(seq({MASK, 2, MASK, 0, MASK}));
    for (int i = 0; i < 5; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("CorruptedPrior mixes toward uniform") {
    auto inner = std::make_shared<TabularExactPrior>(2, 2, std::vector<double>{0.4, 0.1, 0.1, 0.4});
    const CorruptedPrior none(inner, 0.0);
    const CorruptedPrior full(inner, 1.0);
    const CorruptedPrior half(inner, 0.5);

    const TokenSeq query = seq({0, MASK});
    const auto base = inner->predict(query)[1];
    CHECK(none.predict(query)[1] == base);
    const auto uni = full.predict(query)[1];
    CHECK(uni[0] == doctest::Approx(0.5));
    CHECK(uni[1] == doctest::Approx(0.5));
    const auto mid = half.predict(query)[1];
    CHECK(mid[0] == doctest::Approx(0.5 * base[0] + 0.25));

    CHECK_THROWS_AS(CorruptedPrior(inner, -0.1), UsageError);
    CHECK_THROWS_AS(CorruptedPrior(inner, 1.1), UsageError);
    CHECK_THROWS_AS(CorruptedPrior(nullptr, 0.5), UsageError);
}

TEST_CASE("sample_masked: no MASK slots returns input verbatim") {
    const TabularExactPrior p(2, 2, std::vector<double>(4, 0.25));
    Rng rng(1);
    const TokenSeq input = seq({1, 0});
    CHECK(sample_masked(p, input, rng) == input);
}

TEST_CASE("sample_masked: point-mass predictions are deterministic") {
    std::vector<double> joint(4, 0.0);
    joint[2] = 1.0; // (1, 0)
    const TabularExactPrior p(2, 2, joint);
    for (uint64_t s : {1ull, 2ull, 99ull}) {
        Rng rng(s);
        CHECK(sample_masked(p, seq({MASK, MASK}), rng) == seq({1, 0}));
    }
}

TEST_CASE("sample_masked: uniform joint empirical TV within 0.02 at 100k draws") {
    const TabularExactPrior p(2, 2, std::vector<double>(4, 0.25));
    Rng rng(2024);
    std::vector<TokenSeq> draws;
    draws.reserve(100000);
    const TokenSeq blank = TokenSeq::all_mask(2);
    for (int i = 0; i < 100000; ++i) draws.push_back(sample_masked(p, blank, rng));
    CHECK(testbed::empirical_tv(draws, p.table(), 2, 2) <= 0.02);
}

TEST_CASE("TabularExactPrior serialization round-trips") {
    const TabularExactPrior p(2, 2, {0.4, 0.1, 0.1, 0.4});
    std::stringstream ss;
    p.save(ss);
    const TabularExactPrior back = TabularExactPrior::load(ss);
    for (size_t i = 0; i < p.table().size(); ++i) CHECK(back.table()[i] == p.table()[i]);
}
