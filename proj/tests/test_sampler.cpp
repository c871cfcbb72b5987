#include "ms/errors.hpp"
#include "ms/sampler.hpp"

#include "testbeds.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

using namespace ms;

namespace {

TokenSeq seq(std::vector<int32_t> v) { return TokenSeq(std::move(v)); }

SamplerConfig base_config(int t_steps) {
    SamplerConfig cfg;
    cfg.T = t_steps;
    cfg.T_star = t_steps;
    return cfg;
}

// Point mass on `target` with a uniform floor so no conditioning event has
// probability zero.
TabularExactPrior soft_point_mass(const TokenSeq& target, int k, double floor_mass) {
    size_t states = 1;
    for (int i = 0; i < target.size(); ++i) states *= k;
    std::vector<double> joint(states, floor_mass / static_cast<double>(states));
    size_t idx = 0;
    for (int i = 0; i < target.size(); ++i)
        idx = idx * k + static_cast<size_t>(target.slots[i]);
    joint[idx] += 1.0 - floor_mass;
    return TabularExactPrior(k, target.size(), std::move(joint));
}

} // namespace

TEST_CASE("naive_decode: deterministic under a point-mass prior") {
    const TabularExactPrior p = soft_point_mass(seq({1, 0}), 2, 0.0);
    const MaskSchedule sched = cosine_mask_counts(2, 4);
    const SamplerConfig cfg = base_config(4);
    for (uint64_t s : {0ull, 7ull, 123ull}) {
        Rng rng(s);
        const auto out = naive_decode(p, sched, cfg, rng);
        CHECK(out.seq == seq({1, 0}));
        CHECK(out.seq.mask_free());
    }
}

TEST_CASE("naive_decode: T=1 draws from the product of marginals") {
    // correlated joint whose marginals are uniform; a single step must
    // produce the product distribution, not the joint
    const auto joint = testbed::coupled_chain_joint(2, 1.5);
    const TabularExactPrior p(2, 2, joint);
    const auto product = testbed::product_of_marginals(joint, 2, 2);

    const MaskSchedule sched = cosine_mask_counts(2, 1);
    const SamplerConfig cfg = base_config(1);
    Rng rng(11);
    std::vector<TokenSeq> draws;
    draws.reserve(100000);
    for (int i = 0; i < 100000; ++i)
        draws.push_back(naive_decode(p, sched, cfg, rng).seq);

    CHECK(testbed::empirical_tv(draws, product, 2, 2) <= 0.02);
    // sanity: the product is NOT the joint here
    CHECK(tv_distance(product, joint) > 0.05);
}

TEST_CASE("naive_decode: consistent on an independent joint (0.7/0.3 marginals)") {
    const auto joint = testbed::independent_joint({{0.7, 0.3}, {0.7, 0.3}});
    const TabularExactPrior p(2, 2, joint);
    const MaskSchedule sched = cosine_mask_counts(2, 10);
    const SamplerConfig cfg = base_config(10);

    Rng rng(5);
    std::vector<TokenSeq> draws;
    draws.reserve(100000);
    for (int i = 0; i < 100000; ++i)
        draws.push_back(naive_decode(p, sched, cfg, rng).seq);
    CHECK(testbed::empirical_tv(draws, joint, 2, 2) <= 0.02);
}

TEST_CASE("naive_decode never changes a slot after it is first kept") {
    const TabularExactPrior p(2, 8, testbed::coupled_chain_joint(8, 1.0));
    const MaskSchedule sched = cosine_mask_counts(8, 10);
    const SamplerConfig cfg = base_config(10);

    for (uint64_t s = 0; s < 20; ++s) {
        Rng rng(s);
        TokenSeq committed = TokenSeq::all_mask(8);
        naive_decode(p, sched, cfg, rng,
                     [&](int, const TokenSeq& filled, const MaskMatrix& kept) {
                         for (int i = 0; i < 8; ++i) {
                             if (committed.slots[i] != MASK) {
                                 CHECK(filled.slots[i] == committed.slots[i]);
                                 CHECK(kept.bits[i] == 1); // pinned slots stay kept
                             }
                             if (kept.bits[i]) committed.slots[i] = filled.slots[i];
                         }
                     });
    }
}

TEST_CASE("token_critic_decode: constant critic keeps everything at the final step") {
    struct ConstantCritic final : CriticFn {
        ConfidenceVector score(const TokenSeq& s) const override {
            return ConfidenceVector(std::vector<double>(s.size(), 1.0),
                                    ConfidenceKind::ExternalCritic);
        }
    };
    const TabularExactPrior p(2, 4, testbed::coupled_chain_joint(4, 0.5));
    const MaskSchedule sched = cosine_mask_counts(4, 5);
    const SamplerConfig cfg = base_config(5);
    ConstantCritic critic;
    Rng rng(3);
    int last_kept = -1;
    const TokenSeq out = token_critic_decode(
        p, critic, sched, cfg, rng,
        [&](int, const TokenSeq&, const MaskMatrix& kept) { last_kept = kept.ones(); });
    CHECK(out.mask_free());
    CHECK(last_kept == 4);
}

TEST_CASE("token_critic_decode: oracle critic on a point mass is deterministic") {
    const TabularExactPrior p = soft_point_mass(seq({0, 1, 0}), 2, 1e-6);
    const ExactOracleCritic critic(p);
    const MaskSchedule sched = cosine_mask_counts(3, 5);
    const SamplerConfig cfg = base_config(5);
    for (uint64_t s : {1ull, 4ull, 9ull}) {
        Rng rng(s);
        CHECK(token_critic_decode(p, critic, sched, cfg, rng) == seq({0, 1, 0}));
    }
}

TEST_CASE("self_critic_confidence: all tokens at their argmax give uniform C") {
    const TokenSeq target = seq({1, 0, 1, 1});
    const TabularExactPrior p = soft_point_mass(target, 2, 1e-6);
    const Codebook cb = testbed::binary_codebook();
    const auto r = self_critic_confidence(p, cb, target);
    for (int j = 0; j < 4; ++j) {
        CHECK(r.d[j] == 0.0);
        CHECK(r.conf.scores[j] == doctest::Approx(0.25));
    }
    CHECK(r.conf.kind == ConfidenceKind::SelfCritic);
}

TEST_CASE("self_critic_confidence: d=(0,-1) softmax values") {
    // slot-0 argmax matches, slot-1 argmax differs at latent distance 1
    const TabularExactPrior p(2, 2, {0.3, 0.5, 0.2, 0.0});
    const Codebook cb(2, 1, {0.0, 1.0});
    const auto r = self_critic_confidence(p, cb, seq({0, 0}));
    CHECK(r.d[0] == 0.0);
    CHECK(r.d[1] == -1.0);
    CHECK(r.conf.scores[0] == doctest::Approx(0.7310585786300049).epsilon(1e-12));
    CHECK(r.conf.scores[1] == doctest::Approx(0.2689414213699951).epsilon(1e-12));
}

TEST_CASE("self_critic_confidence: a far token's confidence vanishes") {
    const TokenSeq target = seq({0, 0, 0, 0});
    const TabularExactPrior p = soft_point_mass(target, 2, 1e-6);
    const Codebook cb(2, 1, {0.0, 10.0}); // squared distance 100
    const auto r = self_critic_confidence(p, cb, seq({1, 0, 0, 0}));
    CHECK(r.d[0] == doctest::Approx(-100.0));
    CHECK(r.conf.scores[0] / r.conf.scores[1] < 1e-40);
    for (int j = 1; j < 4; ++j)
        CHECK(r.conf.scores[j] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("self_critic_confidence sums to 1 and d stays nonpositive") {
    Rng rng(31);
    std::vector<double> joint(1 << 6);
    for (auto& v : joint) v = rng.uniform();
    const TabularExactPrior p(2, 6, joint);
    const Codebook cb = testbed::binary_codebook();
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int32_t> s(6);
        for (auto& v : s) v = rng.uniform() < 0.5 ? 0 : 1;
        const auto r = self_critic_confidence(p, cb, seq(std::move(s)));
        double total = 0.0;
        for (int j = 0; j < 6; ++j) {
            CHECK(r.d[j] <= 0.0);
            total += r.conf.scores[j];
        }
        CHECK(std::abs(total - 1.0) <= 1e-9);
    }
    CHECK_THROWS_AS(self_critic_confidence(p, cb, seq({MASK, 0, 0, 0, 0, 0})), UsageError);
}

TEST_CASE("critical_reverse: aligned sequence stops immediately in tau mode") {
    const TokenSeq target = seq({1, 0, 1, 1});
    const TabularExactPrior p = soft_point_mass(target, 2, 1e-6);
    const Codebook cb = testbed::binary_codebook();
    const MaskSchedule sched = cosine_mask_counts(4, 4);
    SamplerConfig cfg = base_config(4);
    cfg.tau = 0.1;
    cfg.use_ratio_stop = false;

    const auto r = critical_reverse(p, cb, target, sched, cfg);
    CHECK(r.t_star == 4);
    CHECK(r.masked == target); // counts[T] = 0: nothing masked
    CHECK(r.steps.size() == 1);
    CHECK(r.steps[0].mean_sq == 0.0);
}

TEST_CASE("critical_reverse: adversarial slot is masked before the stop") {
    // one token far from every argmax (squared distance 25), tau = 1
    const TokenSeq target = seq({0, 0, 0, 0});
    const TabularExactPrior p = soft_point_mass(target, 2, 1e-3);
    const Codebook cb(2, 2, {0.0, 0.0, 3.0, 4.0}); // dist^2(0,1) = 25
    const TokenSeq corrupted = seq({0, 1, 0, 0});
    const MaskSchedule sched = cosine_mask_counts(4, 4);
    SamplerConfig cfg = base_config(4);
    cfg.tau = 1.0;
    cfg.use_ratio_stop = false;

    const auto r = critical_reverse(p, cb, corrupted, sched, cfg);
    CHECK(r.t_star < 4);
    CHECK(r.masked.slots[1] == MASK); // adversarial slot entered the masked set
    // the stop only happened after the bad slot was revealed and rejected
    CHECK(r.steps.front().mean_sq > 1.0);
    CHECK(r.steps.back().mean_sq <= 1.0);
    CHECK(r.steps.back().stopped);
}

TEST_CASE("critical_reverse: one slot revealed per step on the N=4 schedule") {
    // distinct confidences: d = (0, -1, -9, -49)
    const TokenSeq target = seq({0, 0, 0, 0});
    const TabularExactPrior p = soft_point_mass(target, 4, 1e-3);
    const Codebook cb(4, 1, {0.0, 1.0, 3.0, 7.0});
    const TokenSeq sampled = seq({0, 1, 2, 3});
    const MaskSchedule sched = cosine_mask_counts(4, 4);
    CHECK(sched.counts == std::vector<int>{4, 3, 2, 1, 0});

    SamplerConfig cfg = base_config(4);
    cfg.tau = 0.0;
    cfg.use_ratio_stop = false;

    const auto r = critical_reverse(p, cb, sampled, sched, cfg);
    REQUIRE(r.steps.size() == 4);
    for (const auto& step : r.steps) CHECK(step.delta_slots == 1);
    // kept sets are nested from the single confidence ranking
    std::set<int> prev;
    for (int t = 1; t <= 4; ++t) {
        const MaskMatrix m = top_k_mask(r.conf, 4 - sched.counts[t]);
        std::set<int> cur;
        for (int i = 0; i < 4; ++i)
            if (m.bits[i]) cur.insert(i);
        for (int i : prev) CHECK(cur.count(i) == 1);
        prev = std::move(cur);
    }
}

TEST_CASE("critical_reverse: ratio stop fires when successive means flatten") {
    // d = (0, -1, -25, -25): means visit as 25, 25 -> ratio 1 -> stop at t=3
    const TokenSeq target = seq({0, 0, 0, 0});
    const TabularExactPrior p = soft_point_mass(target, 3, 1e-3);
    const Codebook cb(3, 1, {0.0, 1.0, 5.0});
    const TokenSeq sampled = seq({0, 1, 2, 2});
    const MaskSchedule sched = cosine_mask_counts(4, 4);
    const SamplerConfig cfg = base_config(4); // ratio stop is the default

    const auto r = critical_reverse(p, cb, sampled, sched, cfg);
    CHECK(r.t_star == 3);
    REQUIRE(r.steps.size() == 2);
    CHECK(r.steps[0].mean_sq == doctest::Approx(25.0));
    CHECK(r.steps[1].mean_sq == doctest::Approx(25.0));
    CHECK(r.steps[1].stopped);
    CHECK(r.masked == seq({0, 1, 2, MASK}));
}

TEST_CASE("critical_reverse: loop exhaustion lands on t*=1") {
    // every revealed slot disagrees with the prior argmax
    const TokenSeq target = seq({0, 0, 0, 0});
    const TabularExactPrior p = soft_point_mass(target, 3, 1e-3);
    const Codebook cb(3, 1, {0.0, 1.0, 5.0});
    const TokenSeq sampled = seq({1, 1, 2, 2});
    const MaskSchedule sched = cosine_mask_counts(4, 4);
    SamplerConfig cfg = base_config(4);
    cfg.tau = 1e-9;
    cfg.use_ratio_stop = false;

    const auto r = critical_reverse(p, cb, sampled, sched, cfg);
    CHECK(r.t_star == 1);
    CHECK(r.steps.size() == 4);
    for (const auto& step : r.steps) CHECK_FALSE(step.stopped);
    CHECK(r.masked.count_masked() == 3);
}

TEST_CASE("critical_reverse skips schedule plateaus") {
    // N=5, T=5 cosine has counts (5,4,4,2,1,0): t=2 reveals nothing
    const MaskSchedule sched = cosine_mask_counts(5, 5);
    REQUIRE(sched.counts == std::vector<int>{5, 4, 4, 2, 1, 0});
    const TokenSeq target = seq({0, 0, 0, 0, 0});
    const TabularExactPrior p = soft_point_mass(target, 2, 1e-3);
    const Codebook cb = testbed::binary_codebook();
    const TokenSeq sampled = seq({1, 1, 1, 1, 1});
    SamplerConfig cfg = base_config(5);
    cfg.tau = 1e-9;
    cfg.use_ratio_stop = false;

    const auto r = critical_reverse(p, cb, sampled, sched, cfg);
    for (const auto& step : r.steps) CHECK(step.t != 2); // plateau skipped
    CHECK(r.steps.size() == 4);
}

TEST_CASE("critical_resample: empty loop returns the input unchanged") {
    const TokenSeq target = seq({1, 0, 1, 1});
    const TabularExactPrior p = soft_point_mass(target, 2, 1e-6);
    const Codebook cb = testbed::binary_codebook();
    const MaskSchedule sched = cosine_mask_counts(4, 4);
    const SamplerConfig cfg = base_config(4);
    Rng rng(1);
    CHECK(critical_resample(p, cb, /*t_star=*/4, target, sched, cfg, rng) == target);

    SamplerConfig bad = cfg;
    bad.T_star = 3;
    CHECK_THROWS_AS(critical_resample(p, cb, 4, target, sched, bad, rng), UsageError);
}

TEST_CASE("critical_resample restores a point-mass sequence") {
    const TokenSeq target = seq({0, 0, 0, 0});
    const TabularExactPrior p = soft_point_mass(target, 2, 0.0); // pure point mass
    const Codebook cb = testbed::binary_codebook();
    const MaskSchedule sched = cosine_mask_counts(4, 4);
    const SamplerConfig cfg = base_config(4);
    const TokenSeq masked = seq({0, MASK, 0, 0});
    for (uint64_t s : {0ull, 3ull, 42ull}) {
        Rng rng(s);
        const TokenSeq out = critical_resample(p, cb, /*t_star=*/2, masked, sched, cfg, rng);
        CHECK(out == target);
    }
}

TEST_CASE("ess_sample: point-mass joint gives the point mass and a zero trace") {
    const TokenSeq target = seq({1, 0, 1, 1});
    const TabularExactPrior p = soft_point_mass(target, 2, 0.0);
    const Codebook cb = testbed::binary_codebook();
    const MaskSchedule sched = cosine_mask_counts(4, 6);
    const SamplerConfig cfg = base_config(6);
    Rng rng(8);
    const EssResult r = ess_sample(p, cb, sched, cfg, rng);
    CHECK(r.seq == target);
    CHECK_FALSE(r.trace.entries.empty());
    for (const auto& e : r.trace.entries) CHECK(e.realism_sum == 0.0);
}

TEST_CASE("ess_sample: trace phases are ordered and every value is nonpositive") {
    const TabularExactPrior p(2, 8, testbed::coupled_chain_joint(8, 1.0));
    const Codebook cb = testbed::binary_codebook();
    const MaskSchedule sched = cosine_mask_counts(8, 10);
    const SamplerConfig cfg = base_config(10);
    Rng rng(77);
    const EssResult r = ess_sample(p, cb, sched, cfg, rng);

    CHECK(r.seq.mask_free());
    int naive_steps = 0, reverse_steps = 0, resample_steps = 0;
    double last_reverse = -1e300;
    for (const auto& e : r.trace.entries) {
        CHECK(e.realism_sum <= 0.0);
        if (e.phase == Phase::Naive) {
            ++naive_steps;
            CHECK((reverse_steps == 0 && resample_steps == 0));
        } else if (e.phase == Phase::Reverse) {
            ++reverse_steps;
            CHECK(resample_steps == 0);
            // masking removes nonpositive terms: monotone within the phase
            CHECK(e.realism_sum >= last_reverse);
            last_reverse = e.realism_sum;
        } else {
            ++resample_steps;
        }
    }
    CHECK(naive_steps == 10);
    CHECK(reverse_steps == 10 - r.t_star + 1);
    CHECK(resample_steps == cfg.T_star - r.t_star);

    // CSV export shape
    std::ostringstream csv;
    r.trace.to_csv(csv);
    CHECK(csv.str().starts_with("phase,step,realism_sum\n"));
}

TEST_CASE("ess_sample is deterministic under a fixed seed") {
    const TabularExactPrior p(2, 8, testbed::coupled_chain_joint(8, 1.0));
    const Codebook cb = testbed::binary_codebook();
    const MaskSchedule sched = cosine_mask_counts(8, 10);
    SamplerConfig cfg = base_config(10);

    Rng rng1(99), rng2(99);
    const EssResult a = ess_sample(p, cb, sched, cfg, rng1);
    const EssResult b = ess_sample(p, cb, sched, cfg, rng2);
    CHECK(a.seq == b.seq);
    CHECK(a.t_star == b.t_star);
    REQUIRE(a.trace.entries.size() == b.trace.entries.size());
    for (size_t i = 0; i < a.trace.entries.size(); ++i)
        CHECK(a.trace.entries[i].realism_sum == b.trace.entries[i].realism_sum);

    // disabling the naive-phase trace must not change the outcome
    cfg.record_trace = false;
    Rng rng3(99);
    const EssResult c = ess_sample(p, cb, sched, cfg, rng3);
    CHECK(c.seq == a.seq);
    CHECK(c.t_star == a.t_star);
}

TEST_CASE("ess_sample accepts the prior-prob stage-3 configuration") {
    const TabularExactPrior p(2, 8, testbed::coupled_chain_joint(8, 1.0));
    const Codebook cb = testbed::binary_codebook();
    const MaskSchedule sched = cosine_mask_counts(8, 10);
    SamplerConfig cfg = base_config(10);
    cfg.stage3 = Stage3Confidence::PriorProb;
    cfg.record_trace = false;
    Rng rng(4);
    const EssResult r = ess_sample(p, cb, sched, cfg, rng);
    CHECK(r.seq.mask_free());
    for (int32_t v : r.seq.slots) CHECK(v < 2);
}

TEST_CASE("resample_only produces MASK-free output and needs self-critic mode") {
    const TabularExactPrior p(2, 6, testbed::coupled_chain_joint(6, 1.0));
    const Codebook cb = testbed::binary_codebook();
    SamplerConfig cfg = base_config(6);
    Rng rng(12);
    const TokenSeq out = resample_only(p, cb, cfg, rng);
    CHECK(out.size() == 6);
    CHECK(out.mask_free());

    cfg.stage3 = Stage3Confidence::PriorProb;
    CHECK_THROWS_AS(resample_only(p, cb, cfg, rng), UsageError);
}

TEST_CASE("SamplerConfig validation") {
    SamplerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.tau = 0.5; // both stop rules active
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.use_ratio_stop = false;
    CHECK_NOTHROW(cfg.validate());
    cfg.tau.reset(); // neither
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.use_ratio_stop = true;
    cfg.T = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.T = 10;
    cfg.ratio_window = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
}
