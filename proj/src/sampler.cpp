#include "ms/sampler.hpp"

#include "ms/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace ms {

namespace {

int argmax_lowest(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

// Fill every MASK slot of `seq`, recording the prior probability of each
// sampled token. Returns the filled sequence; prob[i] is set only for
// slots filled here.
TokenSeq fill_masked(const PriorModel& prior, const TokenSeq& seq, Rng& rng,
                     std::vector<double>& prob) {
    const auto dists = prior.predict(seq);
    TokenSeq filled = seq;
    prob.assign(seq.size(), 0.0);
    for (int i = 0; i < seq.size(); ++i) {
        if (seq.slots[i] != MASK) continue;
        const int tok = rng.categorical(dists[i]);
        filled.slots[i] = tok;
        prob[i] = dists[i][tok];
    }
    return filled;
}

} // namespace

void SamplerConfig::validate() const {
    if (T < 1) throw UsageError("SamplerConfig: T must be >= 1");
    if (T_star < 1) throw UsageError("SamplerConfig: T_star must be >= 1");
    if (ratio_window < 1) throw UsageError("SamplerConfig: ratio_window must be >= 1");
    if (noise.base_magnitude < 0.0)
        throw UsageError("SamplerConfig: noise magnitude must be nonnegative");
    if (tau.has_value() == use_ratio_stop)
        throw UsageError("SamplerConfig: exactly one of tau / ratio stop must be active");
    if (tau && *tau < 0.0) throw UsageError("SamplerConfig: tau must be nonnegative");
}

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Naive: return "naive";
        case Phase::Reverse: return "reverse";
        case Phase::Resample: return "resample";
    }
    return "?";
}

void RealismTrace::to_csv(std::ostream& os) const {
    os << "phase,step,realism_sum\n";
    char buf[32];
    for (const Entry& e : entries) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.realism_sum);
        os << phase_name(e.phase) << ',' << e.step << ',' << buf << '\n';
    }
}

ConfidenceVector ExactOracleCritic::score(const TokenSeq& seq) const {
    std::vector<double> scores(seq.size(), 0.0);
    for (int i = 0; i < seq.size(); ++i) {
        const auto cond = truth_.conditional(seq, i);
        scores[i] = seq.slots[i] == MASK ? 0.0 : cond[seq.slots[i]];
    }
    return ConfidenceVector(std::move(scores), ConfidenceKind::ExternalCritic);
}

ConfidenceVector PseudoLikelihoodCritic::score(const TokenSeq& seq) const {
    std::vector<double> scores(seq.size(), 0.0);
    for (int i = 0; i < seq.size(); ++i) {
        if (seq.slots[i] == MASK) continue;
        TokenSeq query = seq;
        query.slots[i] = MASK;
        scores[i] = model_.predict(query)[i][seq.slots[i]];
    }
    return ConfidenceVector(std::move(scores), ConfidenceKind::ExternalCritic);
}

DecodeResult naive_decode(const PriorModel& prior, const MaskSchedule& sched,
                          const SamplerConfig& cfg, Rng& rng,
                          const StepObserver& observer) {
    cfg.validate();
    const int n = sched.seq_len();
    const int t_total = sched.T;

    TokenSeq s = TokenSeq::all_mask(n);
    ConfidenceVector conf;
    std::vector<double> prob;
    for (int t = 0; t < t_total; ++t) {
        const TokenSeq filled = fill_masked(prior, s, rng, prob);

        conf = ConfidenceVector(prob, ConfidenceKind::PriorProb);
        for (int i = 0; i < n; ++i)
            if (s.slots[i] != MASK) conf.pin(i); // previously kept: never re-masked

        const ConfidenceVector noisy = perturb_confidence(conf, t, t_total, cfg.noise, rng);
        const MaskMatrix kept = top_k_mask(noisy, n - sched.counts[t + 1]);
        if (observer) observer(t, filled, kept);
        s = apply_mask(filled, kept);
    }
    return {std::move(s), std::move(conf)};
}

TokenSeq token_critic_decode(const PriorModel& prior, const CriticFn& critic,
                             const MaskSchedule& sched, const SamplerConfig& cfg,
                             Rng& rng, const StepObserver& observer) {
    cfg.validate();
    const int n = sched.seq_len();
    const int t_total = sched.T;

    TokenSeq s = TokenSeq::all_mask(n);
    std::vector<double> prob;
    for (int t = 0; t < t_total; ++t) {
        const TokenSeq filled = fill_masked(prior, s, rng, prob);
        const ConfidenceVector conf = critic.score(filled); // nothing pinned: correctable
        const ConfidenceVector noisy = perturb_confidence(conf, t, t_total, cfg.noise, rng);
        const MaskMatrix kept = top_k_mask(noisy, n - sched.counts[t + 1]);
        if (observer) observer(t, filled, kept);
        s = apply_mask(filled, kept);
    }
    return s;
}

SelfCriticResult self_critic_confidence(const PriorModel& prior, const Codebook& cb,
                                        const TokenSeq& seq) {
    if (!seq.mask_free())
        throw UsageError("self_critic_confidence: sequence must be MASK-free");
    const int n = seq.size();

    std::vector<double> d(n);
    for (int j = 0; j < n; ++j) {
        TokenSeq query = seq;
        query.slots[j] = MASK;
        const auto dist = prior.predict(query)[j];
        const int best = argmax_lowest(dist);
        d[j] = -latent_sq_dist(cb, seq.slots[j], best);
    }

    // Softmax over all N slots, stabilized by the max (d <= 0 throughout).
    const double dmax = *std::max_element(d.begin(), d.end());
    std::vector<double> c(n);
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
        c[j] = std::exp(d[j] - dmax);
        total += c[j];
    }
    for (double& v : c) v /= total;

    return {ConfidenceVector(std::move(c), ConfidenceKind::SelfCritic), std::move(d)};
}

ReverseResult critical_reverse(const PriorModel& prior, const Codebook& cb,
                               const TokenSeq& s_final, const MaskSchedule& sched,
                               const SamplerConfig& cfg) {
    cfg.validate();
    if (!s_final.mask_free())
        throw UsageError("critical_reverse: input must be MASK-free");

    const int n = sched.seq_len();
    const int dim = cb.dim();
    auto critic = self_critic_confidence(prior, cb, s_final);

    ReverseResult res;
    res.t_star = 1; // loop-exhaustion default
    res.conf = critic.conf;
    res.d = critic.d;

    std::vector<double> means; // tested means in visit order (t descending)
    for (int t = sched.T; t >= 1; --t) {
        const MaskMatrix keep_t = top_k_mask(critic.conf, n - sched.counts[t]);
        const MaskMatrix keep_tm1 = top_k_mask(critic.conf, n - sched.counts[t - 1]);

        std::vector<int> delta; // revealed at t: kept at t, masked at t-1
        for (int i = 0; i < n; ++i)
            if (keep_t.bits[i] && !keep_tm1.bits[i]) delta.push_back(i);
        if (delta.empty()) continue; // schedule plateau: no evidence either way

        // Prior-preferred direction: argmax completion of the t-1 context,
        // compared token-vs-token at the revealed positions.
        const TokenSeq context = apply_mask(s_final, keep_tm1);
        const auto dists = prior.predict(context);
        double acc = 0.0;
        for (int j : delta)
            acc += latent_sq_dist(cb, s_final.slots[j], argmax_lowest(dists[j]));
        const double mean = acc / (static_cast<double>(delta.size()) * dim);

        bool stop = false;
        if (cfg.tau) {
            stop = mean <= *cfg.tau;
        } else {
            means.push_back(mean);
            if (mean == 0.0) {
                stop = true; // transition already aligned with the prior
            } else if (means.size() >= 2) {
                // Ratio of successive means, previous over current: above 1
                // while the discrepancy still drops, 1 once it flattens.
                const size_t ratios = means.size() - 1;
                const size_t use = std::min<size_t>(ratios, cfg.ratio_window);
                double avg = 0.0;
                for (size_t r = ratios - use; r < ratios; ++r)
                    avg += means[r] / means[r + 1];
                avg /= static_cast<double>(use);
                stop = avg <= 1.0;
            }
        }

        res.steps.push_back({t, static_cast<int>(delta.size()), mean, stop});
        if (stop) {
            res.t_star = t;
            break;
        }
    }

    res.masked = apply_mask(s_final, top_k_mask(critic.conf, n - sched.counts[res.t_star]));
    return res;
}

TokenSeq critical_resample(const PriorModel& prior, const Codebook& cb, int t_star,
                           const TokenSeq& masked, const MaskSchedule& sched,
                           const SamplerConfig& cfg, Rng& rng,
                           const ResampleObserver& observer) {
    cfg.validate();
    (void)sched;
    if (t_star > cfg.T_star)
        throw UsageError("critical_resample: t_star exceeds T_star");

    const int remaining = cfg.T_star - t_star;
    const int n = masked.size();
    const int n_masked = masked.count_masked();
    if (remaining == 0 || n_masked == 0) return masked;

    // Schedule re-derived over the remaining steps from the actual masked
    // count; noise re-indexed so it hits zero at T_star.
    const std::vector<int> counts = cosine_mask_counts(n_masked, remaining).counts;

    const bool redecode = cfg.stage3 == Stage3Confidence::PriorProb;
    std::vector<uint8_t> pins(n, 0);
    if (redecode)
        for (int i = 0; i < n; ++i) pins[i] = masked.slots[i] != MASK;

    TokenSeq s = masked;
    std::vector<double> prob;
    for (int r = 0; r < remaining; ++r) {
        const TokenSeq filled = fill_masked(prior, s, rng, prob);

        ConfidenceVector conf;
        double realism = 0.0;
        bool has_realism = false;
        if (redecode) {
            conf = ConfidenceVector(prob, ConfidenceKind::PriorProb);
            conf.pinned = pins;
        } else {
            auto critic = self_critic_confidence(prior, cb, filled);
            conf = std::move(critic.conf); // no pins: any slot may be re-masked
            realism = std::accumulate(critic.d.begin(), critic.d.end(), 0.0);
            has_realism = true;
        }

        const ConfidenceVector noisy = perturb_confidence(conf, r, remaining, cfg.noise, rng);
        const MaskMatrix kept = top_k_mask(noisy, n - counts[r + 1]);
        if (observer) observer(t_star + r + 1, filled, realism, has_realism);
        s = apply_mask(filled, kept);
        if (redecode)
            for (int i = 0; i < n; ++i) pins[i] = s.slots[i] != MASK;
    }
    return s;
}

EssResult ess_sample(const PriorModel& prior, const Codebook& cb,
                     const MaskSchedule& sched, const SamplerConfig& cfg, Rng& rng) {
    cfg.validate();
    const int n = sched.seq_len();

    EssResult result;
    StepObserver naive_obs;
    if (cfg.record_trace) {
        naive_obs = [&](int t, const TokenSeq& filled, const MaskMatrix&) {
            const auto critic = self_critic_confidence(prior, cb, filled);
            const double sum = std::accumulate(critic.d.begin(), critic.d.end(), 0.0);
            result.trace.add(Phase::Naive, t + 1, sum);
        };
    }

    const DecodeResult decoded = naive_decode(prior, sched, cfg, rng, naive_obs);
    const ReverseResult rev = critical_reverse(prior, cb, decoded.seq, sched, cfg);
    result.t_star = rev.t_star;

    for (int t = sched.T; t >= rev.t_star; --t) {
        const MaskMatrix kept = top_k_mask(rev.conf, n - sched.counts[t]);
        double sum = 0.0;
        for (int i = 0; i < n; ++i)
            if (kept.bits[i]) sum += rev.d[i];
        result.trace.add(Phase::Reverse, t, sum);
    }

    result.seq = critical_resample(
        prior, cb, rev.t_star, rev.masked, sched, cfg, rng,
        [&](int step, const TokenSeq&, double realism, bool has_realism) {
            if (has_realism) result.trace.add(Phase::Resample, step, realism);
        });
    return result;
}

TokenSeq resample_only(const PriorModel& prior, const Codebook& cb,
                       const SamplerConfig& cfg, Rng& rng) {
    cfg.validate();
    if (cfg.stage3 != Stage3Confidence::SelfCritic)
        throw UsageError("resample_only: requires self-critic confidence");
    MaskSchedule unused; // resample derives its own schedule from the mask count
    return critical_resample(prior, cb, 0, TokenSeq::all_mask(prior.seq_len()), unused,
                             cfg, rng);
}

} // namespace ms
