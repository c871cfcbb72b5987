#pragma once

#include "ms/codebook.hpp"
#include "ms/prior.hpp"
#include "ms/schedule.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ms {

/// Confidence source for the resampling stage. PriorProb turns stage 3
/// into a plain iterative re-decode (pinned slots, prior-probability
/// confidence) instead of critic-guided correctable resampling.
enum class Stage3Confidence { SelfCritic, PriorProb };

struct SamplerConfig {
    int T = 10;          // forward decoding steps
    int T_star = 10;     // final resampling step
    std::optional<double> tau;    // reverse-stop threshold, when set
    bool use_ratio_stop = true;   // non-parametric moving-average ratio stop
    int ratio_window = 2;
    NoiseSchedule noise;
    uint64_t seed = 0;
    bool record_trace = true;     // per-step realism entries for the naive phase
    Stage3Confidence stage3 = Stage3Confidence::SelfCritic;

    /// Throws UsageError unless exactly one stop rule is active and all
    /// counts are in range.
    void validate() const;
};

/// External scorer of per-slot token realism; scores lie in [0, 1].
class CriticFn {
public:
    virtual ~CriticFn() = default;
    virtual ConfidenceVector score(const TokenSeq& seq) const = 0;
};

/// Critic backed by exact single-slot conditionals of a ground-truth
/// joint: score_i = P(seq_i | all other slots).
class ExactOracleCritic final : public CriticFn {
public:
    explicit ExactOracleCritic(const TabularExactPrior& truth) : truth_(truth) {}
    ConfidenceVector score(const TokenSeq& seq) const override;

private:
    const TabularExactPrior& truth_;
};

/// Critic backed by an arbitrary prior's single-mask pseudo-likelihood:
/// score_i = p(seq_i | seq with slot i masked). Usable when no exact
/// joint exists (fitted models on real data).
class PseudoLikelihoodCritic final : public CriticFn {
public:
    explicit PseudoLikelihoodCritic(const PriorModel& model) : model_(model) {}
    ConfidenceVector score(const TokenSeq& seq) const override;

private:
    const PriorModel& model_;
};

enum class Phase { Naive, Reverse, Resample };
const char* phase_name(Phase p);

/// Realism of the working token set across sampling steps: each entry is
/// the sum of the (nonpositive) unnormalized self-critic scores, so every
/// value is <= 0 and less negative means more realistic.
struct RealismTrace {
    struct Entry {
        Phase phase;
        int step;
        double realism_sum;
    };
    std::vector<Entry> entries;

    void add(Phase phase, int step, double realism_sum) {
        entries.push_back({phase, step, realism_sum});
    }

    /// CSV export: header `phase,step,realism_sum`, one row per step.
    void to_csv(std::ostream& os) const;
};

/// Called after each decode step with the fully sampled candidate and the
/// keep mask chosen for it.
using StepObserver =
    std::function<void(int step, const TokenSeq& filled, const MaskMatrix& kept)>;

struct DecodeResult {
    TokenSeq seq;
    ConfidenceVector conf;
};

/// MaskGIT-style iterative decoding from an all-MASK start: sample every
/// masked slot independently, rank by the prior probability of each
/// sampled token (previously kept slots are PINNED), perturb with
/// scheduled Gumbel noise, keep the top slots per the schedule, re-mask
/// the rest. Kept tokens are never changed afterwards.
DecodeResult naive_decode(const PriorModel& prior, const MaskSchedule& sched,
                          const SamplerConfig& cfg, Rng& rng,
                          const StepObserver& observer = {});

/// Same loop, but ranking comes from critic.score() on the fully sampled
/// sequence and nothing is pinned, so kept tokens may be re-masked later.
TokenSeq token_critic_decode(const PriorModel& prior, const CriticFn& critic,
                             const MaskSchedule& sched, const SamplerConfig& cfg,
                             Rng& rng, const StepObserver& observer = {});

struct SelfCriticResult {
    ConfidenceVector conf;  // softmax of d; sums to 1 over all N slots
    std::vector<double> d;  // nonpositive; 0 iff token == its single-mask argmax
};

/// Single-mask confidence: for each slot j, mask only j, take the prior's
/// argmax token there, and set d_j to minus the squared latent distance
/// between the actual and argmax tokens. C = softmax(d). Costs exactly N
/// prior evaluations.
SelfCriticResult self_critic_confidence(const PriorModel& prior, const Codebook& cb,
                                        const TokenSeq& seq);

struct ReverseStep {
    int t;
    int delta_slots;      // newly revealed positions at this step
    double mean_sq;       // mean squared latent gap over delta slots and dims
    bool stopped;
};

struct ReverseResult {
    int t_star;
    TokenSeq masked;            // s at t_star with low-confidence slots masked
    ConfidenceVector conf;      // self-critic confidence of the input sequence
    std::vector<double> d;      // its unnormalized scores
    std::vector<ReverseStep> steps; // tested steps in visit order (T downward)
};

/// Walk the decoding step backward from T, masking the least realistic
/// slots per the shared schedule, until the transition direction of the
/// masked sets matches the prior-preferred direction: at each t the newly
/// revealed slots' tokens are compared in latent space against the
/// prior's argmax completion of the t-1 context, and the loop stops when
/// the mean squared gap falls under tau (threshold mode) or when the
/// moving-averaged ratio of successive means drops to 1 (default).
/// Steps whose schedule plateau reveals no slots are skipped. If the loop
/// exhausts, t_star = 1.
ReverseResult critical_reverse(const PriorModel& prior, const Codebook& cb,
                               const TokenSeq& s_final, const MaskSchedule& sched,
                               const SamplerConfig& cfg);

/// Called after each resampling step with the global step label and the
/// fully sampled candidate; realism_sum is meaningful only when
/// has_realism is true (self-critic mode).
using ResampleObserver = std::function<void(int step, const TokenSeq& filled,
                                            double realism_sum, bool has_realism)>;

/// Re-decode from (t_star, masked) to T_star on a cosine schedule
/// re-derived over the remaining steps from the actual masked-slot count.
/// In self-critic mode confidence comes from self_critic_confidence on the
/// full candidate and nothing is pinned, so any slot may be re-masked.
/// Noise is re-indexed to hit zero at T_star.
TokenSeq critical_resample(const PriorModel& prior, const Codebook& cb, int t_star,
                           const TokenSeq& masked, const MaskSchedule& sched,
                           const SamplerConfig& cfg, Rng& rng,
                           const ResampleObserver& observer = {});

struct EssResult {
    TokenSeq seq;
    RealismTrace trace;
    int t_star;
};

/// The composed pipeline: naive_decode, critical_reverse,
/// critical_resample, recording the realism sum at every step boundary.
EssResult ess_sample(const PriorModel& prior, const Codebook& cb,
                     const MaskSchedule& sched, const SamplerConfig& cfg, Rng& rng);

/// Diversity-ablation configuration: skip stage 1 entirely and run
/// critic-guided resampling from an all-MASK start over T_star steps.
TokenSeq resample_only(const PriorModel& prior, const Codebook& cb,
                       const SamplerConfig& cfg, Rng& rng);

} // namespace ms
