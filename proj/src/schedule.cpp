#include "ms/schedule.hpp"

#include "ms/errors.hpp"

#include <cmath>
#include <numbers>

namespace ms {

MaskSchedule cosine_mask_counts(int n, int t_steps) {
    if (n < 1) throw UsageError("cosine_mask_counts: N must be >= 1");
    if (t_steps < 1) throw UsageError("cosine_mask_counts: T must be >= 1");

    MaskSchedule sched;
    sched.T = t_steps;
    sched.counts.resize(t_steps + 1);
    for (int t = 0; t <= t_steps; ++t) {
        const double x = std::cos(std::numbers::pi / 2.0 * t / t_steps);
        sched.counts[t] = static_cast<int>(std::floor(n * x));
    }
    sched.counts[0] = n;
    sched.counts[t_steps] = 0;
    return sched;
}

ConfidenceVector perturb_confidence(const ConfidenceVector& conf, int step,
                                    int total_steps, const NoiseSchedule& sched,
                                    Rng& rng) {
    const double mag = sched.magnitude(step, total_steps);
    if (mag == 0.0) return conf;

    ConfidenceVector out = conf;
    for (int i = 0; i < conf.size(); ++i) {
        if (conf.is_pinned(i)) continue;
        out.scores[i] += mag * rng.gumbel();
    }
    return out;
}

} // namespace ms
