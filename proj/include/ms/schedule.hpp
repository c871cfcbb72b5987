#pragma once

#include "ms/rng.hpp"
#include "ms/token.hpp"

#include <vector>

namespace ms {

/// Per-step masked-slot counts shared by the forward and reverse passes.
/// counts[0] = N (everything masked), counts[T] = 0 (nothing masked),
/// non-increasing in between.
struct MaskSchedule {
    int T = 0;
    std::vector<int> counts; // length T + 1

    int seq_len() const { return counts.empty() ? 0 : counts.front(); }
};

/// Cosine schedule: counts[t] = floor(N * cos(pi/2 * t/T)).
/// Throws UsageError if N or T is zero.
MaskSchedule cosine_mask_counts(int n, int t_steps);

/// Decaying confidence-noise schedule. The magnitude at step t of a
/// phase with `total_steps` steps is base_magnitude * (1 - (t+1)/total),
/// so it is non-increasing and exactly zero at the final step.
struct NoiseSchedule {
    double base_magnitude = 1.0;

    double magnitude(int step, int total_steps) const {
        if (total_steps <= 0) return 0.0;
        const double gamma = 1.0 - static_cast<double>(step + 1) / total_steps;
        return gamma > 0.0 ? base_magnitude * gamma : 0.0;
    }
};

/// Add an independent Gumbel(0,1) draw scaled by the step's magnitude to
/// every non-PINNED score. PINNED slots are untouched and consume no
/// randomness. At the final step (magnitude zero) the input is returned
/// unchanged.
ConfidenceVector perturb_confidence(const ConfidenceVector& conf, int step,
                                    int total_steps, const NoiseSchedule& sched,
                                    Rng& rng);

} // namespace ms
