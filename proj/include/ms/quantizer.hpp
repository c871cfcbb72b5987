#pragma once

#include "ms/codebook.hpp"
#include "ms/series.hpp"
#include "ms/token.hpp"

#include <cstdint>
#include <vector>

namespace ms {

struct VQSpec {
    int window = 8;   // samples per token; series lengths must divide
    int k = 16;       // codebook size
    int iters = 50;   // k-means iterations
    uint64_t seed = 0;
};

/// Fit a codebook over non-overlapping windows of the input series by
/// k-means (k-means++ seeding, empty clusters re-seeded from the farthest
/// point). Series whose length is not a window multiple are
/// right-truncated with a warning. Duplicate centroid rows are perturbed
/// by 1e-6 with a warning so the distinct-rows invariant holds.
/// Throws UsageError when fewer windows than K are available.
Codebook fit_codebook(const std::vector<Series>& series, const VQSpec& spec);

/// Map each window to its nearest codebook row (squared Euclidean,
/// lowest-index tie-break). Throws UsageError unless the length is a
/// multiple of the codebook dimension.
TokenSeq encode(const Codebook& cb, const Series& series);

/// Concatenate the codebook rows of a MASK-free sequence.
Series decode(const Codebook& cb, const TokenSeq& seq);

/// Mean squared error of decode(encode(x)) against x over all samples of
/// all series (after window truncation).
double reconstruction_mse(const Codebook& cb, const std::vector<Series>& series);

} // namespace ms
