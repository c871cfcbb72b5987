#pragma once

#include "ms/series.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ms {

/// UCR-archive TSV: one series per line, integer-or-string label first,
/// then tab-separated values in decimal or exponent notation. Trailing
/// NaN padding is trimmed per series; variable lengths are allowed at
/// load. String labels map to dense integers in first-seen order.
/// Throws DataError (with a line number) on empty files, non-numeric
/// values, or interior NaNs.
std::vector<LabeledSeries> load_ucr_tsv(const std::string& path);

/// Writer for the same format; finite values round-trip bit-for-bit
/// through load_ucr_tsv.
void write_ucr_tsv(const std::string& path, const std::vector<LabeledSeries>& data);

/// (x - mean) / std with the population standard deviation; constant
/// series map to all-zeros (std guard 1e-12).
Series znormalize(const Series& s);

/// Truncate every series to the shortest length in the set. Applied
/// before windowed quantization; no-op on fixed-length data.
std::vector<LabeledSeries> truncate_to_min_length(std::vector<LabeledSeries> data);

/// Deterministic synthetic corpora:
///  - "sine-mix": label = cycles in {1, 3}; sin(2*pi*f*t/L + phase) with
///    uniform phase and N(0, 0.1) noise.
///  - "cbf": cylinder(0) / bell(1) / funnel(2) shapes, amplitude 6+N(0,1)
///    over a random [a, b) support, N(0, 0.3) noise.
///  - "step": label 0 steps -1 -> +1, label 1 steps +1 -> -1 at a random
///    changepoint, N(0, 0.1) noise.
/// Throws UsageError for an unknown kind or length < 8.
std::vector<LabeledSeries> gen_synthetic(const std::string& kind, int n, int length,
                                         uint64_t seed);

} // namespace ms
