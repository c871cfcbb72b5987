#include "ms/token.hpp"

#include "ms/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace ms {

TokenSeq apply_mask(const TokenSeq& seq, const MaskMatrix& m) {
    if (seq.size() != m.size())
        throw UsageError("apply_mask: length mismatch (" + std::to_string(seq.size()) +
                         " vs " + std::to_string(m.size()) + ")");
    TokenSeq out = seq;
    for (int i = 0; i < seq.size(); ++i)
        if (m.bits[i] == 0) out.slots[i] = MASK;
    return out;
}

MaskMatrix top_k_mask(const ConfidenceVector& conf, int keep) {
    const int n = conf.size();
    if (keep < 0 || keep > n)
        throw UsageError("top_k_mask: keep=" + std::to_string(keep) +
                         " out of range [0, " + std::to_string(n) + "]");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (conf.is_pinned(a) != conf.is_pinned(b)) return conf.is_pinned(a);
        if (conf.scores[a] != conf.scores[b]) return conf.scores[a] > conf.scores[b];
        return a < b;
    });

    MaskMatrix m(std::vector<uint8_t>(n, 0));
    for (int i = 0; i < keep; ++i) m.bits[order[i]] = 1;
    return m;
}

} // namespace ms
