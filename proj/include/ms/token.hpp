#pragma once

#include <cstdint>
#include <vector>

namespace ms {

/// Sentinel for a masked slot.
inline constexpr int32_t MASK = -1;

/// Fixed-length sequence of token slots. Each slot holds a codebook index
/// in [0, K) or MASK. Immutable by convention after construction: samplers
/// build new sequences instead of mutating shared ones.
struct TokenSeq {
    std::vector<int32_t> slots;

    TokenSeq() = default;
    explicit TokenSeq(std::vector<int32_t> s) : slots(std::move(s)) {}

    /// All-MASK sequence of length n.
    static TokenSeq all_mask(int n) { return TokenSeq(std::vector<int32_t>(n, MASK)); }

    int size() const { return static_cast<int>(slots.size()); }

    bool mask_free() const {
        for (int32_t s : slots)
            if (s == MASK) return false;
        return true;
    }

    int count_masked() const {
        int c = 0;
        for (int32_t s : slots)
            if (s == MASK) ++c;
        return c;
    }

    bool operator==(const TokenSeq&) const = default;
};

/// Per-slot keep/mask bits: 0 = mask, 1 = keep. Applying the all-ones
/// matrix is the identity.
struct MaskMatrix {
    std::vector<uint8_t> bits;

    MaskMatrix() = default;
    explicit MaskMatrix(std::vector<uint8_t> b) : bits(std::move(b)) {}

    int size() const { return static_cast<int>(bits.size()); }
    int ones() const {
        int c = 0;
        for (uint8_t b : bits) c += b;
        return c;
    }

    bool operator==(const MaskMatrix&) const = default;
};

enum class ConfidenceKind { PriorProb, SelfCritic, ExternalCritic };

/// Per-slot realism scores used to rank slots for keeping/masking.
/// A slot may carry the PINNED sentinel instead of a numeric score;
/// pinned slots rank above every numeric score.
struct ConfidenceVector {
    std::vector<double> scores;
    std::vector<uint8_t> pinned; // 1 = PINNED; same length as scores
    ConfidenceKind kind = ConfidenceKind::PriorProb;

    ConfidenceVector() = default;
    ConfidenceVector(std::vector<double> s, ConfidenceKind k)
        : scores(std::move(s)), pinned(scores.size(), 0), kind(k) {}

    int size() const { return static_cast<int>(scores.size()); }

    void pin(int i) { pinned[i] = 1; }
    bool is_pinned(int i) const { return pinned[i] != 0; }
};

/// Keep tokens where bits = 1, write MASK where bits = 0.
/// Masking an already-MASK slot is a no-op.
/// Throws UsageError on length mismatch.
TokenSeq apply_mask(const TokenSeq& seq, const MaskMatrix& m);

/// MaskMatrix with exactly `keep` ones at the `keep` highest-ranked slots.
/// PINNED slots rank above all numeric scores; ties break toward the
/// lowest slot index. Throws UsageError if keep is out of [0, N].
MaskMatrix top_k_mask(const ConfidenceVector& conf, int keep);

} // namespace ms
