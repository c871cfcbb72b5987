#pragma once

#include "ms/rng.hpp"
#include "ms/token.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace ms {

/// Prior over tokens conditioned on a partially masked sequence.
///
/// predict() returns one categorical per slot: entry i has size K when
/// slot i is MASK and is empty otherwise. Distributions are normalized
/// and defined for every masking pattern, including all-MASK.
/// Implementations are immutable after construction; predict() is a pure
/// read safe for concurrent callers.
class PriorModel {
public:
    virtual ~PriorModel() = default;

    virtual int vocab_size() const = 0; // K
    virtual int seq_len() const = 0;    // N

    virtual std::vector<std::vector<double>> predict(const TokenSeq& seq) const = 0;
};

/// Explicit joint probability table over all K^N sequences. Enumeration
/// oracle: exact conditionals, exact divergences, direct joint sampling.
/// Guarded to K^N <= 2^20.
class TabularExactPrior final : public PriorModel {
public:
    /// `joint` is indexed row-major with slot 0 most significant:
    /// index(s) = sum_i s[i] * K^(N-1-i). Normalized on construction.
    TabularExactPrior(int k, int n, std::vector<double> joint);

    int vocab_size() const override { return k_; }
    int seq_len() const override { return n_; }

    std::vector<std::vector<double>> predict(const TokenSeq& seq) const override;

    /// Exact posterior over tokens at `slot`, conditioning on every other
    /// non-MASK slot (the slot's own value, if any, is ignored) and
    /// marginalizing the remaining MASK slots.
    /// Throws ZeroSupportError when the conditioning event has probability 0.
    std::vector<double> conditional(const TokenSeq& seq, int slot) const;

    /// Direct draw from the joint.
    TokenSeq sample(Rng& rng) const;

    const std::vector<double>& table() const { return joint_; }

    uint64_t index_of(const TokenSeq& seq) const;

    /// Textual serialization: header "K N", then K^N probabilities.
    void save(std::ostream& os) const;
    void save_file(const std::string& path) const;
    static TabularExactPrior load(std::istream& is);
    static TabularExactPrior load_file(const std::string& path);

private:
    int k_ = 0;
    int n_ = 0;
    std::vector<double> joint_;
    std::vector<uint64_t> place_; // place_[i] = K^(N-1-i)
};

/// Free-function view of TabularExactPrior::conditional.
std::vector<double> exact_conditional(const TabularExactPrior& prior,
                                      const TokenSeq& seq, int slot);

/// Neighbor-conditioned count model fitted from training token sequences:
/// for each slot, counts of token v against the (left, right) neighbor
/// pair, add-one smoothed at query time. MASK neighbors marginalize over
/// the corresponding table axis. Boundary positions use a dedicated
/// out-of-range context symbol.
class CountPrior final : public PriorModel {
public:
    int vocab_size() const override { return k_; }
    int seq_len() const override { return n_; }

    std::vector<std::vector<double>> predict(const TokenSeq& seq) const override;

    /// Fit from training sequences (all of length N, tokens < K).
    /// Throws UsageError on empty data or inconsistent lengths.
    static CountPrior fit(const std::vector<TokenSeq>& data, int k);

    /// Textual serialization: header "K N", then per-slot count tables.
    /// Round-trips deterministically.
    void save(std::ostream& os) const;
    void save_file(const std::string& path) const;
    static CountPrior load(std::istream& is);
    static CountPrior load_file(const std::string& path);

private:
    CountPrior() = default;

    uint64_t& at(int slot, int left, int right, int v);
    uint64_t at(int slot, int left, int right, int v) const;

    int k_ = 0;
    int n_ = 0;
    int ctx_ = 0;                 // k_ + 1: neighbor axis size incl. boundary
    std::vector<uint64_t> counts_; // n_ * ctx_ * ctx_ * k_
};

/// Controlled modeling error: predict = (1-eps) * inner + eps * uniform.
class CorruptedPrior final : public PriorModel {
public:
    CorruptedPrior(std::shared_ptr<const PriorModel> inner, double epsilon);

    int vocab_size() const override { return inner_->vocab_size(); }
    int seq_len() const override { return inner_->seq_len(); }

    std::vector<std::vector<double>> predict(const TokenSeq& seq) const override;

    double epsilon() const { return eps_; }

private:
    std::shared_ptr<const PriorModel> inner_;
    double eps_;
};

/// Fill every MASK slot with an independent draw from the model's
/// predicted distribution; non-MASK slots pass through untouched.
TokenSeq sample_masked(const PriorModel& prior, const TokenSeq& seq, Rng& rng);

} // namespace ms
