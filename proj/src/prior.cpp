#include "ms/prior.hpp"

#include "ms/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ms {

namespace {

constexpr uint64_t kMaxStates = 1ull << 20;

void check_seq(const PriorModel& p, const TokenSeq& seq) {
    if (seq.size() != p.seq_len())
        throw UsageError("prior: sequence length " + std::to_string(seq.size()) +
                         " does not match model N=" + std::to_string(p.seq_len()));
    for (int32_t s : seq.slots)
        if (s != MASK && (s < 0 || s >= p.vocab_size()))
            throw UsageError("prior: token id " + std::to_string(s) + " out of range");
}

} // namespace

// ---------------------------------------------------------------------------
// TabularExactPrior

TabularExactPrior::TabularExactPrior(int k, int n, std::vector<double> joint)
    : k_(k), n_(n), joint_(std::move(joint)) {
    if (k_ < 2) throw UsageError("TabularExactPrior: K must be >= 2");
    if (n_ < 1) throw UsageError("TabularExactPrior: N must be >= 1");

    uint64_t states = 1;
    for (int i = 0; i < n_; ++i) {
        states *= static_cast<uint64_t>(k_);
        if (states > kMaxStates)
            throw UsageError("TabularExactPrior: K^N exceeds 2^20 enumeration guard");
    }
    if (joint_.size() != states)
        throw UsageError("TabularExactPrior: table size must be K^N");

    double total = 0.0;
    for (double p : joint_) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw DataError("TabularExactPrior: negative or non-finite probability");
        total += p;
    }
    if (total <= 0.0) throw DataError("TabularExactPrior: table sums to zero");
    for (double& p : joint_) p /= total;

    place_.resize(n_);
    uint64_t pw = 1;
    for (int i = n_ - 1; i >= 0; --i) {
        place_[i] = pw;
        pw *= static_cast<uint64_t>(k_);
    }
}

uint64_t TabularExactPrior::index_of(const TokenSeq& seq) const {
    check_seq(*this, seq);
    if (!seq.mask_free()) throw UsageError("TabularExactPrior::index_of: sequence has MASK slots");
    uint64_t idx = 0;
    for (int i = 0; i < n_; ++i) idx += static_cast<uint64_t>(seq.slots[i]) * place_[i];
    return idx;
}

std::vector<std::vector<double>> TabularExactPrior::predict(const TokenSeq& seq) const {
    check_seq(*this, seq);

    std::vector<int> masked;
    uint64_t base = 0;
    for (int i = 0; i < n_; ++i) {
        if (seq.slots[i] == MASK)
            masked.push_back(i);
        else
            base += static_cast<uint64_t>(seq.slots[i]) * place_[i];
    }

    std::vector<std::vector<double>> out(n_);
    if (masked.empty()) return out;

    const int m = static_cast<int>(masked.size());
    for (int j : masked) out[j].assign(k_, 0.0);

    // Enumerate only the masked-slot assignments; observed slots are fixed.
    std::vector<int> digits(m, 0);
    double total = 0.0;
    while (true) {
        uint64_t idx = base;
        for (int j = 0; j < m; ++j) idx += static_cast<uint64_t>(digits[j]) * place_[masked[j]];
        const double p = joint_[idx];
        if (p > 0.0) {
            total += p;
            for (int j = 0; j < m; ++j) out[masked[j]][digits[j]] += p;
        }
        int carry = m - 1;
        while (carry >= 0 && ++digits[carry] == k_) digits[carry--] = 0;
        if (carry < 0) break;
    }

    if (total <= 0.0)
        throw ZeroSupportError("TabularExactPrior: conditioning event has probability zero");
    for (int j : masked)
        for (double& v : out[j]) v /= total;
    return out;
}

std::vector<double> TabularExactPrior::conditional(const TokenSeq& seq, int slot) const {
    check_seq(*this, seq);
    if (slot < 0 || slot >= n_)
        throw UsageError("conditional: slot out of range");
    TokenSeq query = seq;
    query.slots[slot] = MASK;
    return predict(query)[slot];
}

TokenSeq TabularExactPrior::sample(Rng& rng) const {
    const int idx = rng.categorical(joint_);
    TokenSeq seq(std::vector<int32_t>(n_, 0));
    uint64_t rem = static_cast<uint64_t>(idx);
    for (int i = 0; i < n_; ++i) {
        seq.slots[i] = static_cast<int32_t>(rem / place_[i]);
        rem %= place_[i];
    }
    return seq;
}

void TabularExactPrior::save(std::ostream& os) const {
    os << k_ << ' ' << n_ << '\n';
    char buf[32];
    for (size_t i = 0; i < joint_.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", joint_[i]);
        os << buf << '\n';
    }
}

void TabularExactPrior::save_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    save(os);
}

TabularExactPrior TabularExactPrior::load(std::istream& is) {
    int k = 0, n = 0;
    if (!(is >> k >> n)) throw DataError("TabularExactPrior: malformed header, expected 'K N'");
    if (k < 2 || n < 1) throw DataError("TabularExactPrior: bad header values");
    uint64_t states = 1;
    for (int i = 0; i < n; ++i) {
        states *= static_cast<uint64_t>(k);
        if (states > kMaxStates) throw DataError("TabularExactPrior: K^N exceeds guard");
    }
    std::vector<double> joint(states);
    for (auto& p : joint)
        if (!(is >> p)) throw DataError("TabularExactPrior: truncated table");
    return TabularExactPrior(k, n, std::move(joint));
}

TabularExactPrior TabularExactPrior::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    return load(is);
}

std::vector<double> exact_conditional(const TabularExactPrior& prior,
                                      const TokenSeq& seq, int slot) {
    return prior.conditional(seq, slot);
}

// ---------------------------------------------------------------------------
// CountPrior

uint64_t& CountPrior::at(int slot, int left, int right, int v) {
    return counts_[((static_cast<size_t>(slot) * ctx_ + left) * ctx_ + right) * k_ + v];
}

uint64_t CountPrior::at(int slot, int left, int right, int v) const {
    return counts_[((static_cast<size_t>(slot) * ctx_ + left) * ctx_ + right) * k_ + v];
}

CountPrior CountPrior::fit(const std::vector<TokenSeq>& data, int k) {
    if (data.empty()) throw UsageError("CountPrior::fit: empty training data");
    if (k < 2) throw UsageError("CountPrior::fit: K must be >= 2");

    const int n = data.front().size();
    CountPrior cp;
    cp.k_ = k;
    cp.n_ = n;
    cp.ctx_ = k + 1; // index k = sequence boundary
    cp.counts_.assign(static_cast<size_t>(n) * cp.ctx_ * cp.ctx_ * k, 0);

    const int boundary = k;
    for (const TokenSeq& seq : data) {
        if (seq.size() != n)
            throw UsageError("CountPrior::fit: inconsistent sequence lengths");
        for (int i = 0; i < n; ++i) {
            const int32_t v = seq.slots[i];
            if (v == MASK) throw UsageError("CountPrior::fit: training sequences must be MASK-free");
            if (v < 0 || v >= k) throw UsageError("CountPrior::fit: token id out of range");
            const int l = i > 0 ? seq.slots[i - 1] : boundary;
            const int r = i + 1 < n ? seq.slots[i + 1] : boundary;
            ++cp.at(i, l, r, v);
        }
    }
    return cp;
}

std::vector<std::vector<double>> CountPrior::predict(const TokenSeq& seq) const {
    check_seq(*this, seq);
    const int boundary = k_;

    std::vector<std::vector<double>> out(n_);
    for (int i = 0; i < n_; ++i) {
        if (seq.slots[i] != MASK) continue;

        const int l = i > 0 ? seq.slots[i - 1] : boundary;
        const int r = i + 1 < n_ ? seq.slots[i + 1] : boundary;

        // A MASK neighbor marginalizes its axis of the count table.
        std::vector<double> cnt(k_, 0.0);
        const int l_lo = (l == MASK) ? 0 : l;
        const int l_hi = (l == MASK) ? ctx_ - 1 : l;
        const int r_lo = (r == MASK) ? 0 : r;
        const int r_hi = (r == MASK) ? ctx_ - 1 : r;
        for (int li = l_lo; li <= l_hi; ++li)
            for (int ri = r_lo; ri <= r_hi; ++ri)
                for (int v = 0; v < k_; ++v)
                    cnt[v] += static_cast<double>(at(i, li, ri, v));

        double total = 0.0;
        for (double c : cnt) total += c;
        // Add-one smoothing keeps every conditional strictly positive.
        out[i].resize(k_);
        for (int v = 0; v < k_; ++v) out[i][v] = (cnt[v] + 1.0) / (total + k_);
    }
    return out;
}

void CountPrior::save(std::ostream& os) const {
    os << k_ << ' ' << n_ << '\n';
    for (int i = 0; i < n_; ++i)
        for (int l = 0; l < ctx_; ++l)
            for (int r = 0; r < ctx_; ++r) {
                for (int v = 0; v < k_; ++v)
                    os << at(i, l, r, v) << (v + 1 < k_ ? " " : "");
                os << '\n';
            }
}

void CountPrior::save_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    save(os);
}

CountPrior CountPrior::load(std::istream& is) {
    int k = 0, n = 0;
    if (!(is >> k >> n)) throw DataError("CountPrior: malformed header, expected 'K N'");
    if (k < 2 || n < 1) throw DataError("CountPrior: bad header values");
    CountPrior cp;
    cp.k_ = k;
    cp.n_ = n;
    cp.ctx_ = k + 1;
    cp.counts_.resize(static_cast<size_t>(n) * cp.ctx_ * cp.ctx_ * k);
    for (auto& c : cp.counts_)
        if (!(is >> c)) throw DataError("CountPrior: truncated count table");
    return cp;
}

CountPrior CountPrior::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    return load(is);
}

// ---------------------------------------------------------------------------
// CorruptedPrior

CorruptedPrior::CorruptedPrior(std::shared_ptr<const PriorModel> inner, double epsilon)
    : inner_(std::move(inner)), eps_(epsilon) {
    if (!inner_) throw UsageError("CorruptedPrior: null inner model");
    if (eps_ < 0.0 || eps_ > 1.0)
        throw UsageError("CorruptedPrior: epsilon must lie in [0, 1]");
}

std::vector<std::vector<double>> CorruptedPrior::predict(const TokenSeq& seq) const {
    auto out = inner_->predict(seq);
    if (eps_ == 0.0) return out;
    const double uniform = 1.0 / vocab_size();
    for (auto& dist : out)
        for (double& p : dist) p = (1.0 - eps_) * p + eps_ * uniform;
    return out;
}

// ---------------------------------------------------------------------------

TokenSeq sample_masked(const PriorModel& prior, const TokenSeq& seq, Rng& rng) {
    if (seq.mask_free()) return seq;
    const auto dists = prior.predict(seq);
    TokenSeq out = seq;
    for (int i = 0; i < seq.size(); ++i)
        if (seq.slots[i] == MASK)
            out.slots[i] = rng.categorical(dists[i]);
    return out;
}

} // namespace ms
