#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ms {

/// K discrete latent vectors of dimension D. Token id -> latent vector.
/// Invariants: K >= 2, all entries finite, no two rows identical.
class Codebook {
public:
    Codebook() = default;

    /// Row-major construction; validates invariants.
    Codebook(int k, int d, std::vector<double> data);

    int size() const { return k_; }  // K
    int dim() const { return d_; }   // D

    std::span<const double> row(int token) const;

    /// Textual serialization: header line "K D", then one row per line of
    /// D space-separated decimal reals.
    void save(std::ostream& os) const;
    void save_file(const std::string& path) const;
    static Codebook load(std::istream& is);
    static Codebook load_file(const std::string& path);

private:
    int k_ = 0;
    int d_ = 0;
    std::vector<double> data_; // k_ * d_, row-major
};

/// Squared Euclidean distance between the latent vectors of two tokens.
/// Symmetric, nonnegative, zero exactly when a == b.
/// Throws UsageError on an out-of-range token id.
double latent_sq_dist(const Codebook& cb, int a, int b);

} // namespace ms
