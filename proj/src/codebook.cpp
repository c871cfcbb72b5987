#include "ms/codebook.hpp"

#include "ms/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ms {

Codebook::Codebook(int k, int d, std::vector<double> data)
    : k_(k), d_(d), data_(std::move(data)) {
    if (k_ < 2) throw UsageError("Codebook: K must be >= 2, got " + std::to_string(k_));
    if (d_ < 1) throw UsageError("Codebook: D must be >= 1, got " + std::to_string(d_));
    if (static_cast<size_t>(k_) * d_ != data_.size())
        throw UsageError("Codebook: data size does not match K*D");
    for (double v : data_)
        if (!std::isfinite(v)) throw DataError("Codebook: non-finite entry");
    for (int a = 0; a < k_; ++a)
        for (int b = a + 1; b < k_; ++b) {
            bool same = true;
            for (int j = 0; j < d_; ++j)
                if (data_[a * d_ + j] != data_[b * d_ + j]) { same = false; break; }
            if (same)
                throw DataError("Codebook: rows " + std::to_string(a) + " and " +
                                std::to_string(b) + " are identical");
        }
}

std::span<const double> Codebook::row(int token) const {
    if (token < 0 || token >= k_)
        throw UsageError("Codebook::row: token id " + std::to_string(token) +
                         " out of range [0, " + std::to_string(k_) + ")");
    return {data_.data() + static_cast<size_t>(token) * d_, static_cast<size_t>(d_)};
}

void Codebook::save(std::ostream& os) const {
    os << k_ << ' ' << d_ << '\n';
    char buf[32];
    for (int i = 0; i < k_; ++i) {
        for (int j = 0; j < d_; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data_[static_cast<size_t>(i) * d_ + j]);
            os << buf << (j + 1 < d_ ? " " : "");
        }
        os << '\n';
    }
}

void Codebook::save_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    save(os);
}

Codebook Codebook::load(std::istream& is) {
    int k = 0, d = 0;
    if (!(is >> k >> d)) throw DataError("Codebook: malformed header, expected 'K D'");
    std::vector<double> data(static_cast<size_t>(k) * d);
    for (auto& v : data)
        if (!(is >> v)) throw DataError("Codebook: truncated row data");
    return Codebook(k, d, std::move(data));
}

Codebook Codebook::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    return load(is);
}

double latent_sq_dist(const Codebook& cb, int a, int b) {
    auto va = cb.row(a);
    auto vb = cb.row(b);
    double acc = 0.0;
    for (int j = 0; j < cb.dim(); ++j) {
        const double diff = va[j] - vb[j];
        acc += diff * diff;
    }
    return acc;
}

} // namespace ms
