#include "ms/quantizer.hpp"

#include "ms/errors.hpp"
#include "ms/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace ms {

namespace {

double sq_dist(const double* a, const double* b, int d) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
        const double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return acc;
}

std::vector<std::vector<double>> slice_windows(const std::vector<Series>& series, int window) {
    std::vector<std::vector<double>> out;
    bool truncated = false;
    for (const Series& s : series) {
        const size_t usable = s.size() - s.size() % window;
        if (usable != s.size()) truncated = true;
        for (size_t i = 0; i + window <= usable; i += window)
            out.emplace_back(s.begin() + i, s.begin() + i + window);
    }
    if (truncated)
        std::cerr << "warning: series length not a window multiple; right-truncated\n";
    return out;
}

} // namespace

Codebook fit_codebook(const std::vector<Series>& series, const VQSpec& spec) {
    if (spec.window < 1) throw UsageError("fit_codebook: window must be >= 1");
    if (spec.k < 2) throw UsageError("fit_codebook: K must be >= 2");

    const auto points = slice_windows(series, spec.window);
    const int m = static_cast<int>(points.size());
    const int k = spec.k;
    const int d = spec.window;
    if (m < k)
        throw UsageError("fit_codebook: " + std::to_string(m) + " windows < K=" +
                         std::to_string(k));

    Rng rng(spec.seed);

    // k-means++ seeding
    std::vector<std::vector<double>> centroids;
    centroids.reserve(k);
    centroids.push_back(points[static_cast<int>(rng.uniform() * m) % m]);
    std::vector<double> dist2(m);
    for (int c = 1; c < k; ++c) {
        for (int i = 0; i < m; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& ctr : centroids)
                best = std::min(best, sq_dist(points[i].data(), ctr.data(), d));
            dist2[i] = best;
        }
        double total = 0.0;
        for (double v : dist2) total += v;
        if (total <= 0.0) {
            // all points already coincide with a centroid; any choice works
            centroids.push_back(points[static_cast<int>(rng.uniform() * m) % m]);
        } else {
            centroids.push_back(points[rng.categorical(dist2)]);
        }
    }

    std::vector<int> assign(m, 0);
    for (int it = 0; it < spec.iters; ++it) {
        bool changed = false;
        for (int i = 0; i < m; ++i) {
            int best = 0;
            double bestd = sq_dist(points[i].data(), centroids[0].data(), d);
            for (int c = 1; c < k; ++c) {
                const double dd = sq_dist(points[i].data(), centroids[c].data(), d);
                if (dd < bestd) { bestd = dd; best = c; }
            }
            if (assign[i] != best) { assign[i] = best; changed = true; }
        }

        std::vector<int> size(k, 0);
        for (int i = 0; i < m; ++i) ++size[assign[i]];
        for (int c = 0; c < k; ++c) {
            if (size[c] > 0) continue;
            // re-seed from the farthest point, taken from a cluster that
            // can spare one (pigeonhole: such a cluster always exists)
            int far = -1;
            double fard = -1.0;
            for (int i = 0; i < m; ++i) {
                if (size[assign[i]] < 2) continue;
                const double dd = sq_dist(points[i].data(), centroids[assign[i]].data(), d);
                if (dd > fard) { fard = dd; far = i; }
            }
            --size[assign[far]];
            assign[far] = c;
            size[c] = 1;
            changed = true;
        }

        std::vector<std::vector<double>> next(k, std::vector<double>(d, 0.0));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < d; ++j) next[assign[i]][j] += points[i][j];
        for (int c = 0; c < k; ++c)
            for (int j = 0; j < d; ++j) next[c][j] /= size[c];
        centroids = std::move(next);

        if (!changed && it > 0) break;
    }

    // distinct-rows invariant: nudge exact duplicates
    bool perturbed = false;
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < a; ++b) {
            while (centroids[a] == centroids[b]) {
                for (int j = 0; j < d; ++j) centroids[a][j] += 1e-6;
                perturbed = true;
            }
        }
    }
    if (perturbed)
        std::cerr << "warning: duplicate codebook rows perturbed by 1e-6\n";

    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(k) * d);
    for (const auto& c : centroids) flat.insert(flat.end(), c.begin(), c.end());
    return Codebook(k, d, std::move(flat));
}

TokenSeq encode(const Codebook& cb, const Series& series) {
    const int d = cb.dim();
    if (series.size() % d != 0)
        throw UsageError("encode: series length " + std::to_string(series.size()) +
                         " is not a multiple of window " + std::to_string(d));

    const int n = static_cast<int>(series.size()) / d;
    TokenSeq seq(std::vector<int32_t>(n, 0));
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double bestd = sq_dist(series.data() + static_cast<size_t>(i) * d, cb.row(0).data(), d);
        for (int c = 1; c < cb.size(); ++c) {
            const double dd = sq_dist(series.data() + static_cast<size_t>(i) * d,
                                      cb.row(c).data(), d);
            if (dd < bestd) { bestd = dd; best = c; } // ties keep the lower index
        }
        seq.slots[i] = best;
    }
    return seq;
}

Series decode(const Codebook& cb, const TokenSeq& seq) {
    if (!seq.mask_free()) throw UsageError("decode: sequence has MASK slots");
    Series out;
    out.reserve(static_cast<size_t>(seq.size()) * cb.dim());
    for (int32_t tok : seq.slots) {
        auto r = cb.row(tok);
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

double reconstruction_mse(const Codebook& cb, const std::vector<Series>& series) {
    double acc = 0.0;
    size_t count = 0;
    for (const Series& s : series) {
        const size_t usable = s.size() - s.size() % cb.dim();
        if (usable == 0) continue;
        Series trunc(s.begin(), s.begin() + usable);
        const Series rec = decode(cb, encode(cb, trunc));
        for (size_t i = 0; i < usable; ++i) {
            const double diff = rec[i] - trunc[i];
            acc += diff * diff;
        }
        count += usable;
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

} // namespace ms
