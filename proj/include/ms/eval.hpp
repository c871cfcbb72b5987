#pragma once

#include "ms/series.hpp"
#include "ms/token.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ms {

/// Per-series summary used by the feature-space metrics: mean, standard
/// deviation, lag-1 autocorrelation (0 for constant series), mean
/// crossings per sample, and the fraction of AC spectral energy in the
/// lower half of the band.
struct FeatureVector {
    double mean = 0.0;
    double stddev = 0.0;
    double lag1_autocorr = 0.0;
    double crossings = 0.0;
    double low_freq_energy = 0.0;

    static constexpr int kDim = 5;
    std::array<double, kDim> as_array() const {
        return {mean, stddev, lag1_autocorr, crossings, low_freq_energy};
    }
};

FeatureVector extract_features(const Series& s);

/// 0.5 * L1 distance between two categorical distributions over the same
/// enumerated support. Throws UsageError on shape mismatch.
double tv_distance(std::span<const double> p, std::span<const double> q);

/// KL(p || q) by enumeration; +infinity when q lacks support where p has
/// mass. Throws UsageError on shape mismatch.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Empirical distribution of token sequences over the K^N support
/// (same indexing as TabularExactPrior).
std::vector<double> empirical_distribution(const std::vector<TokenSeq>& seqs, int k, int n);

/// Frechet distance between two Gaussian fits of feature sets:
/// |mu1-mu2|^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2)), with covariances
/// regularized by +1e-6 I and the matrix square root taken by
/// eigendecomposition of the symmetrized product (negative eigenvalues
/// clipped at 0). Requires at least 2 vectors per side.
double frechet_feature_distance(const std::vector<FeatureVector>& a,
                                const std::vector<FeatureVector>& b);

/// Multinomial logistic regression on standardized FeatureVectors.
/// Zero-initialized full-batch gradient descent: fit is deterministic.
class SoftmaxClassifier {
public:
    SoftmaxClassifier() = default;

    /// Labels may be arbitrary ints; they are mapped to dense class ids
    /// in ascending order. Throws UsageError with fewer than 2 classes.
    void fit(const std::vector<FeatureVector>& x, const std::vector<int>& y);

    /// Escape hatch for constructing a classifier with explicit weights
    /// (identity standardization); used by evaluation harnesses.
    static SoftmaxClassifier from_weights(std::vector<std::vector<double>> w,
                                          std::vector<double> bias,
                                          std::vector<int> labels);

    bool trained() const { return !w_.empty(); }
    int num_classes() const { return static_cast<int>(w_.size()); }

    /// p(y | x) over the dense class ids.
    std::vector<double> predict_proba(const FeatureVector& f) const;

    /// Original label of the argmax class (ties toward the lower id).
    int predict(const FeatureVector& f) const;

    const std::vector<int>& labels() const { return labels_; }

private:
    std::vector<std::vector<double>> w_; // classes x kDim
    std::vector<double> b_;
    std::vector<int> labels_;            // dense id -> original label
    std::array<double, FeatureVector::kDim> mu_{};
    std::array<double, FeatureVector::kDim> sigma_{};
};

/// Inception-score analogue: exp(E_x[KL(p(y|x) || p(y))]) over generated
/// series, with p(y) the mean predicted distribution. Always >= 1 and at
/// most the number of classes. Throws UsageError on an untrained
/// classifier.
double is_analogue(const std::vector<Series>& gen, const SoftmaxClassifier& clf);

/// Classification-accuracy analogue: train on generated labeled series,
/// report accuracy on the real test set. Throws UsageError when the
/// generated set has fewer than 2 classes.
double cas_analogue(const std::vector<LabeledSeries>& gen,
                    const std::vector<LabeledSeries>& real_test);

/// Metric bundle; fields are absent when the chosen mode cannot compute
/// them (tv/kl need an enumerable ground truth, cas needs labeled
/// generated data).
struct EvalReport {
    std::optional<double> tv;
    std::optional<double> kl;
    std::optional<double> frechet;
    std::optional<double> is_score;
    std::optional<double> cas;
    int n_generated = 0;
    int n_real = 0;

    std::string to_json() const;

    static std::string csv_header();
    std::string to_csv_row() const;
};

} // namespace ms
