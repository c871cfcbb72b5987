#include "ms/eval.hpp"

#include "ms/errors.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace ms {

namespace {

constexpr int kDim = FeatureVector::kDim;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

FeatureVector extract_features(const Series& s) {
    FeatureVector f;
    const int len = static_cast<int>(s.size());
    if (len == 0) return f;

    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= len;

    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var /= len;

    f.mean = mean;
    f.stddev = std::sqrt(var);

    const double denom = var * len;
    if (denom > 1e-24 && len > 1) {
        double num = 0.0;
        for (int i = 0; i + 1 < len; ++i) num += (s[i] - mean) * (s[i + 1] - mean);
        f.lag1_autocorr = num / denom;
    }

    int crossings = 0;
    for (int i = 0; i + 1 < len; ++i)
        if ((s[i] - mean) * (s[i + 1] - mean) < 0.0) ++crossings;
    f.crossings = static_cast<double>(crossings) / len;

    // AC spectrum by direct DFT; lower half = bins below Nyquist/2
    double total = 0.0, low = 0.0;
    for (int k = 1; k < len; ++k) {
        double re = 0.0, im = 0.0;
        for (int t = 0; t < len; ++t) {
            const double ang = -2.0 * std::numbers::pi * k * t / len;
            re += s[t] * std::cos(ang);
            im += s[t] * std::sin(ang);
        }
        const double p = re * re + im * im;
        total += p;
        if (4 * std::min(k, len - k) <= len) low += p;
    }
    if (total > 1e-24) f.low_freq_energy = low / total;
    return f;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw UsageError("tv_distance: support size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
    return 0.5 * acc;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw UsageError("kl_divergence: support size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
        acc += p[i] * std::log(p[i] / q[i]);
    }
    return acc;
}

std::vector<double> empirical_distribution(const std::vector<TokenSeq>& seqs, int k, int n) {
    uint64_t states = 1;
    for (int i = 0; i < n; ++i) {
        states *= static_cast<uint64_t>(k);
        if (states > (1ull << 20))
            throw UsageError("empirical_distribution: K^N exceeds 2^20 guard");
    }
    std::vector<double> dist(states, 0.0);
    for (const TokenSeq& s : seqs) {
        if (s.size() != n) throw UsageError("empirical_distribution: length mismatch");
        uint64_t idx = 0;
        for (int i = 0; i < n; ++i) {
            if (s.slots[i] == MASK || s.slots[i] >= k)
                throw UsageError("empirical_distribution: invalid token");
            idx = idx * k + static_cast<uint64_t>(s.slots[i]);
        }
        dist[idx] += 1.0;
    }
    if (!seqs.empty())
        for (double& v : dist) v /= static_cast<double>(seqs.size());
    return dist;
}

double frechet_feature_distance(const std::vector<FeatureVector>& a,
                                const std::vector<FeatureVector>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw UsageError("frechet_feature_distance: need at least 2 vectors per side");

    auto moments = [](const std::vector<FeatureVector>& set,
                      Eigen::VectorXd& mu, Eigen::MatrixXd& cov) {
        const int n = static_cast<int>(set.size());
        Eigen::MatrixXd x(n, kDim);
        for (int i = 0; i < n; ++i) {
            const auto row = set[i].as_array();
            for (int j = 0; j < kDim; ++j) x(i, j) = row[j];
        }
        mu = x.colwise().mean();
        Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
        cov = centered.transpose() * centered / n;
        cov += 1e-6 * Eigen::MatrixXd::Identity(kDim, kDim);
    };

    Eigen::VectorXd mu1, mu2;
    Eigen::MatrixXd s1, s2;
    moments(a, mu1, s1);
    moments(b, mu2, s2);

    const Eigen::MatrixXd prod = s1 * s2;
    const Eigen::MatrixXd sym = 0.5 * (prod + prod.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    double tr_sqrt = 0.0;
    for (int i = 0; i < kDim; ++i)
        tr_sqrt += std::sqrt(std::max(0.0, eig.eigenvalues()[i]));

    const double d = (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
    return std::max(0.0, d);
}

void SoftmaxClassifier::fit(const std::vector<FeatureVector>& x, const std::vector<int>& y) {
    if (x.empty() || x.size() != y.size())
        throw UsageError("SoftmaxClassifier::fit: bad training data");

    labels_ = y;
    std::sort(labels_.begin(), labels_.end());
    labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
    const int classes = static_cast<int>(labels_.size());
    if (classes < 2) throw UsageError("SoftmaxClassifier::fit: need at least 2 classes");

    const int n = static_cast<int>(x.size());
    std::vector<int> dense(n);
    for (int i = 0; i < n; ++i)
        dense[i] = static_cast<int>(
            std::lower_bound(labels_.begin(), labels_.end(), y[i]) - labels_.begin());

    // standardize features on the training set
    std::vector<std::array<double, kDim>> feats(n);
    for (int i = 0; i < n; ++i) feats[i] = x[i].as_array();
    for (int j = 0; j < kDim; ++j) {
        double m = 0.0;
        for (int i = 0; i < n; ++i) m += feats[i][j];
        m /= n;
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += (feats[i][j] - m) * (feats[i][j] - m);
        v /= n;
        mu_[j] = m;
        sigma_[j] = v > 1e-24 ? std::sqrt(v) : 1.0;
        for (int i = 0; i < n; ++i) feats[i][j] = (feats[i][j] - m) / sigma_[j];
    }

    w_.assign(classes, std::vector<double>(kDim, 0.0));
    b_.assign(classes, 0.0);

    constexpr double lr = 0.5;
    constexpr double l2 = 1e-4;
    constexpr int epochs = 500;
    std::vector<double> logits(classes), probs(classes);
    std::vector<std::vector<double>> gw(classes, std::vector<double>(kDim));
    std::vector<double> gb(classes);

    for (int e = 0; e < epochs; ++e) {
        for (auto& g : gw) std::fill(g.begin(), g.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);

        for (int i = 0; i < n; ++i) {
            double mx = -std::numeric_limits<double>::max();
            for (int c = 0; c < classes; ++c) {
                logits[c] = b_[c];
                for (int j = 0; j < kDim; ++j) logits[c] += w_[c][j] * feats[i][j];
                mx = std::max(mx, logits[c]);
            }
            double z = 0.0;
            for (int c = 0; c < classes; ++c) z += (probs[c] = std::exp(logits[c] - mx));
            for (int c = 0; c < classes; ++c) {
                const double g = probs[c] / z - (dense[i] == c ? 1.0 : 0.0);
                for (int j = 0; j < kDim; ++j) gw[c][j] += g * feats[i][j];
                gb[c] += g;
            }
        }
        for (int c = 0; c < classes; ++c) {
            for (int j = 0; j < kDim; ++j)
                w_[c][j] -= lr * (gw[c][j] / n + l2 * w_[c][j]);
            b_[c] -= lr * gb[c] / n;
        }
    }
}

SoftmaxClassifier SoftmaxClassifier::from_weights(std::vector<std::vector<double>> w,
                                                  std::vector<double> bias,
                                                  std::vector<int> labels) {
    if (w.size() < 2 || w.size() != bias.size() || w.size() != labels.size())
        throw UsageError("SoftmaxClassifier::from_weights: inconsistent shapes");
    SoftmaxClassifier clf;
    clf.w_ = std::move(w);
    clf.b_ = std::move(bias);
    clf.labels_ = std::move(labels);
    clf.mu_.fill(0.0);
    clf.sigma_.fill(1.0);
    return clf;
}

std::vector<double> SoftmaxClassifier::predict_proba(const FeatureVector& f) const {
    if (!trained()) throw UsageError("SoftmaxClassifier: not trained");
    const int classes = num_classes();
    const auto raw = f.as_array();
    std::array<double, kDim> x{};
    for (int j = 0; j < kDim; ++j) x[j] = (raw[j] - mu_[j]) / sigma_[j];

    std::vector<double> logits(classes);
    double mx = -std::numeric_limits<double>::max();
    for (int c = 0; c < classes; ++c) {
        logits[c] = b_[c];
        for (int j = 0; j < kDim; ++j) logits[c] += w_[c][j] * x[j];
        mx = std::max(mx, logits[c]);
    }
    double z = 0.0;
    for (int c = 0; c < classes; ++c) z += (logits[c] = std::exp(logits[c] - mx));
    for (double& v : logits) v /= z;
    return logits;
}

int SoftmaxClassifier::predict(const FeatureVector& f) const {
    const auto p = predict_proba(f);
    int best = 0;
    for (int c = 1; c < static_cast<int>(p.size()); ++c)
        if (p[c] > p[best]) best = c;
    return labels_[best];
}

double is_analogue(const std::vector<Series>& gen, const SoftmaxClassifier& clf) {
    if (!clf.trained()) throw UsageError("is_analogue: classifier is not trained");
    if (gen.empty()) throw UsageError("is_analogue: empty generated set");

    const int classes = clf.num_classes();
    std::vector<std::vector<double>> probs;
    probs.reserve(gen.size());
    std::vector<double> marginal(classes, 0.0);
    for (const Series& s : gen) {
        probs.push_back(clf.predict_proba(extract_features(s)));
        for (int c = 0; c < classes; ++c) marginal[c] += probs.back()[c];
    }
    for (double& v : marginal) v /= static_cast<double>(gen.size());

    double mean_kl = 0.0;
    for (const auto& p : probs) {
        double kl = 0.0;
        for (int c = 0; c < classes; ++c)
            if (p[c] > 0.0) kl += p[c] * std::log(p[c] / marginal[c]);
        mean_kl += kl;
    }
    mean_kl /= static_cast<double>(gen.size());
    return std::exp(mean_kl);
}

double cas_analogue(const std::vector<LabeledSeries>& gen,
                    const std::vector<LabeledSeries>& real_test) {
    if (gen.empty() || real_test.empty())
        throw UsageError("cas_analogue: empty input");

    std::vector<FeatureVector> x;
    std::vector<int> y;
    x.reserve(gen.size());
    for (const auto& g : gen) {
        x.push_back(extract_features(g.values));
        y.push_back(g.label);
    }
    {
        std::vector<int> uniq = y;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        if (uniq.size() < 2)
            throw UsageError("cas_analogue: generated set has a single class");
    }

    SoftmaxClassifier clf;
    clf.fit(x, y);

    int correct = 0;
    for (const auto& r : real_test)
        if (clf.predict(extract_features(r.values)) == r.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(real_test.size());
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v && std::isfinite(*v))
            j[key] = *v;
        else
            j[key] = nullptr;
    };
    put("tv", tv);
    put("kl", kl);
    put("frechet", frechet);
    put("is_score", is_score);
    put("cas", cas);
    j["n_generated"] = n_generated;
    j["n_real"] = n_real;
    return j.dump(2);
}

std::string EvalReport::csv_header() {
    return "tv,kl,frechet,is_score,cas,n_generated,n_real";
}

std::string EvalReport::to_csv_row() const {
    std::ostringstream os;
    auto put = [&](const std::optional<double>& v, bool comma = true) {
        if (v && std::isfinite(*v)) os << fmt(*v);
        if (comma) os << ',';
    };
    put(tv);
    put(kl);
    put(frechet);
    put(is_score);
    put(cas);
    os << n_generated << ',' << n_real;
    return os.str();
}

} // namespace ms
