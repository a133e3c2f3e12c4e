#pragma once

// Running summaries and the statistical test policy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace vrjp {

// Every statistical assertion compares a z-score against this many standard
// errors.
inline constexpr double kSigmaPolicy = 4.0;

// Welford accumulator; merge() is Chan's pairwise update.
struct EstimatorSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
        min = std::min(min, x);
        max = std::max(max, x);
    }

    static EstimatorSummary merge(const EstimatorSummary& a, const EstimatorSummary& b) {
        if (a.n == 0) return b;
        if (b.n == 0) return a;
        EstimatorSummary r;
        r.n = a.n + b.n;
        const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n), nn = static_cast<double>(r.n);
        const double d = b.mean - a.mean;
        r.mean = a.mean + d * nb / nn;
        r.m2 = a.m2 + b.m2 + d * d * na * nb / nn;
        r.min = std::min(a.min, b.min);
        r.max = std::max(a.max, b.max);
        return r;
    }

    bool has_ci() const { return n >= 2; }
    double variance() const { return n >= 2 ? m2 / static_cast<double>(n - 1) : std::numeric_limits<double>::quiet_NaN(); }
    double std_error() const {
        return n >= 2 ? std::sqrt(m2 / (static_cast<double>(n) * static_cast<double>(n - 1)))
                      : std::numeric_limits<double>::quiet_NaN();
    }
    double ci95() const { return 1.96 * std_error(); }
};

inline EstimatorSummary summarize(const std::vector<double>& xs) {
    EstimatorSummary s;
    for (double x : xs) s.add(x);
    return s;
}

inline double z_score(double estimate, double std_error, double expected) {
    const double d = estimate - expected;
    if (std_error > 0.0) return d / std_error;
    if (d == 0.0) return 0.0;
    return d > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

inline double z_score(const EstimatorSummary& s, double expected) { return z_score(s.mean, s.std_error(), expected); }

// z-score of the difference of two independent estimates.
inline double z_difference(const EstimatorSummary& a, const EstimatorSummary& b) {
    const double se = std::sqrt(a.std_error() * a.std_error() + b.std_error() * b.std_error());
    return z_score(a.mean - b.mean, se, 0.0);
}

inline bool within_policy(double z, double sigma = kSigmaPolicy) { return std::abs(z) <= sigma; }

// One-sided: estimate does not exceed `bound` by more than sigma standard errors.
inline bool below_policy(const EstimatorSummary& s, double bound, double sigma = kSigmaPolicy) {
    return s.mean <= bound + sigma * s.std_error();
}

struct MedianOfMeans {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t buckets = 0;
};

// Median of bucket means. The standard error uses the asymptotic efficiency
// of the median under normal bucket means, sqrt(pi/2) * sd / sqrt(B).
inline MedianOfMeans median_of_means(const std::vector<EstimatorSummary>& buckets) {
    if (buckets.size() < 3) throw std::invalid_argument("median_of_means: need at least 3 buckets");
    std::vector<double> means;
    EstimatorSummary spread;
    for (const auto& b : buckets) {
        means.push_back(b.mean);
        spread.add(b.mean);
    }
    std::sort(means.begin(), means.end());
    const std::size_t B = means.size();
    MedianOfMeans out;
    out.buckets = B;
    out.estimate = B % 2 ? means[B / 2] : 0.5 * (means[B / 2 - 1] + means[B / 2]);
    out.std_error = std::sqrt(std::numbers::pi / 2.0) * std::sqrt(spread.variance() / static_cast<double>(B));
    return out;
}

// Least-squares slope of y on x with the usual standard error.
struct SlopeFit {
    double slope = 0.0;
    double std_error = 0.0;
};

inline SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("fit_slope: need matching vectors of length >= 2");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    SlopeFit f;
    f.slope = sxy / sxx;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - my - f.slope * (x[i] - mx);
            rss += r * r;
        }
        f.std_error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
    return f;
}

}  // namespace vrjp
