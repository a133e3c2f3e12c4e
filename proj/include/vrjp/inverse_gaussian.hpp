#pragma once

// Inverse Gaussian primitives.

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace vrjp {

// One draw from IG(mu, lambda) by the Michael-Schucany-Haas transformation:
// a root of the quadratic driven by a chi-square(1) variable, then a uniform
// choice between the root and its reflection mu^2/x.
template <class Rng>
double sample_ig(double mu, double lambda, Rng& rng) {
    if (!(mu > 0.0) || !(lambda > 0.0)) throw std::invalid_argument("sample_ig: mu and lambda must be positive");
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    const double nu = normal(rng);
    // Smaller root x = mu + mu^2 y/(2 lambda) - (mu/(2 lambda)) sqrt(4 mu lambda y + mu^2 y^2),
    // rewritten as mu / (1 + a + sqrt(a^2 + 2a)) with a = mu y / (2 lambda).
    const double a = mu * nu * nu / (2.0 * lambda);
    const double x = mu / (1.0 + a + std::sqrt(a * a + 2.0 * a));
    return unif(rng) <= mu / (mu + x) ? x : mu * mu / x;
}

// Density of IG(1, lambda).
inline double ig1_density(double t, double lambda) {
    if (t <= 0.0) return 0.0;
    return std::sqrt(lambda / (2.0 * std::numbers::pi * t * t * t)) *
           std::exp(-lambda * (t - 1.0) * (t - 1.0) / (2.0 * t));
}

// E[Y^p] for Y ~ IG(1, lambda):
//   sum_{k=0}^{p-1} (p-1+k)! / (k! (p-1-k)!) (2 lambda)^{-k}.
// Returns +infinity on overflow.
inline double ig_moment(int p, double lambda) {
    if (p < 1) throw std::invalid_argument("ig_moment: p must be >= 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("ig_moment: lambda must be positive");
    // Term ratio t_{k+1}/t_k = (p+k)(p-1-k) / ((k+1) 2 lambda).
    double term = 1.0, sum = 1.0;
    for (int k = 0; k + 1 <= p - 1; ++k) {
        term *= static_cast<double>(p + k) * static_cast<double>(p - 1 - k) / (static_cast<double>(k + 1) * 2.0 * lambda);
        sum += term;
        if (!std::isfinite(sum)) return std::numeric_limits<double>::infinity();
    }
    return sum;
}

}  // namespace vrjp
