#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fv/errors.hpp"
#include "fv/rng.hpp"

namespace fv {

inline constexpr double kLogTwoPi = 1.8378770664093453;

// Numerically stable log(1 + e^x).
inline double softplus(double x) {
    return (x > 0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double log_sigmoid(double x) { return -softplus(-x); }

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double log_normal_pdf(double x, double mean, double log_var) {
    const double diff = x - mean;
    return -0.5 * (kLogTwoPi + log_var + diff * diff * std::exp(-log_var));
}

inline double log_standard_normal_pdf(double x) {
    return -0.5 * (kLogTwoPi + x * x);
}

// Diagonal-Gaussian posterior q(z|x) with one mean/log-variance per latent
// unit.
struct GaussianPosterior {
    std::vector<double> mean;
    std::vector<double> log_variance;

    std::int64_t dim() const { return static_cast<std::int64_t>(mean.size()); }
    void validate() const;
};

// mean + exp(0.5 * log_variance) * noise, elementwise.
std::vector<double> reparameterised_sample(const GaussianPosterior& post,
                                           const std::vector<double>& noise);

// KL(q(z|x) || N(0, I)) in closed form; nonnegative.
double kl_to_standard_normal(const GaussianPosterior& post);

// Sum over pixels of t*log(sigmoid(l)) + (1-t)*log(1-sigmoid(l)), evaluated
// without ever exponentiating a large positive logit. Targets must lie in
// [0,1]. Result is <= 0.
template <typename T>
double bernoulli_log_likelihood(const T* logits, const T* targets, std::int64_t n) {
    double total = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(targets[i]);
        if (!(t >= 0.0 && t <= 1.0)) throw DomainError("bernoulli_log_likelihood: target outside [0,1]");
        const double l = static_cast<double>(logits[i]);
        total += -t * softplus(-l) - (1.0 - t) * softplus(l);
    }
    return total;
}

double bernoulli_log_likelihood(const std::vector<double>& logits,
                                const std::vector<double>& targets);

// Uniform mixture of diagonal Gaussians. Exact joint and per-dimension
// marginal log densities are evaluated in log space with log-sum-exp; the
// direct product form underflows catastrophically in higher dimensions.
struct DiagGaussianMixture {
    std::int64_t dim = 0;
    std::vector<double> log_weights;   // size N
    std::vector<double> means;         // N x dim, row-major
    std::vector<double> log_vars;      // N x dim

    std::int64_t components() const { return static_cast<std::int64_t>(log_weights.size()); }

    static DiagGaussianMixture uniform(const std::vector<GaussianPosterior>& posts);
    static DiagGaussianMixture weighted(const std::vector<double>& weights,
                                        const std::vector<std::vector<double>>& means,
                                        const std::vector<std::vector<double>>& log_vars);

    double log_joint(const double* z) const;
    double log_marginal(std::int64_t j, double v) const;
    // Draw one point; consumes one index draw plus dim normal draws.
    void sample(CounterRng& rng, double* z_out) const;
};

struct KlDecomposition {
    double avg_kl = 0;        // closed form
    double mutual_info = 0;   // Monte Carlo
    double marginal_kl = 0;   // Monte Carlo
    double mutual_info_se = 0;
    double marginal_kl_se = 0;
    // Standard error of the summed integrand; the decomposition identity
    // |avg_kl - (mutual_info + marginal_kl)| is judged against this.
    double identity_se = 0;
};

// E_x[KL(q(z|x) || p(z))] = I(x;z) + KL(q(z) || p(z)) for q(z) the uniform
// mixture of the given posteriors. avg_kl is exact; the two right-hand terms
// are Monte Carlo estimates over a shared sample set.
KlDecomposition kl_decomposition_terms(const std::vector<GaussianPosterior>& posteriors,
                                       std::int64_t mc_samples, std::uint64_t seed);

// Mutual information via the index formulation r(i,z) = q(z|x^(i))/N:
// (1/N) sum_i KL(q(z|x_i) || q(z)), estimated with samples stratified per
// index. Returns (estimate, standard error).
std::pair<double, double> mutual_info_index_formulation(
    const std::vector<GaussianPosterior>& posteriors, std::int64_t samples_per_index,
    std::uint64_t seed);

}  // namespace fv
