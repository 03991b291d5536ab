#include "fv/distributions.hpp"

#include <algorithm>
#include <limits>

namespace fv {

void GaussianPosterior::validate() const {
    if (mean.empty() || mean.size() != log_variance.size())
        throw DimensionError("GaussianPosterior: mean/log_variance length mismatch");
    for (double v : log_variance) {
        if (!std::isfinite(v)) throw DomainError("GaussianPosterior: non-finite log variance");
    }
    for (double m : mean) {
        if (!std::isfinite(m)) throw DomainError("GaussianPosterior: non-finite mean");
    }
}

std::vector<double> reparameterised_sample(const GaussianPosterior& post,
                                           const std::vector<double>& noise) {
    post.validate();
    if (noise.size() != post.mean.size())
        throw DimensionError("reparameterised_sample: noise length mismatch");
    std::vector<double> z(post.mean.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        z[j] = post.mean[j] + std::exp(0.5 * post.log_variance[j]) * noise[j];
    }
    return z;
}

double kl_to_standard_normal(const GaussianPosterior& post) {
    post.validate();
    double kl = 0.0;
    for (std::size_t j = 0; j < post.mean.size(); ++j) {
        const double mu = post.mean[j];
        const double lv = post.log_variance[j];
        kl += 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
    }
    return kl;
}

double bernoulli_log_likelihood(const std::vector<double>& logits,
                                const std::vector<double>& targets) {
    if (logits.size() != targets.size())
        throw DimensionError("bernoulli_log_likelihood: length mismatch");
    return bernoulli_log_likelihood(logits.data(), targets.data(),
                                    static_cast<std::int64_t>(logits.size()));
}

DiagGaussianMixture DiagGaussianMixture::uniform(const std::vector<GaussianPosterior>& posts) {
    if (posts.size() < 1) throw DimensionError("mixture: needs at least one component");
    DiagGaussianMixture m;
    m.dim = posts[0].dim();
    const double logw = -std::log(static_cast<double>(posts.size()));
    for (const auto& p : posts) {
        p.validate();
        if (p.dim() != m.dim) throw DimensionError("mixture: inconsistent dimensions");
        m.log_weights.push_back(logw);
        m.means.insert(m.means.end(), p.mean.begin(), p.mean.end());
        m.log_vars.insert(m.log_vars.end(), p.log_variance.begin(), p.log_variance.end());
    }
    return m;
}

DiagGaussianMixture DiagGaussianMixture::weighted(
    const std::vector<double>& weights, const std::vector<std::vector<double>>& means,
    const std::vector<std::vector<double>>& log_vars) {
    if (weights.empty() || weights.size() != means.size() || weights.size() != log_vars.size())
        throw DimensionError("mixture: component count mismatch");
    DiagGaussianMixture m;
    m.dim = static_cast<std::int64_t>(means[0].size());
    double total = 0.0;
    for (double w : weights) {
        if (w <= 0) throw DomainError("mixture: weights must be positive");
        total += w;
    }
    for (std::size_t c = 0; c < weights.size(); ++c) {
        if (static_cast<std::int64_t>(means[c].size()) != m.dim ||
            static_cast<std::int64_t>(log_vars[c].size()) != m.dim)
            throw DimensionError("mixture: inconsistent dimensions");
        m.log_weights.push_back(std::log(weights[c] / total));
        m.means.insert(m.means.end(), means[c].begin(), means[c].end());
        m.log_vars.insert(m.log_vars.end(), log_vars[c].begin(), log_vars[c].end());
    }
    return m;
}

namespace {

double log_sum_exp(const std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace

double DiagGaussianMixture::log_joint(const double* z) const {
    const std::int64_t N = components();
    std::vector<double> terms(static_cast<std::size_t>(N));
    for (std::int64_t c = 0; c < N; ++c) {
        double lp = log_weights[c];
        const double* mu = means.data() + c * dim;
        const double* lv = log_vars.data() + c * dim;
        for (std::int64_t j = 0; j < dim; ++j) lp += log_normal_pdf(z[j], mu[j], lv[j]);
        terms[static_cast<std::size_t>(c)] = lp;
    }
    return log_sum_exp(terms);
}

double DiagGaussianMixture::log_marginal(std::int64_t j, double v) const {
    const std::int64_t N = components();
    std::vector<double> terms(static_cast<std::size_t>(N));
    for (std::int64_t c = 0; c < N; ++c) {
        terms[static_cast<std::size_t>(c)] =
            log_weights[c] + log_normal_pdf(v, means[c * dim + j], log_vars[c * dim + j]);
    }
    return log_sum_exp(terms);
}

void DiagGaussianMixture::sample(CounterRng& rng, double* z_out) const {
    const std::int64_t N = components();
    std::int64_t c = 0;
    if (N > 1) {
        const double u = rng.uniform();
        double acc = 0.0;
        for (c = 0; c < N; ++c) {
            acc += std::exp(log_weights[c]);
            if (u < acc) break;
        }
        if (c == N) c = N - 1;
    } else {
        rng.uniform();  // keep draw counts independent of N
    }
    const double* mu = means.data() + c * dim;
    const double* lv = log_vars.data() + c * dim;
    for (std::int64_t j = 0; j < dim; ++j) {
        z_out[j] = mu[j] + std::exp(0.5 * lv[j]) * rng.normal();
    }
}

KlDecomposition kl_decomposition_terms(const std::vector<GaussianPosterior>& posteriors,
                                       std::int64_t mc_samples, std::uint64_t seed) {
    if (posteriors.size() < 2)
        throw DimensionError("kl_decomposition_terms: needs at least two posteriors");
    if (mc_samples < 1) throw ConfigError("kl_decomposition_terms: mc_samples must be >= 1");

    const auto mixture = DiagGaussianMixture::uniform(posteriors);
    const std::int64_t N = mixture.components();
    const std::int64_t d = mixture.dim;

    KlDecomposition out;
    for (const auto& p : posteriors) out.avg_kl += kl_to_standard_normal(p);
    out.avg_kl /= static_cast<double>(N);

    CounterRng rng(seed);
    std::vector<double> z(static_cast<std::size_t>(d));
    double mi_sum = 0, mi_sq = 0, mk_sum = 0, mk_sq = 0, id_sq = 0;
    for (std::int64_t s = 0; s < mc_samples; ++s) {
        const std::int64_t i = static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(N)));
        const auto& p = posteriors[static_cast<std::size_t>(i)];
        double log_qzx = 0.0;
        for (std::int64_t j = 0; j < d; ++j) {
            z[static_cast<std::size_t>(j)] =
                p.mean[static_cast<std::size_t>(j)] +
                std::exp(0.5 * p.log_variance[static_cast<std::size_t>(j)]) * rng.normal();
            log_qzx += log_normal_pdf(z[static_cast<std::size_t>(j)], p.mean[static_cast<std::size_t>(j)],
                                      p.log_variance[static_cast<std::size_t>(j)]);
        }
        const double log_qz = mixture.log_joint(z.data());
        double log_pz = 0.0;
        for (std::int64_t j = 0; j < d; ++j) log_pz += log_standard_normal_pdf(z[static_cast<std::size_t>(j)]);

        const double term_mi = log_qzx - log_qz;
        const double term_mk = log_qz - log_pz;
        mi_sum += term_mi;
        mi_sq += term_mi * term_mi;
        mk_sum += term_mk;
        mk_sq += term_mk * term_mk;
        const double term_id = term_mi + term_mk;
        id_sq += term_id * term_id;
    }

    const double S = static_cast<double>(mc_samples);
    out.mutual_info = mi_sum / S;
    out.marginal_kl = mk_sum / S;
    auto se = [S](double sum, double sq) {
        if (S < 2) return std::numeric_limits<double>::infinity();
        const double var = std::max(0.0, (sq - sum * sum / S) / (S - 1));
        return std::sqrt(var / S);
    };
    out.mutual_info_se = se(mi_sum, mi_sq);
    out.marginal_kl_se = se(mk_sum, mk_sq);
    out.identity_se = se(mi_sum + mk_sum, id_sq);
    return out;
}

std::pair<double, double> mutual_info_index_formulation(
    const std::vector<GaussianPosterior>& posteriors, std::int64_t samples_per_index,
    std::uint64_t seed) {
    if (posteriors.size() < 2)
        throw DimensionError("mutual_info_index_formulation: needs at least two posteriors");
    if (samples_per_index < 1)
        throw ConfigError("mutual_info_index_formulation: samples_per_index must be >= 1");

    const auto mixture = DiagGaussianMixture::uniform(posteriors);
    const std::int64_t N = mixture.components();
    const std::int64_t d = mixture.dim;

    CounterRng rng(seed);
    std::vector<double> z(static_cast<std::size_t>(d));
    double sum = 0, sq = 0;
    const std::int64_t total = N * samples_per_index;
    for (std::int64_t i = 0; i < N; ++i) {
        const auto& p = posteriors[static_cast<std::size_t>(i)];
        for (std::int64_t s = 0; s < samples_per_index; ++s) {
            double log_qzx = 0.0;
            for (std::int64_t j = 0; j < d; ++j) {
                z[static_cast<std::size_t>(j)] =
                    p.mean[static_cast<std::size_t>(j)] +
                    std::exp(0.5 * p.log_variance[static_cast<std::size_t>(j)]) * rng.normal();
                log_qzx += log_normal_pdf(z[static_cast<std::size_t>(j)],
                                          p.mean[static_cast<std::size_t>(j)],
                                          p.log_variance[static_cast<std::size_t>(j)]);
            }
            const double term = log_qzx - mixture.log_joint(z.data());
            sum += term;
            sq += term * term;
        }
    }
    const double S = static_cast<double>(total);
    const double var = std::max(0.0, (sq - sum * sum / S) / (S - 1));
    return {sum / S, std::sqrt(var / S)};
}

}  // namespace fv
