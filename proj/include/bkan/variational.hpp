#pragma once

#include <cmath>

namespace bkan {

// One learnable parameter's mean-field Gaussian posterior. The scale is
// kept pre-softplus so optimization stays unconstrained: sigma = softplus(rho).
struct GaussianVariational {
  double mu = 0.0;
  double rho = -5.0;
};

// Gaussian prior shared by every parameter of a model.
struct PriorSpec {
  double mu0 = 0.0;
  double sigma0 = 1.0;
};

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// softplus(rho). Positive for all finite rho above roughly -745; below that
// the exp underflows and the result is exactly 0, which is the documented
// floor used to freeze a posterior into a point mass.
inline double sigma_of(const GaussianVariational& p) { return softplus(p.rho); }

// Inverse of sigma_of, for initializing rho from a target sigma.
inline double rho_for_sigma(double sigma) { return std::log(std::expm1(sigma)); }

// Reparameterized draw z = mu + sigma * eps with caller-supplied eps.
inline double reparam_sample(const GaussianVariational& p, double eps) {
  return p.mu + sigma_of(p) * eps;
}

// Closed-form KL(q || prior) between Gaussians:
//   ln(sigma0/sigma_q) + (sigma_q^2 + (mu_q - mu0)^2) / (2 sigma0^2) - 1/2
// Returns +inf for a sigma-floored posterior (point mass vs. a density).
inline double kl_gaussian(const GaussianVariational& q, const PriorSpec& prior) {
  const double sq = sigma_of(q);
  const double d = q.mu - prior.mu0;
  const double s0sq = prior.sigma0 * prior.sigma0;
  return std::log(prior.sigma0 / sq) + (sq * sq + d * d) / (2.0 * s0sq) - 0.5;
}

struct KlGrad {
  double d_mu = 0.0;
  double d_rho = 0.0;
};

// Analytic d KL / d mu and d KL / d rho (through dsigma/drho = logistic(rho)).
inline KlGrad kl_gaussian_grad(const GaussianVariational& q,
                               const PriorSpec& prior) {
  const double sq = sigma_of(q);
  const double s0sq = prior.sigma0 * prior.sigma0;
  const double d_sigma = -1.0 / sq + sq / s0sq;
  return {(q.mu - prior.mu0) / s0sq, d_sigma * logistic(q.rho)};
}

}  // namespace bkan
