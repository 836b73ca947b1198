#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "jeffmix/fisher.hpp"

namespace jeffmix {

enum class PriorKind { Jeffreys, Hierarchical, ConstantMeans, JeffreysRmSigma };

PriorKind parse_prior_kind(const std::string& name);
std::string prior_kind_name(PriorKind kind);

// Mixture written around a reference location mu and reference scale tau:
// component j+1 sits at mean_j + sd_j * offsets[j] with sd_j * scale_ratios[j],
// weights stick-broken as (p, rem*q1, rem*(1-q1)*q2, ..., remainder).
// k=2 reduces to means (mu, mu + tau*delta), sds (tau, tau*sigma), (p, 1-p).
struct ReparamParams {
  double mu = 0.0;
  double tau = 1.0;
  std::vector<double> offsets;       // length k-1; k=2: {delta}
  std::vector<double> scale_ratios;  // length k-1; k=2: {sigma}
  double p = 0.5;
  std::vector<double> sticks;  // length k-2

  std::size_t k() const { return offsets.size() + 1; }
};

struct HierarchicalParams {
  std::vector<double> weights;  // simplex, length k
  std::vector<double> means;
  std::vector<double> sds;
  double hyper_mean = 0.0;   // mu0
  double hyper_scale = 1.0;  // zeta0
};

// 0.5 * logdet of a symmetric PSD-up-to-noise matrix; NEG_INF when the
// largest eigenvalue is nonpositive or the smallest is below 1e-12 of it
double half_logdet_psd(const Eigen::MatrixXd& F);

// 0.5 * logdet fisher_matrix(...); numerically singular matrices and
// quadrature failures map to NEG_INF so MCMC can treat them as zero density
double jeffreys_log_prior(const MixtureModel& m, const UnknownConfig& config,
                          const IntegrationSpec& spec);

struct DeltaPriorFixed {
  double mu = 0.0;
  double tau = 1.0;
  double sigma = 1.0;
  double p = 0.5;
};

// Jeffreys prior of the offset delta conditional on mu when only locations
// are unknown, evaluated on a fixed symmetric x-interval (the integrand
// decays like x^2 exp(-x^2) uniformly in delta, so the interval does not
// depend on delta). Even in delta; flattens to a plateau for large |delta|.
double conditional_delta_log_prior(double delta, const DeltaPriorFixed& fixed,
                                   const IntegrationSpec& spec);

// proper scale-ratio prior: (1/2)U(0,1] plus (1/2) sigma^-2 on (1, inf)
double rm_sigma_log_prior(double sigma);

// rm_sigma prior on the scale ratio plus the Jeffreys prior of
// (mu, tau, delta, p) conditional on it, for a k=2 Gaussian model
double jeffreys_rm_sigma_log_prior(const MixtureModel& natural_k2,
                                   const IntegrationSpec& spec);

// unnormalized log posterior of the hierarchical model:
// x ~ mixture, mu_i ~ N(mu0, zeta0^2),
// sigma_i ~ (1/2)U(0,zeta0) + (1/2) zeta0/sigma^2 on (zeta0, inf),
// weights ~ Dir(1/2,...,1/2) with its exact constant, pi(mu0,zeta0) = 1/zeta0.
// Outside the support returns NEG_INF.
double hierarchical_log_posterior(const HierarchicalParams& params, const DataSet& data);

MixtureModel reparam_to_natural(const ReparamParams& rp);
ReparamParams natural_to_reparam(const MixtureModel& m);

}  // namespace jeffmix
