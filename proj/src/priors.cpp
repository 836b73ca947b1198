#include "jeffmix/priors.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace jeffmix {

namespace {
constexpr double LOG_SQRT_2PI = 0.9189385332046727;

void warn_fisher_failure(const char* what) {
  static std::atomic<int> count{0};
  if (count.fetch_add(1) < 5)
    std::cerr << "warning: fisher evaluation failed (" << what
              << "); treating log-prior as -inf\n";
}
}  // namespace

PriorKind parse_prior_kind(const std::string& name) {
  if (name == "jeffreys") return PriorKind::Jeffreys;
  if (name == "hierarchical") return PriorKind::Hierarchical;
  if (name == "constant-means") return PriorKind::ConstantMeans;
  if (name == "jeffreys-rm-sigma") return PriorKind::JeffreysRmSigma;
  throw std::invalid_argument("unknown prior kind: " + name);
}

std::string prior_kind_name(PriorKind kind) {
  switch (kind) {
    case PriorKind::Jeffreys: return "jeffreys";
    case PriorKind::Hierarchical: return "hierarchical";
    case PriorKind::ConstantMeans: return "constant-means";
    case PriorKind::JeffreysRmSigma: return "jeffreys-rm-sigma";
  }
  throw std::logic_error("unreachable");
}

double half_logdet_psd(const Eigen::MatrixXd& F) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(F, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const double lmax = ev(ev.size() - 1);
  if (!(lmax > 0.0)) return NEG_INF;
  if (ev(0) < 1e-12 * lmax) return NEG_INF;
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) logdet += std::log(ev(i));
  return 0.5 * logdet;
}

double jeffreys_log_prior(const MixtureModel& m, const UnknownConfig& config,
                          const IntegrationSpec& spec) {
  try {
    return half_logdet_psd(fisher_matrix(m, config, spec).entries);
  } catch (const QuadratureFailure& e) {
    warn_fisher_failure(e.what());
    return NEG_INF;
  }
}

double conditional_delta_log_prior(double delta, const DeltaPriorFixed& fixed,
                                   const IntegrationSpec& spec) {
  if (!(fixed.tau > 0.0 && fixed.sigma > 0.0))
    throw std::domain_error("tau and sigma must be > 0");
  if (!(fixed.p > 0.0 && fixed.p < 1.0)) throw std::domain_error("p must be in (0,1)");
  const double p = fixed.p;
  const double sigma = fixed.sigma;
  const double shift = delta / (sigma * fixed.tau);
  const double L = normal_quantile(0.5 + 0.5 * spec.coverage) + 2.0;
  auto f = [&](double x) {
    const double num = (1.0 - p) * x * std::exp(-0.5 * x * x);
    const double den = p * sigma * std::exp(-0.5 * sigma * sigma * (x + shift) * (x + shift)) +
                       (1.0 - p) * std::exp(-0.5 * x * x);
    if (den < spec.density_floor) return 0.0;
    return num * num / den;
  };
  return 0.5 * std::log(integrate(f, -L, L, spec));
}

double rm_sigma_log_prior(double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("sigma must be > 0");
  if (sigma <= 1.0) return std::log(0.5);
  return std::log(0.5) - 2.0 * std::log(sigma);
}

double jeffreys_rm_sigma_log_prior(const MixtureModel& natural_k2,
                                   const IntegrationSpec& spec) {
  const UnknownConfig config{UnknownKind::AllReparam};
  const double sigma = natural_k2.components[1].scale / natural_k2.components[0].scale;
  try {
    const FisherMatrix F = fisher_matrix(natural_k2, config, spec);
    // Jeffreys block over (mu, tau, delta, p) conditional on the ratio sigma
    const Eigen::Index keep[4] = {0, 1, 2, 4};
    Eigen::MatrixXd sub(4, 4);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) sub(r, c) = F.entries(keep[r], keep[c]);
    return half_logdet_psd(sub) + rm_sigma_log_prior(sigma);
  } catch (const QuadratureFailure& e) {
    warn_fisher_failure(e.what());
    return NEG_INF;
  }
}

double hierarchical_log_posterior(const HierarchicalParams& params, const DataSet& data) {
  if (data.n() < 1) throw std::invalid_argument("hierarchical posterior needs data");
  const std::size_t k = params.means.size();
  if (params.sds.size() != k || params.weights.size() != k)
    throw std::invalid_argument("hierarchical parameter length mismatch");

  const double zeta0 = params.hyper_scale;
  if (!(zeta0 > 0.0)) return NEG_INF;
  double wsum = 0.0;
  for (double w : params.weights) {
    if (!(w > 0.0)) return NEG_INF;
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12) return NEG_INF;
  for (double s : params.sds)
    if (!(s > 0.0)) return NEG_INF;

  MixtureModel m;
  for (std::size_t i = 0; i < k; ++i)
    m.components.push_back({Family::Gaussian, params.means[i], params.sds[i], 1.0});
  m.weights = params.weights;

  double lp = log_likelihood(m, data);
  for (std::size_t i = 0; i < k; ++i) {
    const double z = (params.means[i] - params.hyper_mean) / zeta0;
    lp += -0.5 * z * z - std::log(zeta0) - LOG_SQRT_2PI;
    const double s = params.sds[i];
    lp += s <= zeta0 ? std::log(0.5 / zeta0) : std::log(0.5 * zeta0 / (s * s));
  }
  // Dirichlet(1/2,...,1/2) with its exact normalizing constant
  lp += std::lgamma(0.5 * k) - k * std::lgamma(0.5);
  for (double w : params.weights) lp += -0.5 * std::log(w);
  lp -= std::log(zeta0);
  return lp;
}

MixtureModel reparam_to_natural(const ReparamParams& rp) {
  const std::size_t k = rp.k();
  if (k < 2) throw std::invalid_argument("reparametrization needs k >= 2");
  if (rp.scale_ratios.size() != k - 1 || rp.sticks.size() != k - 2)
    throw std::invalid_argument("reparam field length mismatch");
  if (!(rp.tau > 0.0)) throw std::domain_error("tau must be > 0");
  for (double r : rp.scale_ratios)
    if (!(r > 0.0)) throw std::domain_error("scale ratios must be > 0");
  if (!(rp.p > 0.0 && rp.p < 1.0)) throw std::domain_error("p must be in (0,1)");
  for (double q : rp.sticks)
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("stick weights must be in (0,1)");

  MixtureModel m;
  m.components.resize(k);
  m.weights.resize(k);
  double mean = rp.mu;
  double sd = rp.tau;
  m.components[0] = {Family::Gaussian, mean, sd, 1.0};
  for (std::size_t j = 0; j + 1 < k; ++j) {
    mean += sd * rp.offsets[j];
    sd *= rp.scale_ratios[j];
    m.components[j + 1] = {Family::Gaussian, mean, sd, 1.0};
  }
  m.weights[0] = rp.p;
  double rem = 1.0 - rp.p;
  for (std::size_t j = 0; j + 2 < k; ++j) {
    m.weights[j + 1] = rem * rp.sticks[j];
    rem *= 1.0 - rp.sticks[j];
  }
  m.weights[k - 1] = rem;
  return m;
}

ReparamParams natural_to_reparam(const MixtureModel& m) {
  m.validate();
  if (!m.all_gaussian())
    throw UnsupportedFamily("reparametrization is defined for Gaussian mixtures");
  const std::size_t k = m.k();
  if (k < 2) throw std::invalid_argument("reparametrization needs k >= 2");
  ReparamParams rp;
  rp.mu = m.components[0].loc;
  rp.tau = m.components[0].scale;
  rp.offsets.resize(k - 1);
  rp.scale_ratios.resize(k - 1);
  for (std::size_t j = 0; j + 1 < k; ++j) {
    const double sd_j = m.components[j].scale;
    rp.offsets[j] = (m.components[j + 1].loc - m.components[j].loc) / sd_j;
    rp.scale_ratios[j] = m.components[j + 1].scale / sd_j;
  }
  rp.p = m.weights[0];
  rp.sticks.resize(k - 2);
  double rem = 1.0 - m.weights[0];
  for (std::size_t j = 0; j + 2 < k; ++j) {
    rp.sticks[j] = m.weights[j + 1] / rem;
    rem -= m.weights[j + 1];
  }
  return rp;
}

}  // namespace jeffmix
