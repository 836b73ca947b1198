#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "jeffmix/integrate.hpp"
#include "jeffmix/mixture.hpp"

namespace jeffmix {

// Which parameter block is unknown; selects the Fisher matrix layout.
// Parameter order within a layout: means, then scales, then free weights
// (the last weight is eliminated, p_k = 1 - sum). AllReparam (k=2 only)
// uses (mu, tau, delta, sigma, p).
enum class UnknownKind {
  WeightsOnly,
  MeansOnly,
  ScalesOnly,
  MeansAndWeights,
  All,
  AllReparam
};

struct UnknownConfig {
  UnknownKind kind = UnknownKind::WeightsOnly;

  std::size_t dim(std::size_t k) const;
  std::vector<std::string> labels(std::size_t k) const;
  void check_compatible(const MixtureModel& m) const;  // throws IncompatibleConfig
};

UnknownKind parse_unknown_kind(const std::string& name);
std::string unknown_kind_name(UnknownKind kind);

struct FisherMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd entries;
};

// gradient of log g(x) with respect to the free parameters of config;
// the density floor keeps entries finite where g underflows
std::vector<double> score(const MixtureModel& m, const UnknownConfig& config, double x,
                          double density_floor = 1e-300);

// one entry of the expected Fisher information: integral of
// score_a * score_b * g over the coverage interval (Riemann / adaptive), or
// a mean of score products over draws from g (Monte Carlo, sub-seeded by
// mix(spec.seed, a, b) so parallel element evaluation is reproducible).
// Adaptive failures propagate as QuadratureFailure; callers may fall back
// to Monte Carlo.
double fisher_element(const MixtureModel& m, const UnknownConfig& config, std::size_t a,
                      std::size_t b, const IntegrationSpec& spec);

// all d(d+1)/2 distinct entries, exactly symmetric. Auto resolves once per
// matrix: Riemann when every component scale >= sigma_switch, Monte Carlo
// otherwise. Adaptive elements that exhaust their budget fall back to Monte
// Carlo; QuadratureFailure propagates only if the fallback is non-finite.
FisherMatrix fisher_matrix(const MixtureModel& m, const UnknownConfig& config,
                           const IntegrationSpec& spec,
                           Execution exec = Execution::Serial);

// change of coordinates: J^T F J, relabelled
FisherMatrix transform_fisher(const FisherMatrix& F, const Eigen::MatrixXd& jacobian,
                              std::vector<std::string> labels = {});

}  // namespace jeffmix
