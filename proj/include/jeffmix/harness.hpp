#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "jeffmix/mcmc.hpp"
#include "jeffmix/priors.hpp"

namespace jeffmix {

struct ExperimentSpec {
  MixtureModel truth;
  UnknownConfig config;
  PriorKind prior = PriorKind::Jeffreys;
  std::vector<std::size_t> sample_sizes;
  std::size_t replications = 10;
  McmcConfig mcmc;
  IntegrationSpec integration;
  std::uint64_t master_seed = 0;
  double init_loglik_slack = 20.0;  // accept inits with LL >= LL(truth) - slack
  std::size_t init_attempts = 500;
  DiagnoseThresholds thresholds;

  void validate() const;
};

// sampling problem bound to one data set: state layout, blocks, targets
struct Problem {
  std::vector<std::string> labels;
  BlockLayout layout;
  std::vector<double> truth_state;
  std::function<double(const std::vector<double>&)> log_target;
  std::function<double(const std::vector<double>&)> loglik;
  std::function<MixtureModel(const std::vector<double>&)> model_of_state;
};

Problem make_problem(const ExperimentSpec& spec, const DataSet& data);

// initialization rule: means uniform over the data range, sds uniform over
// (0.1 s, 2 s), weights Dirichlet(1,...,1); redrawn until the log-likelihood
// is within the slack of the truth's and the target is finite.
// Returns false when the attempt budget runs out.
bool draw_init(const ExperimentSpec& spec, const Problem& problem, const DataSet& data,
               std::uint64_t seed, std::vector<double>& init);

struct ReplicationRecord {
  std::size_t sample_size = 0;
  std::size_t replication = 0;
  std::uint64_t data_seed = 0;
  bool init_failed = false;
  ChainDiagnostics diag;
  std::vector<double> posterior_mean;  // coordinate means over post-burn-in states
  std::vector<double> final_state;
};

struct SizeRow {
  std::size_t sample_size = 0;
  double avg_accept_rate = 0.0;
  double prop_stuck_sigma = 0.0;
  double prop_divergent_means = 0.0;
  double mean_loglik_ratio = 0.0;
  double median_loglik_ratio = 0.0;
  std::size_t n_chains = 0;
  std::size_t n_init_failures = 0;
};

struct ReplicationReport {
  std::vector<SizeRow> rows;
  std::vector<ReplicationRecord> records;
};

// one chain per (sample size, replication); data seeded by
// mix(master_seed, size, r) so runs are order-independent under parallel
// dispatch and byte-identical for a fixed master seed
ReplicationReport run_experiment(const ExperimentSpec& spec,
                                 Execution exec = Execution::Serial);

enum class GridScale { Natural, Log };

struct GridAxis {
  std::string name;  // must match a free-parameter label of the config
  double lo = 0.0;
  double hi = 1.0;
  std::size_t steps = 2;
};

struct GridSpec {
  std::vector<GridAxis> axes;
  std::map<std::string, double> fixed;  // overrides for non-varying parameters
  GridScale scale = GridScale::Log;

  void validate() const;
};

struct GridResult {
  std::vector<GridAxis> axes;
  GridScale scale = GridScale::Log;
  std::vector<double> values;  // row-major, last axis fastest

  std::size_t cells() const;
};

// dense prior evaluation over the Cartesian grid; cells outside the weight
// simplex come back as -inf (0 on the natural scale)
GridResult prior_grid(const MixtureModel& model_template, const UnknownConfig& config,
                      const GridSpec& grid, const IntegrationSpec& spec,
                      PriorKind prior = PriorKind::Jeffreys,
                      Execution exec = Execution::Serial);

GridResult posterior_grid(const MixtureModel& model_template, const UnknownConfig& config,
                          const DataSet& data, const GridSpec& grid,
                          const IntegrationSpec& spec,
                          PriorKind prior = PriorKind::Jeffreys,
                          Execution exec = Execution::Serial);

struct ProbeBox {
  std::vector<std::pair<double, double>> bounds;  // one (lo,hi) per dimension
};

struct ProbeResult {
  std::vector<double> masses;
  bool plateau = false;  // last two masses within plateau_rel_tol
  double plateau_rel_tol = 0.01;
};

// mass of exp(log_density) over each nested box by tensorized midpoint
// quadrature; dimension capped at 3
ProbeResult properness_probe(
    const std::function<double(const std::vector<double>&)>& log_density,
    const std::vector<ProbeBox>& boxes, std::size_t points_per_dim,
    double plateau_rel_tol = 0.01, Execution exec = Execution::Serial);

inline ProbeResult properness_probe(
    const std::function<double(const std::vector<double>&)>& log_density,
    const std::vector<ProbeBox>& boxes, const IntegrationSpec& spec,
    double plateau_rel_tol = 0.01, Execution exec = Execution::Serial) {
  return properness_probe(log_density, boxes, static_cast<std::size_t>(spec.points),
                          plateau_rel_tol, exec);
}

// plain nested-loop evaluation of one box, kept as the reference for the
// chunked kernel inside properness_probe
double probe_mass_reference(
    const std::function<double(const std::vector<double>&)>& log_density,
    const ProbeBox& box, std::size_t points_per_dim);

struct IntegratorComparison {
  struct McSummary {
    std::size_t draws = 0;
    double mean = 0.0;
    double sd = 0.0;
  };
  struct ElementRow {
    std::size_t a = 0, b = 0;
    double riemann = 0.0;
    double adaptive = 0.0;
    std::vector<McSummary> mc;
  };
  std::vector<ElementRow> rows;
};

// Riemann / adaptive values plus Monte Carlo mean and sd across repeats for
// each draw count; repeats are sub-seeded from base.seed
IntegratorComparison compare_integrators(
    const MixtureModel& m, const UnknownConfig& config,
    const std::vector<std::pair<std::size_t, std::size_t>>& elements,
    const std::vector<std::size_t>& mc_draw_grid, std::size_t repeats,
    const IntegrationSpec& base, Execution exec = Execution::Serial);

}  // namespace jeffmix
