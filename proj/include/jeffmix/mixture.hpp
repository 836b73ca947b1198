#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "jeffmix/common.hpp"

namespace jeffmix {

enum class Family { Gaussian, StudentT };

// One mixture component. scale is a standard deviation for Gaussian and a
// scale factor for StudentT (df=1 has no standard deviation, which forces
// the scale-factor reading); df is ignored for Gaussian.
struct Component {
  Family family = Family::Gaussian;
  double loc = 0.0;
  double scale = 1.0;
  double df = 1.0;

  double pdf(double x) const;
  double log_pdf(double x) const;
};

struct MixtureModel {
  std::vector<Component> components;
  std::vector<double> weights;

  std::size_t k() const { return components.size(); }
  bool all_gaussian() const;

  // throws std::invalid_argument on weight/scale/df violations
  void validate() const;

  double density(double x) const;
  double log_density(double x) const;
};

struct DataSet {
  std::vector<double> values;
  std::uint64_t seed = 0;  // provenance when simulated
  bool has_seed = false;

  std::size_t n() const { return values.size(); }
  double min() const;
  double max() const;
  double mean() const;
  double sd() const;
};

// sum of per-point log densities via log-sum-exp over components; 0 on empty data
double log_likelihood(const MixtureModel& m, const DataSet& data);

// likelihood as an explicit sum over all k^n allocations of observations to
// components; throws BudgetExceeded when k^n > 1e6
double allocation_likelihood(const MixtureModel& m, const DataSet& data);

// i.i.d. draws: component index from the weights, then a component draw;
// deterministic under fixed seed
DataSet sample(const MixtureModel& m, std::size_t n, std::uint64_t seed);

// [min_i(mu_i - z sigma_i), max_i(mu_i + z sigma_i)] with z the two-sided
// standard-normal quantile; every component keeps >= coverage mass inside.
// Gaussian components only; throws UnsupportedFamily otherwise.
std::pair<double, double> coverage_interval(const MixtureModel& m, double coverage);

}  // namespace jeffmix
