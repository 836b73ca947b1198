#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "jeffmix/common.hpp"

namespace jeffmix {

enum class IntegrationMethod { Riemann, AdaptiveQuadrature, MonteCarlo, Auto };

// kebab-case names used by configs and the command line:
// riemann | adaptive | monte-carlo | auto
IntegrationMethod parse_integration_method(const std::string& name);
std::string integration_method_name(IntegrationMethod method);

struct IntegrationSpec {
  IntegrationMethod method = IntegrationMethod::Auto;
  int points = 550;             // Riemann subintervals
  double rel_tol = 1e-8;        // adaptive target
  int max_subdivisions = 2000;  // adaptive budget before quadrature-failure
  int draws = 1500;             // Monte Carlo sample size
  std::uint64_t seed = 0;       // Monte Carlo base seed
  double sigma_switch = 1e-2;   // Auto: Riemann at or above, Monte Carlo below
  double coverage = 0.99999;
  double density_floor = 1e-300;

  void validate() const;  // throws std::invalid_argument
};

double riemann_midpoint(const std::function<double(double)>& f, double lo, double hi,
                        int points);

// adaptive bisection driven by 15-point Gauss-Kronrod panel estimates;
// throws QuadratureFailure when the subdivision budget runs out
double adaptive_gauss_kronrod(const std::function<double(double)>& f, double lo,
                              double hi, double rel_tol, int max_subdivisions);

// deterministic quadrature of f over (lo, hi). Auto resolves to Riemann here
// (the small-sigma switch needs a model and lives in fisher_element);
// MonteCarlo is rejected because plain integrate has no sampling density.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const IntegrationSpec& spec);

}  // namespace jeffmix
