#include "jeffmix/integrate.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

namespace jeffmix {

IntegrationMethod parse_integration_method(const std::string& name) {
  if (name == "riemann") return IntegrationMethod::Riemann;
  if (name == "adaptive") return IntegrationMethod::AdaptiveQuadrature;
  if (name == "monte-carlo") return IntegrationMethod::MonteCarlo;
  if (name == "auto") return IntegrationMethod::Auto;
  throw std::invalid_argument("unknown integration method '" + name +
                              "' (riemann | adaptive | monte-carlo | auto)");
}

std::string integration_method_name(IntegrationMethod method) {
  switch (method) {
    case IntegrationMethod::Riemann: return "riemann";
    case IntegrationMethod::AdaptiveQuadrature: return "adaptive";
    case IntegrationMethod::MonteCarlo: return "monte-carlo";
    case IntegrationMethod::Auto: return "auto";
  }
  throw std::logic_error("unreachable");
}

void IntegrationSpec::validate() const {
  if (points < 2) throw std::invalid_argument("integration points must be >= 2");
  if (draws < 2) throw std::invalid_argument("draws must be >= 2");
  if (!(coverage > 0.0 && coverage < 1.0))
    throw std::invalid_argument("coverage must be in (0,1)");
  if (!(density_floor > 0.0)) throw std::invalid_argument("density_floor must be > 0");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
  if (max_subdivisions < 1) throw std::invalid_argument("max_subdivisions must be >= 1");
  if (!(sigma_switch > 0.0)) throw std::invalid_argument("sigma_switch must be > 0");
}

double riemann_midpoint(const std::function<double(double)>& f, double lo, double hi,
                        int points) {
  const double h = (hi - lo) / points;
  double sum = 0.0;
  for (int i = 0; i < points; ++i) sum += f(lo + (i + 0.5) * h);
  return sum * h;
}

namespace {

struct Panel {
  double err;
  double lo, hi;
  double value;
  bool operator<(const Panel& o) const { return err < o.err; }
};

Panel gk_panel(const std::function<double(double)>& f, double lo, double hi) {
  using rule = boost::math::quadrature::gauss_kronrod<double, 15>;
  double err = 0.0;
  // max_depth 0 gives the plain 15-point panel plus its error estimate
  const double v = rule::integrate(f, lo, hi, 0, 0.0, &err);
  return Panel{err, lo, hi, v};
}

}  // namespace

double adaptive_gauss_kronrod(const std::function<double(double)>& f, double lo,
                              double hi, double rel_tol, int max_subdivisions) {
  std::priority_queue<Panel> queue;
  queue.push(gk_panel(f, lo, hi));
  double total = queue.top().value;
  double total_err = queue.top().err;
  int used = 0;
  while (total_err > rel_tol * std::abs(total) + 1e-14) {
    if (++used > max_subdivisions)
      throw QuadratureFailure("adaptive quadrature exhausted its subdivision budget");
    const Panel worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    const Panel left = gk_panel(f, worst.lo, mid);
    const Panel right = gk_panel(f, mid, worst.hi);
    total += left.value + right.value - worst.value;
    total_err += left.err + right.err - worst.err;
    queue.push(left);
    queue.push(right);
  }
  // re-sum in interval order for a stable final value
  std::vector<Panel> panels;
  panels.reserve(queue.size());
  while (!queue.empty()) {
    panels.push_back(queue.top());
    queue.pop();
  }
  std::sort(panels.begin(), panels.end(),
            [](const Panel& a, const Panel& b) { return a.lo < b.lo; });
  double sum = 0.0;
  for (const Panel& p : panels) sum += p.value;
  return sum;
}

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const IntegrationSpec& spec) {
  spec.validate();
  if (!(lo < hi)) throw std::invalid_argument("integration interval needs lo < hi");
  switch (spec.method) {
    case IntegrationMethod::Riemann:
    case IntegrationMethod::Auto:
      return riemann_midpoint(f, lo, hi, spec.points);
    case IntegrationMethod::AdaptiveQuadrature:
      return adaptive_gauss_kronrod(f, lo, hi, spec.rel_tol, spec.max_subdivisions);
    case IntegrationMethod::MonteCarlo:
      throw IncompatibleConfig("Monte Carlo integration needs a sampling density; use fisher_element");
  }
  throw std::logic_error("unreachable");
}

}  // namespace jeffmix
