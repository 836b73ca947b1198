#include "jeffmix/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace jeffmix {

namespace {
constexpr double LOG_SQRT_2PI = 0.9189385332046727;  // log(sqrt(2*pi))
}

double Component::pdf(double x) const { return std::exp(log_pdf(x)); }

double Component::log_pdf(double x) const {
  const double z = (x - loc) / scale;
  if (family == Family::Gaussian) {
    return -0.5 * z * z - std::log(scale) - LOG_SQRT_2PI;
  }
  // location-scale Student t: (1/scale) * t_df((x-loc)/scale)
  return std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
         0.5 * std::log(df * M_PI) - std::log(scale) -
         0.5 * (df + 1.0) * std::log1p(z * z / df);
}

bool MixtureModel::all_gaussian() const {
  return std::all_of(components.begin(), components.end(),
                     [](const Component& c) { return c.family == Family::Gaussian; });
}

void MixtureModel::validate() const {
  if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
  if (weights.size() != components.size())
    throw std::invalid_argument("weights/components length mismatch");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("negative mixture weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("weights must sum to 1");
  for (const Component& c : components) {
    if (!(c.scale > 0.0)) throw std::invalid_argument("component scale must be > 0");
    if (c.family == Family::StudentT && !(c.df > 0.0))
      throw std::invalid_argument("StudentT df must be > 0");
  }
}

double MixtureModel::density(double x) const {
  double g = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i)
    g += weights[i] * components[i].pdf(x);
  return g;
}

double MixtureModel::log_density(double x) const {
  std::vector<double> terms;
  terms.reserve(components.size());
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (weights[i] > 0.0)
      terms.push_back(std::log(weights[i]) + components[i].log_pdf(x));
  }
  return logsumexp(terms);
}

double DataSet::min() const { return *std::min_element(values.begin(), values.end()); }
double DataSet::max() const { return *std::max_element(values.begin(), values.end()); }

double DataSet::mean() const {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double DataSet::sd() const {
  const double m = mean();
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double log_likelihood(const MixtureModel& m, const DataSet& data) {
  double ll = 0.0;
  for (double x : data.values) ll += m.log_density(x);
  return ll;
}

double allocation_likelihood(const MixtureModel& m, const DataSet& data) {
  const std::size_t k = m.k();
  const std::size_t n = data.n();
  double budget = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    budget *= static_cast<double>(k);
    if (budget > 1e6) throw BudgetExceeded("allocation sum needs k^n <= 1e6");
  }
  const auto total = static_cast<std::uint64_t>(budget);
  double sum = 0.0;
  std::vector<std::size_t> alloc(n, 0);
  for (std::uint64_t a = 0; a < total; ++a) {
    std::uint64_t rem = a;
    double term = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t c = rem % k;
      rem /= k;
      term *= m.weights[c] * m.components[c].pdf(data.values[j]);
    }
    sum += term;
  }
  return sum;  // n = 0: the single empty allocation gives 1
}

DataSet sample(const MixtureModel& m, std::size_t n, std::uint64_t seed) {
  DataSet out;
  out.seed = seed;
  out.has_seed = true;
  out.values.reserve(n);
  Rng rng(mix64(seed));
  for (std::size_t j = 0; j < n; ++j) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t c = m.k() - 1;
    for (std::size_t i = 0; i < m.k(); ++i) {
      cum += m.weights[i];
      if (u < cum) {
        c = i;
        break;
      }
    }
    const Component& comp = m.components[c];
    const double z = comp.family == Family::Gaussian ? rng.normal() : rng.student_t(comp.df);
    out.values.push_back(comp.loc + comp.scale * z);
  }
  return out;
}

std::pair<double, double> coverage_interval(const MixtureModel& m, double coverage) {
  if (!(coverage > 0.0 && coverage < 1.0))
    throw std::invalid_argument("coverage must be in (0,1)");
  if (!m.all_gaussian())
    throw UnsupportedFamily("coverage_interval needs Gaussian components; pass explicit bounds for StudentT");
  const double z = normal_quantile(0.5 + 0.5 * coverage);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Component& c : m.components) {
    lo = std::min(lo, c.loc - z * c.scale);
    hi = std::max(hi, c.loc + z * c.scale);
  }
  return {lo, hi};
}

}  // namespace jeffmix
