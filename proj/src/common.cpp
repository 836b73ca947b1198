#include "jeffmix/common.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>

namespace jeffmix {

namespace {
const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
}

double normal_cdf(double z) { return boost::math::cdf(std_normal, z); }

double normal_quantile(double p) { return boost::math::quantile(std_normal, p); }

double student_t_quantile(double df, double p) {
  boost::math::students_t_distribution<double> t(df);
  return boost::math::quantile(t, p);
}

double Rng::exponential() { return -std::log(uniform()); }

double logsumexp(const std::vector<double>& v) {
  if (v.empty()) return NEG_INF;
  double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace jeffmix
