#include "jeffmix/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace jeffmix {

std::size_t UnknownConfig::dim(std::size_t k) const {
  switch (kind) {
    case UnknownKind::WeightsOnly: return k - 1;
    case UnknownKind::MeansOnly: return k;
    case UnknownKind::ScalesOnly: return k;
    case UnknownKind::MeansAndWeights: return 2 * k - 1;
    case UnknownKind::All: return 3 * k - 1;
    case UnknownKind::AllReparam: return 5;
  }
  throw std::logic_error("unreachable");
}

std::vector<std::string> UnknownConfig::labels(std::size_t k) const {
  std::vector<std::string> out;
  auto means = [&] {
    for (std::size_t i = 1; i <= k; ++i) out.push_back("mu" + std::to_string(i));
  };
  auto scales = [&] {
    for (std::size_t i = 1; i <= k; ++i) out.push_back("sigma" + std::to_string(i));
  };
  auto weights = [&] {
    for (std::size_t i = 1; i < k; ++i) out.push_back("p" + std::to_string(i));
  };
  switch (kind) {
    case UnknownKind::WeightsOnly: weights(); break;
    case UnknownKind::MeansOnly: means(); break;
    case UnknownKind::ScalesOnly: scales(); break;
    case UnknownKind::MeansAndWeights: means(); weights(); break;
    case UnknownKind::All: means(); scales(); weights(); break;
    case UnknownKind::AllReparam: out = {"mu", "tau", "delta", "sigma", "p"}; break;
  }
  return out;
}

void UnknownConfig::check_compatible(const MixtureModel& m) const {
  m.validate();
  if (m.k() < 2) throw IncompatibleConfig("Fisher configurations need k >= 2");
  if (kind == UnknownKind::AllReparam && m.k() != 2)
    throw IncompatibleConfig("AllReparam is defined for k = 2");
  if (kind != UnknownKind::WeightsOnly && !m.all_gaussian())
    throw IncompatibleConfig("this configuration requires all components Gaussian");
}

UnknownKind parse_unknown_kind(const std::string& name) {
  if (name == "weights-only") return UnknownKind::WeightsOnly;
  if (name == "means-only") return UnknownKind::MeansOnly;
  if (name == "scales-only") return UnknownKind::ScalesOnly;
  if (name == "means-and-weights") return UnknownKind::MeansAndWeights;
  if (name == "all") return UnknownKind::All;
  if (name == "all-reparam") return UnknownKind::AllReparam;
  throw std::invalid_argument("unknown parameter configuration: " + name);
}

std::string unknown_kind_name(UnknownKind kind) {
  switch (kind) {
    case UnknownKind::WeightsOnly: return "weights-only";
    case UnknownKind::MeansOnly: return "means-only";
    case UnknownKind::ScalesOnly: return "scales-only";
    case UnknownKind::MeansAndWeights: return "means-and-weights";
    case UnknownKind::All: return "all";
    case UnknownKind::AllReparam: return "all-reparam";
  }
  throw std::logic_error("unreachable");
}

namespace {

// unchecked score kernel with caller-owned buffers; raw_g is the density
// before the floor is applied (the floor only guards denominators)
void score_core(const MixtureModel& m, UnknownKind kind, double x, double density_floor,
                std::vector<double>& f, double& raw_g, std::vector<double>& s);

void append_mean_scores(const MixtureModel& m, const std::vector<double>& f, double g,
                        double x, std::vector<double>& s) {
  for (std::size_t i = 0; i < m.k(); ++i) {
    const Component& c = m.components[i];
    s.push_back(m.weights[i] * (x - c.loc) * f[i] / (c.scale * c.scale * g));
  }
}

void append_scale_scores(const MixtureModel& m, const std::vector<double>& f, double g,
                         double x, std::vector<double>& s) {
  for (std::size_t i = 0; i < m.k(); ++i) {
    const Component& c = m.components[i];
    const double z2 = (x - c.loc) * (x - c.loc) / (c.scale * c.scale);
    s.push_back(m.weights[i] / c.scale * (z2 - 1.0) * f[i] / g);
  }
}

void append_weight_scores(const MixtureModel& m, const std::vector<double>& f, double g,
                          std::vector<double>& s) {
  for (std::size_t i = 0; i + 1 < m.k(); ++i) s.push_back((f[i] - f.back()) / g);
}

// coverage envelope usable for both families; coincides with
// coverage_interval on all-Gaussian models
std::pair<double, double> integration_interval(const MixtureModel& m, double coverage) {
  if (m.all_gaussian()) return coverage_interval(m, coverage);
  const double hi_p = 0.5 + 0.5 * coverage;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Component& c : m.components) {
    const double q = c.family == Family::Gaussian ? normal_quantile(hi_p)
                                                  : student_t_quantile(c.df, hi_p);
    lo = std::min(lo, c.loc - q * c.scale);
    hi = std::max(hi, c.loc + q * c.scale);
  }
  return {lo, hi};
}

IntegrationMethod resolve_method(const MixtureModel& m, const IntegrationSpec& spec) {
  if (spec.method != IntegrationMethod::Auto) return spec.method;
  double min_scale = std::numeric_limits<double>::infinity();
  for (const Component& c : m.components) min_scale = std::min(min_scale, c.scale);
  return min_scale >= spec.sigma_switch ? IntegrationMethod::Riemann
                                        : IntegrationMethod::MonteCarlo;
}

double mc_fisher_element(const MixtureModel& m, const UnknownConfig& config,
                         std::size_t a, std::size_t b, const IntegrationSpec& spec) {
  const std::uint64_t sub_seed =
      mix64(spec.seed, std::min(a, b), std::max(a, b));
  const DataSet draws = sample(m, static_cast<std::size_t>(spec.draws), sub_seed);
  double acc = 0.0;
  std::vector<double> f, s;
  double g = 0.0;
  for (double x : draws.values) {
    score_core(m, config.kind, x, spec.density_floor, f, g, s);
    if (g < spec.density_floor) continue;  // integrand defined as 0 there
    acc += s[a] * s[b];
  }
  return acc / spec.draws;
}

void score_core(const MixtureModel& m, UnknownKind kind, double x, double density_floor,
                std::vector<double>& f, double& raw_g, std::vector<double>& s) {
  const std::size_t k = m.k();
  f.resize(k);
  double g = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    f[i] = m.components[i].pdf(x);
    g += m.weights[i] * f[i];
  }
  raw_g = g;
  g = std::max(g, density_floor);

  s.clear();
  switch (kind) {
    case UnknownKind::WeightsOnly:
      append_weight_scores(m, f, g, s);
      break;
    case UnknownKind::MeansOnly:
      append_mean_scores(m, f, g, x, s);
      break;
    case UnknownKind::ScalesOnly:
      append_scale_scores(m, f, g, x, s);
      break;
    case UnknownKind::MeansAndWeights:
      append_mean_scores(m, f, g, x, s);
      append_weight_scores(m, f, g, s);
      break;
    case UnknownKind::All:
      append_mean_scores(m, f, g, x, s);
      append_scale_scores(m, f, g, x, s);
      append_weight_scores(m, f, g, s);
      break;
    case UnknownKind::AllReparam: {
      // chain rule through means (mu1, mu1 + tau*delta), sds (tau, tau*sigma),
      // weights (p, 1-p): tau = sd1, delta = (mu2-mu1)/sd1, sigma = sd2/sd1
      append_mean_scores(m, f, g, x, s);
      append_scale_scores(m, f, g, x, s);
      append_weight_scores(m, f, g, s);
      const double tau = m.components[0].scale;
      const double delta = (m.components[1].loc - m.components[0].loc) / tau;
      const double sigma = m.components[1].scale / tau;
      const double d_mu = s[0] + s[1];
      const double d_tau = delta * s[1] + s[2] + sigma * s[3];
      const double d_delta = tau * s[1];
      const double d_sigma = tau * s[3];
      const double d_p = s[4];
      s = {d_mu, d_tau, d_delta, d_sigma, d_p};
      break;
    }
  }
}

}  // namespace

std::vector<double> score(const MixtureModel& m, const UnknownConfig& config, double x,
                          double density_floor) {
  config.check_compatible(m);
  std::vector<double> f, s;
  double raw_g = 0.0;
  score_core(m, config.kind, x, density_floor, f, raw_g, s);
  return s;
}

double fisher_element(const MixtureModel& m, const UnknownConfig& config, std::size_t a,
                      std::size_t b, const IntegrationSpec& spec) {
  config.check_compatible(m);
  spec.validate();
  const std::size_t d = config.dim(m.k());
  if (a >= d || b >= d) throw std::out_of_range("fisher element index out of range");

  const IntegrationMethod method = resolve_method(m, spec);
  if (method == IntegrationMethod::MonteCarlo) return mc_fisher_element(m, config, a, b, spec);

  const auto [lo, hi] = integration_interval(m, spec.coverage);
  auto integrand = [&](double x) {
    const double g = m.density(x);
    if (g < spec.density_floor) return 0.0;
    const std::vector<double> s = score(m, config, x, spec.density_floor);
    return s[a] * s[b] * g;
  };
  if (method == IntegrationMethod::Riemann)
    return riemann_midpoint(integrand, lo, hi, spec.points);
  return adaptive_gauss_kronrod(integrand, lo, hi, spec.rel_tol, spec.max_subdivisions);
}

namespace {

// All upper-triangle Riemann elements in one sweep over the shared grid.
// Per-element partial sums are kept in fixed chunks combined in chunk order,
// so the result is identical for any worker count (and matches fisher_element
// up to the usual summation rounding).
std::vector<double> riemann_fisher_upper(
    const MixtureModel& m, const UnknownConfig& config,
    const std::vector<std::pair<std::size_t, std::size_t>>& elements,
    const IntegrationSpec& spec, Execution exec) {
  const auto [lo, hi] = integration_interval(m, spec.coverage);
  const double h = (hi - lo) / spec.points;
  const int n_chunks = std::min(64, spec.points);
  std::vector<std::vector<double>> partial(n_chunks,
                                           std::vector<double>(elements.size(), 0.0));

  auto eval_chunk = [&](int c) {
    const int begin = static_cast<int>(static_cast<long>(spec.points) * c / n_chunks);
    const int end = static_cast<int>(static_cast<long>(spec.points) * (c + 1) / n_chunks);
    std::vector<double>& acc = partial[c];
    std::vector<double> f, s;
    double g = 0.0;
    for (int i = begin; i < end; ++i) {
      const double x = lo + (i + 0.5) * h;
      score_core(m, config.kind, x, spec.density_floor, f, g, s);
      if (g < spec.density_floor) continue;
      for (std::size_t e = 0; e < elements.size(); ++e)
        acc[e] += s[elements[e].first] * s[elements[e].second] * g;
    }
  };

  if (exec == Execution::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int c = 0; c < n_chunks; ++c) eval_chunk(c);
  } else {
    for (int c = 0; c < n_chunks; ++c) eval_chunk(c);
  }

  std::vector<double> values(elements.size(), 0.0);
  for (int c = 0; c < n_chunks; ++c)
    for (std::size_t e = 0; e < elements.size(); ++e) values[e] += partial[c][e];
  for (double& v : values) v *= h;
  return values;
}

}  // namespace

FisherMatrix fisher_matrix(const MixtureModel& m, const UnknownConfig& config,
                           const IntegrationSpec& spec, Execution exec) {
  config.check_compatible(m);
  spec.validate();
  const std::size_t d = config.dim(m.k());

  IntegrationSpec resolved = spec;
  resolved.method = resolve_method(m, spec);

  std::vector<std::pair<std::size_t, std::size_t>> elements;
  elements.reserve(d * (d + 1) / 2);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) elements.emplace_back(a, b);

  std::vector<double> values(elements.size());
  std::vector<char> failed(elements.size(), 0);

  if (resolved.method == IntegrationMethod::Riemann) {
    values = riemann_fisher_upper(m, config, elements, resolved, exec);
  } else {
    auto eval = [&](std::size_t i) {
      const auto [a, b] = elements[i];
      double v;
      try {
        v = fisher_element(m, config, a, b, resolved);
      } catch (const QuadratureFailure&) {
        IntegrationSpec fallback = resolved;
        fallback.method = IntegrationMethod::MonteCarlo;
        v = fisher_element(m, config, a, b, fallback);
      }
      if (!std::isfinite(v)) failed[i] = 1;
      values[i] = v;
    };

    if (exec == Execution::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
      for (long i = 0; i < static_cast<long>(elements.size()); ++i)
        eval(static_cast<std::size_t>(i));
    } else {
      for (std::size_t i = 0; i < elements.size(); ++i) eval(i);
    }
  }

  for (std::size_t i = 0; i < elements.size(); ++i)
    if (failed[i]) throw QuadratureFailure("fisher element non-finite after Monte Carlo fallback");

  FisherMatrix out;
  out.labels = config.labels(m.k());
  out.entries = Eigen::MatrixXd(d, d);
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto [a, b] = elements[i];
    out.entries(a, b) = values[i];
    out.entries(b, a) = values[i];
  }
  return out;
}

FisherMatrix transform_fisher(const FisherMatrix& F, const Eigen::MatrixXd& jacobian,
                              std::vector<std::string> labels) {
  const auto d = F.entries.rows();
  if (jacobian.rows() != d || jacobian.cols() != d)
    throw std::invalid_argument("jacobian dimension mismatch");
  FisherMatrix out;
  Eigen::MatrixXd t = jacobian.transpose() * F.entries * jacobian;
  out.entries = 0.5 * (t + t.transpose());  // keep exact symmetry
  if (labels.empty()) {
    for (Eigen::Index i = 0; i < d; ++i) labels.push_back("t" + std::to_string(i + 1));
  }
  if (static_cast<Eigen::Index>(labels.size()) != d)
    throw std::invalid_argument("label count mismatch");
  out.labels = std::move(labels);
  return out;
}

}  // namespace jeffmix
