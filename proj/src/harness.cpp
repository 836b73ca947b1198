#include "jeffmix/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace jeffmix {

namespace {

void check_prior_config(PriorKind prior, const UnknownConfig& config) {
  switch (prior) {
    case PriorKind::Jeffreys:
      break;
    case PriorKind::ConstantMeans:
      if (config.kind != UnknownKind::MeansOnly)
        throw IncompatibleConfig("constant-means prior requires the means-only configuration");
      break;
    case PriorKind::JeffreysRmSigma:
      if (config.kind != UnknownKind::AllReparam)
        throw IncompatibleConfig("jeffreys-rm-sigma requires the all-reparam configuration");
      break;
    case PriorKind::Hierarchical:
      if (config.kind != UnknownKind::All)
        throw IncompatibleConfig("hierarchical prior requires the all configuration");
      break;
  }
}

// state <-> model mapping for the free parameters of a configuration
struct StateCodec {
  UnknownKind kind;
  MixtureModel base;

  std::size_t k() const { return base.k(); }

  std::vector<std::size_t> mean_coords() const {
    std::vector<std::size_t> c;
    switch (kind) {
      case UnknownKind::MeansOnly:
      case UnknownKind::MeansAndWeights:
      case UnknownKind::All:
        for (std::size_t i = 0; i < k(); ++i) c.push_back(i);
        break;
      case UnknownKind::AllReparam:
        c = {0, 2};  // mu, delta
        break;
      default:
        break;
    }
    return c;
  }

  std::vector<std::size_t> scale_coords() const {
    std::vector<std::size_t> c;
    switch (kind) {
      case UnknownKind::ScalesOnly:
        for (std::size_t i = 0; i < k(); ++i) c.push_back(i);
        break;
      case UnknownKind::All:
        for (std::size_t i = 0; i < k(); ++i) c.push_back(k() + i);
        break;
      case UnknownKind::AllReparam:
        c = {1, 3};  // tau, sigma
        break;
      default:
        break;
    }
    return c;
  }

  std::vector<std::size_t> weight_coords() const {
    std::vector<std::size_t> c;
    const std::size_t base_at = [&]() -> std::size_t {
      switch (kind) {
        case UnknownKind::WeightsOnly: return 0;
        case UnknownKind::MeansAndWeights: return k();
        case UnknownKind::All: return 2 * k();
        case UnknownKind::AllReparam: return 4;
        default: return SIZE_MAX;
      }
    }();
    if (base_at == SIZE_MAX) return c;
    const std::size_t nfree = kind == UnknownKind::AllReparam ? 1 : k() - 1;
    for (std::size_t i = 0; i < nfree; ++i) c.push_back(base_at + i);
    return c;
  }

  std::vector<double> state_of_base() const {
    std::vector<double> s;
    switch (kind) {
      case UnknownKind::WeightsOnly:
        for (std::size_t i = 0; i + 1 < k(); ++i) s.push_back(base.weights[i]);
        break;
      case UnknownKind::MeansOnly:
        for (const Component& c : base.components) s.push_back(c.loc);
        break;
      case UnknownKind::ScalesOnly:
        for (const Component& c : base.components) s.push_back(c.scale);
        break;
      case UnknownKind::MeansAndWeights:
        for (const Component& c : base.components) s.push_back(c.loc);
        for (std::size_t i = 0; i + 1 < k(); ++i) s.push_back(base.weights[i]);
        break;
      case UnknownKind::All:
        for (const Component& c : base.components) s.push_back(c.loc);
        for (const Component& c : base.components) s.push_back(c.scale);
        for (std::size_t i = 0; i + 1 < k(); ++i) s.push_back(base.weights[i]);
        break;
      case UnknownKind::AllReparam: {
        const ReparamParams rp = natural_to_reparam(base);
        s = {rp.mu, rp.tau, rp.offsets[0], rp.scale_ratios[0], rp.p};
        break;
      }
    }
    return s;
  }

  bool supported(const std::vector<double>& state) const {
    for (std::size_t c : scale_coords())
      if (!(state[c] > 0.0)) return false;
    const std::vector<std::size_t> wc = weight_coords();
    double sum = 0.0;
    for (std::size_t c : wc) {
      if (!(state[c] > 0.0 && state[c] < 1.0)) return false;
      sum += state[c];
    }
    if (!wc.empty() && !(sum < 1.0)) return false;
    for (double v : state)
      if (!std::isfinite(v)) return false;
    return true;
  }

  MixtureModel to_model(const std::vector<double>& state) const {
    MixtureModel m = base;
    switch (kind) {
      case UnknownKind::WeightsOnly: {
        double rem = 1.0;
        for (std::size_t i = 0; i + 1 < k(); ++i) {
          m.weights[i] = state[i];
          rem -= state[i];
        }
        m.weights[k() - 1] = rem;
        break;
      }
      case UnknownKind::MeansOnly:
        for (std::size_t i = 0; i < k(); ++i) m.components[i].loc = state[i];
        break;
      case UnknownKind::ScalesOnly:
        for (std::size_t i = 0; i < k(); ++i) m.components[i].scale = state[i];
        break;
      case UnknownKind::MeansAndWeights: {
        for (std::size_t i = 0; i < k(); ++i) m.components[i].loc = state[i];
        double rem = 1.0;
        for (std::size_t i = 0; i + 1 < k(); ++i) {
          m.weights[i] = state[k() + i];
          rem -= state[k() + i];
        }
        m.weights[k() - 1] = rem;
        break;
      }
      case UnknownKind::All: {
        for (std::size_t i = 0; i < k(); ++i) m.components[i].loc = state[i];
        for (std::size_t i = 0; i < k(); ++i) m.components[i].scale = state[k() + i];
        double rem = 1.0;
        for (std::size_t i = 0; i + 1 < k(); ++i) {
          m.weights[i] = state[2 * k() + i];
          rem -= state[2 * k() + i];
        }
        m.weights[k() - 1] = rem;
        break;
      }
      case UnknownKind::AllReparam: {
        ReparamParams rp;
        rp.mu = state[0];
        rp.tau = state[1];
        rp.offsets = {state[2]};
        rp.scale_ratios = {state[3]};
        rp.p = state[4];
        m = reparam_to_natural(rp);
        break;
      }
    }
    return m;
  }
};

BlockLayout natural_layout(const StateCodec& codec) {
  BlockLayout layout;
  if (auto c = codec.mean_coords(); !c.empty())
    layout.blocks.push_back({BlockKind::Means, std::move(c)});
  if (auto c = codec.scale_coords(); !c.empty())
    layout.blocks.push_back({BlockKind::Scales, std::move(c)});
  if (auto c = codec.weight_coords(); !c.empty())
    layout.blocks.push_back({BlockKind::Weights, std::move(c)});
  return layout;
}

std::size_t block_count(PriorKind prior, const UnknownConfig& config, std::size_t k) {
  if (prior == PriorKind::Hierarchical) return 5;
  (void)k;
  switch (config.kind) {
    case UnknownKind::WeightsOnly:
    case UnknownKind::MeansOnly:
    case UnknownKind::ScalesOnly: return 1;
    case UnknownKind::MeansAndWeights: return 2;
    case UnknownKind::All:
    case UnknownKind::AllReparam: return 3;
  }
  throw std::logic_error("unreachable");
}

double prior_value_for(PriorKind prior, const MixtureModel& m, const UnknownConfig& config,
                       const IntegrationSpec& integration) {
  switch (prior) {
    case PriorKind::Jeffreys: return jeffreys_log_prior(m, config, integration);
    case PriorKind::ConstantMeans: return 0.0;
    case PriorKind::JeffreysRmSigma: return jeffreys_rm_sigma_log_prior(m, integration);
    case PriorKind::Hierarchical:
      throw IncompatibleConfig("the hierarchical prior is a posterior over hyperparameters; use run_experiment");
  }
  throw std::logic_error("unreachable");
}

// fixed chunking so sums are identical for any worker count
template <typename Eval>
void run_slots(std::size_t n, Execution exec, Eval&& eval) {
  if (exec == Execution::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long i = 0; i < static_cast<long>(n); ++i) eval(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) eval(i);
  }
}

}  // namespace

void ExperimentSpec::validate() const {
  truth.validate();
  config.check_compatible(truth);
  check_prior_config(prior, config);
  if (sample_sizes.empty()) throw std::invalid_argument("sample_sizes must be nonempty");
  for (std::size_t n : sample_sizes)
    if (n < 2) throw std::invalid_argument("sample sizes must be >= 2");
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  integration.validate();
  mcmc.validate(block_count(prior, config, truth.k()));
  if (!(init_loglik_slack > 0.0))
    throw std::invalid_argument("init_loglik_slack must be > 0");
  if (init_attempts < 1) throw std::invalid_argument("init_attempts must be >= 1");
}

Problem make_problem(const ExperimentSpec& spec, const DataSet& data) {
  check_prior_config(spec.prior, spec.config);
  spec.config.check_compatible(spec.truth);
  const std::size_t k = spec.truth.k();

  StateCodec codec{spec.config.kind, spec.truth};
  Problem problem;
  problem.labels = spec.config.labels(k);
  problem.layout = natural_layout(codec);
  problem.truth_state = codec.state_of_base();

  const IntegrationSpec integration = spec.integration;
  const PriorKind prior = spec.prior;
  const UnknownConfig config = spec.config;

  if (prior == PriorKind::Hierarchical) {
    // state = (means, sds, free weights, mu0, zeta0); the mixture block
    // reuses the natural all-unknown codec
    problem.labels.push_back("mu0");
    problem.labels.push_back("zeta0");
    const std::size_t mu0_at = 3 * k - 1;
    const std::size_t zeta0_at = 3 * k;
    problem.layout.blocks.push_back({BlockKind::Means, {mu0_at}});
    problem.layout.blocks.push_back({BlockKind::Scales, {zeta0_at}});
    problem.truth_state.push_back(data.mean());
    problem.truth_state.push_back(data.sd());

    auto mixture_codec = codec;
    auto slice = [mu0_at](const std::vector<double>& s) {
      return std::vector<double>(s.begin(), s.begin() + mu0_at);
    };
    problem.model_of_state = [mixture_codec, slice](const std::vector<double>& s) {
      return mixture_codec.to_model(slice(s));
    };
    problem.loglik = [mixture_codec, slice, data](const std::vector<double>& s) {
      return log_likelihood(mixture_codec.to_model(slice(s)), data);
    };
    problem.log_target = [mixture_codec, data, k, mu0_at,
                          zeta0_at](const std::vector<double>& s) {
      HierarchicalParams hp;
      hp.means.assign(s.begin(), s.begin() + k);
      hp.sds.assign(s.begin() + k, s.begin() + 2 * k);
      hp.weights.assign(s.begin() + 2 * k, s.begin() + 3 * k - 1);
      double rem = 1.0;
      for (double w : hp.weights) {
        if (!(w > 0.0 && w < 1.0)) return NEG_INF;
        rem -= w;
      }
      if (!(rem > 0.0)) return NEG_INF;
      hp.weights.push_back(rem);
      hp.hyper_mean = s[mu0_at];
      hp.hyper_scale = s[zeta0_at];
      return hierarchical_log_posterior(hp, data);
    };
    return problem;
  }

  problem.model_of_state = [codec](const std::vector<double>& s) {
    return codec.to_model(s);
  };
  problem.loglik = [codec, data](const std::vector<double>& s) {
    return log_likelihood(codec.to_model(s), data);
  };
  problem.log_target = [codec, data, prior, config,
                        integration](const std::vector<double>& s) {
    if (!codec.supported(s)) return NEG_INF;
    const MixtureModel m = codec.to_model(s);
    const double lp = prior_value_for(prior, m, config, integration);
    if (!std::isfinite(lp)) return NEG_INF;
    return lp + log_likelihood(m, data);
  };
  return problem;
}

bool draw_init(const ExperimentSpec& spec, const Problem& problem, const DataSet& data,
               std::uint64_t seed, std::vector<double>& init) {
  const std::size_t k = spec.truth.k();
  Rng rng(mix64(seed));
  const double lo = data.min();
  const double hi = data.max();
  const double s = data.sd();
  const double ll_floor = problem.loglik(problem.truth_state) - spec.init_loglik_slack;

  for (std::size_t attempt = 0; attempt < spec.init_attempts; ++attempt) {
    MixtureModel cand = spec.truth;
    for (std::size_t i = 0; i < k; ++i) cand.components[i].loc = rng.uniform(lo, hi);
    for (std::size_t i = 0; i < k; ++i)
      cand.components[i].scale = rng.uniform(0.1 * s, 2.0 * s);
    double wsum = 0.0;
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) {
      w[i] = rng.exponential();  // Dirichlet(1,...,1)
      wsum += w[i];
    }
    for (std::size_t i = 0; i < k; ++i) cand.weights[i] = w[i] / wsum;

    // only the free parameters of the configuration enter the state;
    // fixed ones stay at the truth
    std::vector<double> state;
    switch (spec.config.kind) {
      case UnknownKind::WeightsOnly:
        for (std::size_t i = 0; i + 1 < k; ++i) state.push_back(cand.weights[i]);
        break;
      case UnknownKind::MeansOnly:
        for (std::size_t i = 0; i < k; ++i) state.push_back(cand.components[i].loc);
        break;
      case UnknownKind::ScalesOnly:
        for (std::size_t i = 0; i < k; ++i) state.push_back(cand.components[i].scale);
        break;
      case UnknownKind::MeansAndWeights:
        for (std::size_t i = 0; i < k; ++i) state.push_back(cand.components[i].loc);
        for (std::size_t i = 0; i + 1 < k; ++i) state.push_back(cand.weights[i]);
        break;
      case UnknownKind::All:
        for (std::size_t i = 0; i < k; ++i) state.push_back(cand.components[i].loc);
        for (std::size_t i = 0; i < k; ++i) state.push_back(cand.components[i].scale);
        for (std::size_t i = 0; i + 1 < k; ++i) state.push_back(cand.weights[i]);
        break;
      case UnknownKind::AllReparam: {
        const ReparamParams rp = natural_to_reparam(cand);
        state = {rp.mu, rp.tau, rp.offsets[0], rp.scale_ratios[0], rp.p};
        break;
      }
    }
    if (spec.prior == PriorKind::Hierarchical) {
      state.push_back(data.mean());
      state.push_back(data.sd());
    }
    if (problem.loglik(state) < ll_floor) continue;
    if (!std::isfinite(problem.log_target(state))) continue;
    init = std::move(state);
    return true;
  }
  return false;
}

ReplicationReport run_experiment(const ExperimentSpec& spec, Execution exec) {
  spec.validate();
  const std::size_t reps = spec.replications;
  const std::size_t jobs = spec.sample_sizes.size() * reps;

  ReplicationReport report;
  report.records.resize(jobs);
  std::vector<std::string> errors(jobs);

  run_slots(jobs, exec, [&](std::size_t j) {
    try {
      const std::size_t size = spec.sample_sizes[j / reps];
      const std::size_t r = j % reps;
      ReplicationRecord rec;
      rec.sample_size = size;
      rec.replication = r;
      rec.data_seed = mix64(spec.master_seed, size, r);
      const DataSet data = sample(spec.truth, size, rec.data_seed);
      const Problem problem = make_problem(spec, data);

      std::vector<double> init;
      if (!draw_init(spec, problem, data, mix64(rec.data_seed, 0xA11CEULL), init)) {
        rec.init_failed = true;
        report.records[j] = std::move(rec);
        return;
      }
      McmcConfig cfg = spec.mcmc;
      cfg.seed = mix64(rec.data_seed, 0xC4A15ULL);
      const Chain chain = run_rwmh(problem.log_target, init, problem.layout, cfg);
      rec.diag = diagnose(chain, problem.truth_state, data, problem.layout,
                          problem.loglik, spec.thresholds);
      rec.final_state = chain.states.back();
      rec.posterior_mean.assign(rec.final_state.size(), 0.0);
      const std::size_t post = chain.states.size() - chain.burnin;
      for (std::size_t it = chain.burnin; it < chain.states.size(); ++it)
        for (std::size_t c = 0; c < rec.posterior_mean.size(); ++c)
          rec.posterior_mean[c] += chain.states[it][c];
      for (double& v : rec.posterior_mean) v /= static_cast<double>(post);
      report.records[j] = std::move(rec);
    } catch (const std::exception& e) {
      errors[j] = e.what();
    }
  });

  for (const std::string& e : errors)
    if (!e.empty()) throw std::runtime_error("replication failed: " + e);

  for (std::size_t si = 0; si < spec.sample_sizes.size(); ++si) {
    SizeRow row;
    row.sample_size = spec.sample_sizes[si];
    std::vector<double> ratios;
    for (std::size_t r = 0; r < reps; ++r) {
      const ReplicationRecord& rec = report.records[si * reps + r];
      if (rec.init_failed) {
        ++row.n_init_failures;
        continue;
      }
      ++row.n_chains;
      row.avg_accept_rate += rec.diag.accept_rate;
      row.prop_stuck_sigma += rec.diag.stuck_small_sigma ? 1.0 : 0.0;
      row.prop_divergent_means += rec.diag.divergent_means ? 1.0 : 0.0;
      row.mean_loglik_ratio += rec.diag.loglik_ratio;
      ratios.push_back(rec.diag.loglik_ratio);
    }
    if (row.n_chains > 0) {
      const double n = static_cast<double>(row.n_chains);
      row.avg_accept_rate /= n;
      row.prop_stuck_sigma /= n;
      row.prop_divergent_means /= n;
      row.mean_loglik_ratio /= n;
      std::sort(ratios.begin(), ratios.end());
      const std::size_t mid = ratios.size() / 2;
      row.median_loglik_ratio = ratios.size() % 2 == 1
                                    ? ratios[mid]
                                    : 0.5 * (ratios[mid - 1] + ratios[mid]);
    }
    report.rows.push_back(row);
  }
  return report;
}

void GridSpec::validate() const {
  if (axes.empty()) throw std::invalid_argument("grid needs at least one axis");
  for (const GridAxis& a : axes) {
    if (a.steps < 2) throw std::invalid_argument("grid axis steps must be >= 2");
    if (!(a.lo < a.hi)) throw std::invalid_argument("grid axis needs lo < hi");
  }
}

std::size_t GridResult::cells() const {
  std::size_t n = 1;
  for (const GridAxis& a : axes) n *= a.steps;
  return n;
}

namespace {

GridResult evaluate_grid(const MixtureModel& model_template, const UnknownConfig& config,
                         const GridSpec& grid, const IntegrationSpec& spec,
                         PriorKind prior, const DataSet* data, Execution exec) {
  grid.validate();
  spec.validate();
  config.check_compatible(model_template);
  if (prior == PriorKind::Hierarchical)
    throw IncompatibleConfig("grids over the hierarchical posterior are not defined; use run_experiment");
  check_prior_config(prior, config);

  const StateCodec codec{config.kind, model_template};
  const std::vector<std::string> labels = config.labels(model_template.k());
  auto coord_of = [&](const std::string& name) {
    const auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end())
      throw std::invalid_argument("'" + name + "' is not a free parameter of " +
                                  unknown_kind_name(config.kind));
    return static_cast<std::size_t>(it - labels.begin());
  };

  std::vector<double> base = codec.state_of_base();
  for (const auto& [name, value] : grid.fixed) base[coord_of(name)] = value;
  std::vector<std::size_t> axis_coord;
  for (const GridAxis& a : grid.axes) axis_coord.push_back(coord_of(a.name));

  GridResult out;
  out.axes = grid.axes;
  out.scale = grid.scale;
  std::size_t cells = 1;
  for (const GridAxis& a : grid.axes) cells *= a.steps;
  out.values.resize(cells);

  auto eval_cell = [&](std::size_t cell) {
    std::vector<double> state = base;
    std::size_t rem = cell;
    for (std::size_t a = grid.axes.size(); a-- > 0;) {
      const GridAxis& ax = grid.axes[a];
      const std::size_t idx = rem % ax.steps;
      rem /= ax.steps;
      state[axis_coord[a]] =
          ax.lo + (ax.hi - ax.lo) * static_cast<double>(idx) /
                      static_cast<double>(ax.steps - 1);
    }
    double v;
    if (!codec.supported(state)) {
      v = NEG_INF;
    } else {
      const MixtureModel m = codec.to_model(state);
      v = prior_value_for(prior, m, config, spec);
      if (data != nullptr && std::isfinite(v)) v += log_likelihood(m, *data);
    }
    out.values[cell] = grid.scale == GridScale::Natural ? std::exp(v) : v;
  };
  run_slots(cells, exec, eval_cell);
  return out;
}

}  // namespace

GridResult prior_grid(const MixtureModel& model_template, const UnknownConfig& config,
                      const GridSpec& grid, const IntegrationSpec& spec,
                      PriorKind prior, Execution exec) {
  return evaluate_grid(model_template, config, grid, spec, prior, nullptr, exec);
}

GridResult posterior_grid(const MixtureModel& model_template, const UnknownConfig& config,
                          const DataSet& data, const GridSpec& grid,
                          const IntegrationSpec& spec, PriorKind prior, Execution exec) {
  return evaluate_grid(model_template, config, grid, spec, prior, &data, exec);
}

double probe_mass_reference(
    const std::function<double(const std::vector<double>&)>& log_density,
    const ProbeBox& box, std::size_t points_per_dim) {
  const std::size_t d = box.bounds.size();
  std::vector<double> h(d);
  double volume = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    h[i] = (box.bounds[i].second - box.bounds[i].first) / points_per_dim;
    volume *= h[i];
  }
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  double sum = 0.0;
  while (true) {
    for (std::size_t i = 0; i < d; ++i)
      x[i] = box.bounds[i].first + (idx[i] + 0.5) * h[i];
    const double lv = log_density(x);
    if (std::isfinite(lv)) sum += std::exp(lv);
    std::size_t i = d;
    while (i-- > 0) {
      if (++idx[i] < points_per_dim) break;
      idx[i] = 0;
      if (i == 0) return sum * volume;
    }
  }
}

ProbeResult properness_probe(
    const std::function<double(const std::vector<double>&)>& log_density,
    const std::vector<ProbeBox>& boxes, std::size_t points_per_dim,
    double plateau_rel_tol, Execution exec) {
  if (boxes.empty()) throw std::invalid_argument("probe needs at least one box");
  const std::size_t d = boxes[0].bounds.size();
  if (d < 1 || d > 3)
    throw std::invalid_argument("tensorized probe supports 1 to 3 dimensions");
  if (points_per_dim < 2) throw std::invalid_argument("points_per_dim must be >= 2");
  for (const ProbeBox& b : boxes) {
    if (b.bounds.size() != d) throw std::invalid_argument("probe boxes must share a dimension");
    for (const auto& [lo, hi] : b.bounds)
      if (!(lo < hi)) throw std::invalid_argument("probe box needs lo < hi");
  }
  for (std::size_t i = 1; i < boxes.size(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (boxes[i].bounds[j].first > boxes[i - 1].bounds[j].first ||
          boxes[i].bounds[j].second < boxes[i - 1].bounds[j].second)
        throw std::invalid_argument("probe boxes must be nested increasing");

  ProbeResult result;
  result.plateau_rel_tol = plateau_rel_tol;
  for (const ProbeBox& box : boxes) {
    std::size_t cells = 1;
    std::vector<double> h(d);
    double volume = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      cells *= points_per_dim;
      h[i] = (box.bounds[i].second - box.bounds[i].first) / points_per_dim;
      volume *= h[i];
    }
    const std::size_t n_chunks = std::min<std::size_t>(64, cells);
    std::vector<double> partial(n_chunks, 0.0);
    run_slots(n_chunks, exec, [&](std::size_t c) {
      const std::size_t begin = cells * c / n_chunks;
      const std::size_t end = cells * (c + 1) / n_chunks;
      std::vector<double> x(d);
      double acc = 0.0;
      for (std::size_t cell = begin; cell < end; ++cell) {
        std::size_t rem = cell;
        for (std::size_t i = d; i-- > 0;) {
          x[i] = box.bounds[i].first + (rem % points_per_dim + 0.5) * h[i];
          rem /= points_per_dim;
        }
        const double lv = log_density(x);
        if (std::isfinite(lv)) acc += std::exp(lv);
      }
      partial[c] = acc;
    });
    double sum = 0.0;
    for (double p : partial) sum += p;
    result.masses.push_back(sum * volume);
  }
  if (result.masses.size() >= 2) {
    const double last = result.masses.back();
    const double prev = result.masses[result.masses.size() - 2];
    result.plateau = std::abs(last - prev) <= plateau_rel_tol * std::abs(last);
  }
  return result;
}

IntegratorComparison compare_integrators(
    const MixtureModel& m, const UnknownConfig& config,
    const std::vector<std::pair<std::size_t, std::size_t>>& elements,
    const std::vector<std::size_t>& mc_draw_grid, std::size_t repeats,
    const IntegrationSpec& base, Execution exec) {
  config.check_compatible(m);
  base.validate();
  if (repeats < 2) throw std::invalid_argument("repeats must be >= 2");

  IntegratorComparison out;
  out.rows.resize(elements.size());
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const auto [a, b] = elements[e];
    IntegratorComparison::ElementRow& row = out.rows[e];
    row.a = a;
    row.b = b;
    IntegrationSpec riemann = base;
    riemann.method = IntegrationMethod::Riemann;
    row.riemann = fisher_element(m, config, a, b, riemann);
    IntegrationSpec adaptive = base;
    adaptive.method = IntegrationMethod::AdaptiveQuadrature;
    try {
      row.adaptive = fisher_element(m, config, a, b, adaptive);
    } catch (const QuadratureFailure&) {
      row.adaptive = std::numeric_limits<double>::quiet_NaN();
    }
    row.mc.resize(mc_draw_grid.size());
  }

  // flatten (element, draw count, repeat) into independent slots
  const std::size_t mc_jobs = elements.size() * mc_draw_grid.size() * repeats;
  std::vector<double> mc_values(mc_jobs);
  run_slots(mc_jobs, exec, [&](std::size_t j) {
    const std::size_t e = j / (mc_draw_grid.size() * repeats);
    const std::size_t rest = j % (mc_draw_grid.size() * repeats);
    const std::size_t di = rest / repeats;
    const std::size_t rep = rest % repeats;
    IntegrationSpec mc = base;
    mc.method = IntegrationMethod::MonteCarlo;
    mc.draws = static_cast<int>(mc_draw_grid[di]);
    mc.seed = mix64(base.seed, mc_draw_grid[di], rep);
    mc_values[j] = fisher_element(m, config, elements[e].first, elements[e].second, mc);
  });

  for (std::size_t e = 0; e < elements.size(); ++e) {
    for (std::size_t di = 0; di < mc_draw_grid.size(); ++di) {
      IntegratorComparison::McSummary& s = out.rows[e].mc[di];
      s.draws = mc_draw_grid[di];
      double sum = 0.0;
      for (std::size_t rep = 0; rep < repeats; ++rep)
        sum += mc_values[(e * mc_draw_grid.size() + di) * repeats + rep];
      s.mean = sum / static_cast<double>(repeats);
      double ss = 0.0;
      for (std::size_t rep = 0; rep < repeats; ++rep) {
        const double v = mc_values[(e * mc_draw_grid.size() + di) * repeats + rep];
        ss += (v - s.mean) * (v - s.mean);
      }
      s.sd = std::sqrt(ss / static_cast<double>(repeats - 1));
    }
  }
  return out;
}

}  // namespace jeffmix
