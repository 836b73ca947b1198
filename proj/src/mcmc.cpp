#include "jeffmix/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jeffmix {

void McmcConfig::validate(std::size_t n_blocks) const {
  if (iterations == 0) throw std::invalid_argument("iterations must be > 0");
  if (burnin >= iterations) throw std::invalid_argument("burnin must be < iterations");
  if (adapt_window == 0) throw std::invalid_argument("adapt_window must be > 0");
  if (!(accept_lo > 0.0 && accept_hi < 1.0 && accept_lo < accept_hi))
    throw std::invalid_argument("acceptance band must satisfy 0 < lo < hi < 1");
  if (!initial_scales.empty() && initial_scales.size() != n_blocks)
    throw std::invalid_argument("initial_scales must match the block count");
  for (double s : initial_scales)
    if (!(s > 0.0)) throw std::invalid_argument("proposal scales must be > 0");
}

double adapt_scale(double scale, double recent_accept_rate, double lo, double hi) {
  if (recent_accept_rate < lo) return scale * 0.9;
  if (recent_accept_rate > hi) return scale * 1.1;
  return scale;
}

std::vector<double> adapt_scales(std::vector<double> scales,
                                 const std::vector<double>& recent_accept_rates,
                                 double lo, double hi) {
  if (scales.size() != recent_accept_rates.size())
    throw std::invalid_argument("scales/rates length mismatch");
  for (std::size_t i = 0; i < scales.size(); ++i)
    scales[i] = adapt_scale(scales[i], recent_accept_rates[i], lo, hi);
  return scales;
}

Chain run_rwmh(const std::function<double(const std::vector<double>&)>& log_target,
               const std::vector<double>& init, const BlockLayout& layout,
               const McmcConfig& config) {
  const std::size_t n_blocks = layout.blocks.size();
  if (n_blocks == 0) throw std::invalid_argument("block layout is empty");
  config.validate(n_blocks);
  for (const Block& b : layout.blocks)
    for (std::size_t c : b.coords)
      if (c >= init.size()) throw std::invalid_argument("block coordinate out of range");

  double lp = log_target(init);
  if (!std::isfinite(lp))
    throw InitializationError("log_target(init) is not finite");

  std::vector<double> x = init;
  std::vector<double> scales =
      config.initial_scales.empty() ? std::vector<double>(n_blocks, 1.0)
                                    : config.initial_scales;
  Rng rng(mix64(config.seed));

  Chain chain;
  chain.burnin = config.burnin;
  chain.states.reserve(config.iterations);
  chain.log_post.reserve(config.iterations);
  chain.accepted.reserve(config.iterations);

  std::vector<std::size_t> window_proposals(n_blocks, 0);
  std::vector<std::size_t> window_accepts(n_blocks, 0);
  std::vector<double> y;

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    const std::size_t bi = (it - 1) % n_blocks;
    const Block& block = layout.blocks[bi];
    const double s = scales[bi];

    y = x;
    double log_hastings = 0.0;  // log q(x|y) - log q(y|x)
    bool rejected_early = false;

    switch (block.kind) {
      case BlockKind::Means:
        for (std::size_t c : block.coords) y[c] = x[c] + s * rng.normal();
        break;
      case BlockKind::Scales:
        // y = x * exp(s Z): log-normal centered on the current value; the
        // proposal-density ratio q(x|y)/q(y|x) is y/x per coordinate
        for (std::size_t c : block.coords) {
          y[c] = x[c] * std::exp(s * rng.normal());
          log_hastings += std::log(y[c]) - std::log(x[c]);
        }
        break;
      case BlockKind::Weights: {
        // per-coordinate truncated normal on (0,1) by inverse CDF; the
        // normal kernel cancels in the ratio, leaving truncation masses
        double sum = 0.0;
        for (std::size_t c : block.coords) {
          const double a = normal_cdf((0.0 - x[c]) / s);
          const double b = normal_cdf((1.0 - x[c]) / s);
          const double u = a + (b - a) * rng.uniform();
          y[c] = x[c] + s * normal_quantile(u);
          y[c] = std::clamp(y[c], std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
          const double ay = normal_cdf((0.0 - y[c]) / s);
          const double by = normal_cdf((1.0 - y[c]) / s);
          log_hastings += std::log(b - a) - std::log(by - ay);
          sum += y[c];
        }
        if (sum >= 1.0) rejected_early = true;  // free weights left the simplex
        break;
      }
    }

    bool accepted = false;
    ++window_proposals[bi];
    if (!rejected_early) {
      const double lpy = log_target(y);
      const double log_alpha = lpy - lp + log_hastings;
      if (std::log(rng.uniform()) < log_alpha) {
        x = y;
        lp = lpy;
        accepted = true;
        ++window_accepts[bi];
      }
    }

    chain.states.push_back(x);
    chain.log_post.push_back(lp);
    chain.accepted.push_back(accepted ? 1 : 0);

    if (it % config.adapt_window == 0) {
      if (it <= config.burnin) {
        for (std::size_t b = 0; b < n_blocks; ++b) {
          if (window_proposals[b] == 0) continue;
          const double rate = static_cast<double>(window_accepts[b]) /
                              static_cast<double>(window_proposals[b]);
          scales[b] = adapt_scale(scales[b], rate, config.accept_lo, config.accept_hi);
        }
      }
      std::fill(window_proposals.begin(), window_proposals.end(), 0);
      std::fill(window_accepts.begin(), window_accepts.end(), 0);
      chain.block_scales_history.push_back(scales);
    }
  }
  return chain;
}

ChainDiagnostics diagnose(const Chain& chain, const std::vector<double>& true_params,
                          const DataSet& data, const BlockLayout& layout,
                          const std::function<double(const std::vector<double>&)>& loglik,
                          const DiagnoseThresholds& thresholds) {
  if (chain.states.empty()) throw std::invalid_argument("empty chain");
  if (data.n() == 0) throw std::invalid_argument("empty data");

  ChainDiagnostics d;
  const std::vector<double>& final_state = chain.states.back();

  std::size_t post = 0, acc = 0;
  for (std::size_t it = chain.burnin; it < chain.accepted.size(); ++it) {
    ++post;
    acc += chain.accepted[it];
  }
  d.accept_rate = post == 0 ? 0.0 : static_cast<double>(acc) / static_cast<double>(post);

  const double lo = data.min();
  const double hi = data.max();
  const double escape = thresholds.mean_escape_factor * (hi - lo);
  for (const Block& b : layout.blocks) {
    for (std::size_t c : b.coords) {
      const double v = final_state[c];
      if (b.kind == BlockKind::Scales && v < thresholds.sigma_stuck)
        d.stuck_small_sigma = true;
      if (b.kind == BlockKind::Means && (v < lo - escape || v > hi + escape))
        d.divergent_means = true;
    }
  }
  d.loglik_ratio = loglik(final_state) / loglik(true_params);
  return d;
}

}  // namespace jeffmix
