#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jeffmix/common.hpp"
#include "jeffmix/mixture.hpp"

namespace jeffmix {

// Proposal kernel family per block: truncated normals on (0,1) for free
// weights, normals for locations, log-normals for scales.
enum class BlockKind { Weights, Means, Scales };

struct Block {
  BlockKind kind;
  std::vector<std::size_t> coords;  // indices into the state vector
};

struct BlockLayout {
  std::vector<Block> blocks;
};

struct McmcConfig {
  std::size_t iterations = 100000;
  std::size_t burnin = 10000;
  std::size_t adapt_window = 100;
  double accept_lo = 0.20;
  double accept_hi = 0.40;
  std::uint64_t seed = 0;
  std::vector<double> initial_scales;  // per block; empty = all 1.0

  void validate(std::size_t n_blocks) const;
};

struct Chain {
  std::vector<std::vector<double>> states;  // one entry per iteration
  std::vector<double> log_post;
  std::vector<char> accepted;
  // per-block proposal scales, snapshot at every adapt_window boundary
  std::vector<std::vector<double>> block_scales_history;
  std::size_t burnin = 0;
};

struct ChainDiagnostics {
  double accept_rate = 0.0;  // over post-burn-in iterations
  bool stuck_small_sigma = false;
  bool divergent_means = false;
  double loglik_ratio = 0.0;  // log L(final) / log L(true)
};

struct DiagnoseThresholds {
  double sigma_stuck = 0.05;
  double mean_escape_factor = 10.0;
};

// multiplicative tuning toward the acceptance band: 0.9x below, 1.1x above
double adapt_scale(double scale, double recent_accept_rate, double lo, double hi);
std::vector<double> adapt_scales(std::vector<double> scales,
                                 const std::vector<double>& recent_accept_rates,
                                 double lo, double hi);

// Adaptive random-walk Metropolis-Hastings, one block per iteration (cycled).
// Scales adapt during burn-in only. Throws InitializationError when
// log_target(init) is not finite. Bitwise reproducible under fixed seed.
Chain run_rwmh(const std::function<double(const std::vector<double>&)>& log_target,
               const std::vector<double>& init, const BlockLayout& layout,
               const McmcConfig& config);

// final-state improperness symptoms plus the log-likelihood ratio statistic
ChainDiagnostics diagnose(const Chain& chain, const std::vector<double>& true_params,
                          const DataSet& data, const BlockLayout& layout,
                          const std::function<double(const std::vector<double>&)>& loglik,
                          const DiagnoseThresholds& thresholds = {});

}  // namespace jeffmix
