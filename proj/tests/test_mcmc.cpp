#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "jeffmix/mcmc.hpp"

using namespace jeffmix;

namespace {

// standard error from batch means over the post-burn-in half of a chain
struct BatchStats {
  double mean;
  double se;
};

BatchStats batch_stats(const Chain& chain, std::size_t coord,
                       double (*f)(double) = nullptr) {
  const std::size_t n_batches = 30;
  const std::size_t start = chain.burnin;
  const std::size_t len = (chain.states.size() - start) / n_batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < n_batches; ++b) {
    double acc = 0.0;
    for (std::size_t i = start + b * len; i < start + (b + 1) * len; ++i) {
      const double v = chain.states[i][coord];
      acc += f ? f(v) : v;
    }
    means.push_back(acc / static_cast<double>(len));
  }
  const double m =
      std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(n_batches);
  double var = 0.0;
  for (double v : means) var += (v - m) * (v - m);
  var /= static_cast<double>(n_batches - 1);
  return {m, std::sqrt(var / static_cast<double>(n_batches))};
}

BlockLayout one_block(BlockKind kind) { return {{{kind, {0}}}}; }

}  // namespace

TEST_CASE("scale adaptation direction") {
  CHECK(adapt_scale(2.0, 0.1, 0.2, 0.4) == doctest::Approx(1.8));
  CHECK(adapt_scale(2.0, 0.5, 0.2, 0.4) == doctest::Approx(2.2));
  CHECK(adapt_scale(2.0, 0.3, 0.2, 0.4) == doctest::Approx(2.0));
  CHECK(adapt_scale(2.0, 0.2, 0.2, 0.4) == doctest::Approx(2.0));  // band is inclusive

  auto out = adapt_scales({1.0, 1.0, 1.0}, {0.05, 0.99, 0.25}, 0.2, 0.4);
  CHECK(out[0] == doctest::Approx(0.9));
  CHECK(out[1] == doctest::Approx(1.1));
  CHECK(out[2] == doctest::Approx(1.0));
  CHECK_THROWS_AS(adapt_scales({1.0}, {0.5, 0.5}, 0.2, 0.4), std::invalid_argument);
}

TEST_CASE("config validation") {
  McmcConfig c;
  c.iterations = 100;
  c.burnin = 10;
  CHECK_NOTHROW(c.validate(2));
  auto bad = [&](auto&& patch) {
    McmcConfig q = c;
    patch(q);
    CHECK_THROWS_AS(q.validate(2), std::invalid_argument);
  };
  bad([](McmcConfig& q) { q.iterations = 0; });
  bad([](McmcConfig& q) { q.burnin = 100; });
  bad([](McmcConfig& q) { q.adapt_window = 0; });
  bad([](McmcConfig& q) { q.accept_lo = 0.0; });
  bad([](McmcConfig& q) { q.accept_lo = 0.5; q.accept_hi = 0.4; });
  bad([](McmcConfig& q) { q.initial_scales = {1.0}; });
  bad([](McmcConfig& q) { q.initial_scales = {1.0, 0.0}; });
}

TEST_CASE("chain shape and bitwise determinism") {
  auto target = [](const std::vector<double>& x) { return -0.5 * x[0] * x[0]; };
  McmcConfig c;
  c.iterations = 500;
  c.burnin = 200;
  c.adapt_window = 50;
  c.seed = 42;
  const Chain a = run_rwmh(target, {0.3}, one_block(BlockKind::Means), c);
  CHECK(a.states.size() == 500);
  CHECK(a.log_post.size() == 500);
  CHECK(a.accepted.size() == 500);
  CHECK(a.block_scales_history.size() == 10);  // one snapshot per full window
  CHECK(a.burnin == 200);

  const Chain b = run_rwmh(target, {0.3}, one_block(BlockKind::Means), c);
  CHECK(a.states == b.states);
  CHECK(a.log_post == b.log_post);
  CHECK(a.accepted == b.accepted);
  c.seed = 43;
  const Chain d = run_rwmh(target, {0.3}, one_block(BlockKind::Means), c);
  CHECK(a.states != d.states);
}

TEST_CASE("initialization and layout errors") {
  auto target = [](const std::vector<double>& x) {
    return x[0] > 0 ? 0.0 : NEG_INF;
  };
  McmcConfig c;
  c.iterations = 10;
  c.burnin = 1;
  CHECK_THROWS_AS(run_rwmh(target, {-1.0}, one_block(BlockKind::Means), c),
                  InitializationError);
  CHECK_THROWS_AS(run_rwmh(target, {1.0}, BlockLayout{}, c), std::invalid_argument);
  BlockLayout oob{{{BlockKind::Means, {3}}}};
  CHECK_THROWS_AS(run_rwmh(target, {1.0}, oob, c), std::invalid_argument);
}

TEST_CASE("only the cycled block moves") {
  auto target = [](const std::vector<double>& x) {
    if (x[1] <= 0.0 || x[2] <= 0.0 || x[2] >= 1.0) return NEG_INF;
    return -0.5 * (x[0] * x[0] + std::log(x[1]) * std::log(x[1]));
  };
  BlockLayout layout{{{BlockKind::Means, {0}},
                      {BlockKind::Scales, {1}},
                      {BlockKind::Weights, {2}}}};
  McmcConfig c;
  c.iterations = 300;
  c.burnin = 100;
  c.seed = 7;
  const Chain chain = run_rwmh(target, {0.0, 1.0, 0.5}, layout, c);
  std::vector<double> prev = {0.0, 1.0, 0.5};
  for (std::size_t it = 1; it <= chain.states.size(); ++it) {
    const std::size_t active = (it - 1) % 3;
    const std::vector<double>& cur = chain.states[it - 1];
    for (std::size_t cidx = 0; cidx < 3; ++cidx)
      if (cidx != active) CHECK(cur[cidx] == prev[cidx]);
    prev = cur;
  }
}

TEST_CASE("means block targets a standard normal") {
  auto target = [](const std::vector<double>& x) { return -0.5 * x[0] * x[0]; };
  McmcConfig c;
  c.iterations = 60000;
  c.burnin = 10000;
  c.seed = 11;
  const Chain chain = run_rwmh(target, {2.0}, one_block(BlockKind::Means), c);
  const auto m1 = batch_stats(chain, 0);
  CHECK(std::fabs(m1.mean) < 3 * m1.se + 0.01);
  const auto m2 = batch_stats(chain, 0, +[](double v) { return v * v; });
  CHECK(std::fabs(m2.mean - 1.0) < 3 * m2.se + 0.02);
}

TEST_CASE("weights block targets a uniform via the truncation correction") {
  // flat target on (0,1): any bias here means the Hastings ratio is wrong
  auto target = [](const std::vector<double>& x) {
    return (x[0] > 0.0 && x[0] < 1.0) ? 0.0 : NEG_INF;
  };
  McmcConfig c;
  c.iterations = 60000;
  c.burnin = 10000;
  c.seed = 19;
  c.initial_scales = {0.4};  // wide proposals press against both boundaries
  const Chain chain = run_rwmh(target, {0.9}, one_block(BlockKind::Weights), c);
  const auto m1 = batch_stats(chain, 0);
  CHECK(std::fabs(m1.mean - 0.5) < 3 * m1.se + 0.01);
  const auto m2 = batch_stats(chain, 0, +[](double v) { return v * v; });
  CHECK(std::fabs(m2.mean - 1.0 / 3.0) < 3 * m2.se + 0.01);
  const auto tail = batch_stats(chain, 0, +[](double v) { return v < 0.1 ? 1.0 : 0.0; });
  CHECK(std::fabs(tail.mean - 0.1) < 3 * tail.se + 0.01);
}

TEST_CASE("scales block targets a log-normal via the jacobian correction") {
  // log sigma ~ N(0,1): density 1/sigma * exp(-log(sigma)^2/2)
  auto target = [](const std::vector<double>& x) {
    if (x[0] <= 0.0) return NEG_INF;
    const double l = std::log(x[0]);
    return -0.5 * l * l - l;
  };
  McmcConfig c;
  c.iterations = 60000;
  c.burnin = 10000;
  c.seed = 23;
  const Chain chain = run_rwmh(target, {1.0}, one_block(BlockKind::Scales), c);
  const auto m1 = batch_stats(chain, 0, +[](double v) { return std::log(v); });
  CHECK(std::fabs(m1.mean) < 3 * m1.se + 0.02);
  const auto m2 = batch_stats(chain, 0, +[](double v) {
    return std::log(v) * std::log(v);
  });
  CHECK(std::fabs(m2.mean - 1.0) < 3 * m2.se + 0.04);
  for (const auto& st : chain.states) CHECK(st[0] > 0.0);
}

TEST_CASE("adaptation shrinks an oversized scale and freezes after burn-in") {
  auto target = [](const std::vector<double>& x) { return -0.5 * x[0] * x[0]; };
  McmcConfig c;
  c.iterations = 4000;
  c.burnin = 2000;
  c.adapt_window = 100;
  c.seed = 3;
  c.initial_scales = {100.0};
  const Chain chain = run_rwmh(target, {0.0}, one_block(BlockKind::Means), c);
  REQUIRE(chain.block_scales_history.size() == 40);
  const double end_of_burnin = chain.block_scales_history[19][0];
  CHECK(end_of_burnin < 100.0 * std::pow(0.9, 5));  // steady shrinking
  for (std::size_t w = 20; w < 40; ++w)
    CHECK(chain.block_scales_history[w][0] == end_of_burnin);
}

TEST_CASE("diagnose flags and statistics") {
  BlockLayout layout{{{BlockKind::Means, {0}}, {BlockKind::Scales, {1}}}};
  DataSet data;
  data.values = {0.0, 1.0, 2.0};
  auto loglik = [](const std::vector<double>& x) { return x[0] + x[1]; };

  Chain chain;
  chain.burnin = 2;
  chain.states = {{0.0, 1.0}, {0.0, 1.0}, {5.0, 0.01}, {5.0, 0.01}};
  chain.log_post = {0, 0, 0, 0};
  chain.accepted = {1, 0, 1, 0};
  const auto d = diagnose(chain, {0.0, 1.0}, data, layout, loglik);
  CHECK(d.accept_rate == doctest::Approx(0.5));
  CHECK(d.stuck_small_sigma);          // 0.01 < 0.05
  CHECK_FALSE(d.divergent_means);      // 5 is inside data range +- 10x spread
  CHECK(d.loglik_ratio == doctest::Approx(5.01 / 1.0));

  chain.states.back() = {100.0, 1.0};  // beyond 2 + 10*2
  const auto d2 = diagnose(chain, {0.0, 1.0}, data, layout, loglik);
  CHECK(d2.divergent_means);
  CHECK_FALSE(d2.stuck_small_sigma);

  DiagnoseThresholds tight;
  tight.mean_escape_factor = 1.0;
  chain.states.back() = {5.0, 1.0};    // beyond 2 + 1*2
  CHECK(diagnose(chain, {0.0, 1.0}, data, layout, loglik, tight).divergent_means);

  Chain empty;
  CHECK_THROWS_AS(diagnose(empty, {0.0}, data, layout, loglik), std::invalid_argument);
  DataSet nodata;
  CHECK_THROWS_AS(diagnose(chain, {0.0}, nodata, layout, loglik), std::invalid_argument);
}
