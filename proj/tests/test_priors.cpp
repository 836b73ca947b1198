#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "jeffmix/priors.hpp"

using namespace jeffmix;
using testutil::close_pair;

namespace {

IntegrationSpec riemann_spec() {
  IntegrationSpec spec;
  spec.method = IntegrationMethod::Riemann;
  return spec;
}

}  // namespace

TEST_CASE("prior kind names round trip") {
  for (auto k : {PriorKind::Jeffreys, PriorKind::Hierarchical, PriorKind::ConstantMeans,
                 PriorKind::JeffreysRmSigma})
    CHECK(parse_prior_kind(prior_kind_name(k)) == k);
  CHECK_THROWS_AS(parse_prior_kind("flat"), std::invalid_argument);
}

TEST_CASE("half logdet of a psd matrix") {
  CHECK(half_logdet_psd(Eigen::MatrixXd::Identity(3, 3)) == doctest::Approx(0.0));
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = 4.0;
  D(1, 1) = 9.0;
  CHECK(half_logdet_psd(D) == doctest::Approx(std::log(6.0)).epsilon(1e-14));

  Eigen::MatrixXd singular(2, 2);
  singular << 1.0, 1.0, 1.0, 1.0;
  CHECK(half_logdet_psd(singular) == NEG_INF);
  CHECK(half_logdet_psd(-Eigen::MatrixXd::Identity(2, 2)) == NEG_INF);
  CHECK(half_logdet_psd(Eigen::MatrixXd::Zero(2, 2)) == NEG_INF);
}

TEST_CASE("jeffreys log prior frozen value") {
  CHECK(jeffreys_log_prior(close_pair(), UnknownConfig{UnknownKind::All},
                           riemann_spec()) ==
        doctest::Approx(0.6953499226590247).epsilon(1e-11));
}

TEST_CASE("jeffreys log prior of a degenerate model is -inf") {
  // equal components make the weights direction uninformative
  MixtureModel m;
  m.components = {{Family::Gaussian, 0.0, 1.0, 1.0}, {Family::Gaussian, 0.0, 1.0, 1.0}};
  m.weights = {0.5, 0.5};
  CHECK(jeffreys_log_prior(m, UnknownConfig{UnknownKind::WeightsOnly}, riemann_spec()) ==
        NEG_INF);
}

TEST_CASE("conditional delta prior frozen values") {
  DeltaPriorFixed fixed;  // tau=1, sigma=1, p=1/2
  IntegrationSpec spec = riemann_spec();
  CHECK(conditional_delta_log_prior(0.0, fixed, spec) ==
        doctest::Approx(-0.23367791694928747).epsilon(1e-12));
  const double far30 = conditional_delta_log_prior(30.0, fixed, spec);
  const double far60 = conditional_delta_log_prior(60.0, fixed, spec);
  CHECK(far30 == doctest::Approx(0.11289567333068527).epsilon(1e-10));
  // plateau: the prior stops changing once the components separate
  CHECK(far30 == doctest::Approx(far60).epsilon(1e-12));

  DeltaPriorFixed other{0.0, 1.3, 0.8, 0.35};
  CHECK(conditional_delta_log_prior(2.0, other, spec) ==
        doctest::Approx(0.06128556937386872).epsilon(1e-12));
}

TEST_CASE("conditional delta prior is even and rejects bad fixed values") {
  DeltaPriorFixed fixed;
  IntegrationSpec spec = riemann_spec();
  CHECK(conditional_delta_log_prior(2.5, fixed, spec) ==
        doctest::Approx(conditional_delta_log_prior(-2.5, fixed, spec)).epsilon(1e-13));
  DeltaPriorFixed bad;
  bad.tau = 0.0;
  CHECK_THROWS_AS(conditional_delta_log_prior(0.0, bad, spec), std::domain_error);
  bad = DeltaPriorFixed{};
  bad.p = 1.0;
  CHECK_THROWS_AS(conditional_delta_log_prior(0.0, bad, spec), std::domain_error);
}

TEST_CASE("rm sigma prior") {
  CHECK(rm_sigma_log_prior(0.5) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(rm_sigma_log_prior(1.0) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(rm_sigma_log_prior(2.0) ==
        doctest::Approx(-2.0794415416798357).epsilon(1e-14));
  // continuous at the break
  CHECK(rm_sigma_log_prior(1.0 + 1e-12) ==
        doctest::Approx(rm_sigma_log_prior(1.0)).epsilon(1e-9));
  CHECK_THROWS_AS(rm_sigma_log_prior(0.0), std::domain_error);
  CHECK_THROWS_AS(rm_sigma_log_prior(-1.0), std::domain_error);

  // density integrates to one: 1/2 on (0,1] plus 1/2 * integral sigma^-2
  double acc = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double s = (i + 0.5) * (50.0 / n);
    acc += std::exp(rm_sigma_log_prior(s)) * (50.0 / n);
  }
  CHECK(acc == doctest::Approx(1.0 - 0.5 / 50.0).epsilon(1e-4));
}

TEST_CASE("combined rm-sigma jeffreys prior frozen value") {
  CHECK(jeffreys_rm_sigma_log_prior(close_pair(), riemann_spec()) ==
        doctest::Approx(0.03685187722363059).epsilon(1e-11));
  CHECK_THROWS_AS(jeffreys_rm_sigma_log_prior(testutil::spread_triple(), riemann_spec()),
                  IncompatibleConfig);
}

TEST_CASE("hierarchical log posterior frozen value") {
  HierarchicalParams params;
  params.means = {-1.0, 2.0};
  params.sds = {1.0, 0.5};
  params.weights = {0.5, 0.5};
  params.hyper_mean = 0.3;
  params.hyper_scale = 1.2;
  DataSet data;
  data.values = {0.0, 1.0, -0.5};
  CHECK(hierarchical_log_posterior(params, data) ==
        doctest::Approx(-12.539170544138644).epsilon(1e-12));
}

TEST_CASE("hierarchical log posterior support boundary") {
  HierarchicalParams params;
  params.means = {-1.0, 2.0};
  params.sds = {1.0, 0.5};
  params.weights = {0.5, 0.5};
  params.hyper_mean = 0.0;
  params.hyper_scale = 1.0;
  DataSet data;
  data.values = {0.0, 1.0};

  auto with = [&](auto&& patch) {
    HierarchicalParams q = params;
    patch(q);
    return hierarchical_log_posterior(q, data);
  };
  CHECK(std::isfinite(with([](HierarchicalParams&) {})));
  CHECK(with([](HierarchicalParams& q) { q.sds[0] = -1.0; }) == NEG_INF);
  CHECK(with([](HierarchicalParams& q) { q.sds[0] = 0.0; }) == NEG_INF);
  CHECK(with([](HierarchicalParams& q) { q.weights = {0.7, 0.2}; }) == NEG_INF);
  CHECK(with([](HierarchicalParams& q) { q.weights = {1.2, -0.2}; }) == NEG_INF);
  CHECK(with([](HierarchicalParams& q) { q.hyper_scale = 0.0; }) == NEG_INF);
  CHECK_THROWS_AS(with([](HierarchicalParams& q) { q.means.pop_back(); }),
                  std::invalid_argument);
  DataSet empty;
  CHECK_THROWS_AS(hierarchical_log_posterior(params, empty), std::invalid_argument);
}

TEST_CASE("hierarchical sd prior is continuous at the hyper scale") {
  HierarchicalParams params;
  params.means = {0.0, 0.0};
  params.sds = {1.0, 1.0};
  params.weights = {0.5, 0.5};
  params.hyper_mean = 0.0;
  params.hyper_scale = 2.0;
  DataSet data;
  data.values = {0.1};
  auto at_sd = [&](double s) {
    HierarchicalParams q = params;
    q.sds[1] = s;
    double v = hierarchical_log_posterior(q, data);
    // strip the likelihood so only the prior branch changes
    MixtureModel m;
    m.components = {{Family::Gaussian, 0.0, 1.0, 1.0}, {Family::Gaussian, 0.0, s, 1.0}};
    m.weights = {0.5, 0.5};
    return v - log_likelihood(m, data);
  };
  CHECK(at_sd(2.0 - 1e-9) == doctest::Approx(at_sd(2.0 + 1e-9)).epsilon(1e-6));
  // tail branch falls off like sigma^-2
  CHECK(at_sd(8.0) - at_sd(4.0) == doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("reparametrization matches the k=2 example") {
  ReparamParams rp;
  rp.mu = -1.0;
  rp.tau = 1.0;
  rp.offsets = {3.0};
  rp.scale_ratios = {0.5};
  rp.p = 0.5;
  const MixtureModel m = reparam_to_natural(rp);
  REQUIRE(m.k() == 2);
  CHECK(m.components[0].loc == doctest::Approx(-1.0));
  CHECK(m.components[1].loc == doctest::Approx(2.0));
  CHECK(m.components[0].scale == doctest::Approx(1.0));
  CHECK(m.components[1].scale == doctest::Approx(0.5));
  CHECK(m.weights[0] == doctest::Approx(0.5));
}

TEST_CASE("reparametrization round trips") {
  Rng rng(909);
  for (std::size_t k = 2; k <= 4; ++k) {
    for (int rep = 0; rep < 6; ++rep) {
      const MixtureModel m = testutil::random_gaussian(rng, k);
      const ReparamParams rp = natural_to_reparam(m);
      const MixtureModel back = reparam_to_natural(rp);
      REQUIRE(back.k() == k);
      for (std::size_t i = 0; i < k; ++i) {
        CHECK(back.components[i].loc ==
              doctest::Approx(m.components[i].loc).epsilon(1e-12));
        CHECK(back.components[i].scale ==
              doctest::Approx(m.components[i].scale).epsilon(1e-12));
        CHECK(back.weights[i] == doctest::Approx(m.weights[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("stick-breaking weights") {
  MixtureModel m = testutil::spread_triple();
  m.weights = {0.2, 0.3, 0.5};
  const ReparamParams rp = natural_to_reparam(m);
  CHECK(rp.p == doctest::Approx(0.2).epsilon(1e-14));
  REQUIRE(rp.sticks.size() == 1);
  CHECK(rp.sticks[0] == doctest::Approx(0.375).epsilon(1e-14));
  const MixtureModel back = reparam_to_natural(rp);
  CHECK(back.weights[2] == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("reparametrization rejects bad inputs") {
  ReparamParams rp;
  rp.offsets = {1.0};
  rp.scale_ratios = {1.0};
  rp.tau = -1.0;
  CHECK_THROWS_AS(reparam_to_natural(rp), std::domain_error);
  rp.tau = 1.0;
  rp.scale_ratios = {1.0, 2.0};
  CHECK_THROWS_AS(reparam_to_natural(rp), std::invalid_argument);

  MixtureModel single;
  single.components = {{Family::Gaussian, 0.0, 1.0, 1.0}};
  single.weights = {1.0};
  CHECK_THROWS_AS(natural_to_reparam(single), std::invalid_argument);
  MixtureModel t = close_pair();
  t.components[0].family = Family::StudentT;
  CHECK_THROWS_AS(natural_to_reparam(t), UnsupportedFamily);
}
