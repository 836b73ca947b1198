#pragma once

#include <vector>

#include "jeffmix/fisher.hpp"
#include "jeffmix/mixture.hpp"

namespace testutil {

using namespace jeffmix;

// 0.5 N(-1,1) + 0.5 N(2,0.5), the workhorse two-component model
inline MixtureModel close_pair() {
  MixtureModel m;
  m.components = {{Family::Gaussian, -1.0, 1.0, 1.0}, {Family::Gaussian, 2.0, 0.5, 1.0}};
  m.weights = {0.5, 0.5};
  return m;
}

inline MixtureModel far_pair() {
  MixtureModel m = close_pair();
  m.components[0].loc = -50.0;
  m.components[1].loc = 50.0;
  m.components[1].scale = 1.0;
  return m;
}

// 0.25 N(-10,1) + 0.10 N(0,5) + 0.65 N(15,7)
inline MixtureModel spread_triple() {
  MixtureModel m;
  m.components = {{Family::Gaussian, -10.0, 1.0, 1.0},
                  {Family::Gaussian, 0.0, 5.0, 1.0},
                  {Family::Gaussian, 15.0, 7.0, 1.0}};
  m.weights = {0.25, 0.10, 0.65};
  return m;
}

// equal-weight N(-1,0.2), N(0,0.2), N(1,0.2)
inline MixtureModel tight_triple() {
  MixtureModel m;
  m.components = {{Family::Gaussian, -1.0, 0.2, 1.0},
                  {Family::Gaussian, 0.0, 0.2, 1.0},
                  {Family::Gaussian, 1.0, 0.2, 1.0}};
  m.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  return m;
}

inline std::vector<double> dirichlet_ones(Rng& rng, std::size_t k) {
  std::vector<double> w(k);
  double sum = 0.0;
  for (double& v : w) {
    v = rng.exponential();
    sum += v;
  }
  for (double& v : w) v /= sum;
  return w;
}

// bounded random Gaussian mixture; |mu| <= 6, scale in [0.3, 3]
inline MixtureModel random_gaussian(Rng& rng, std::size_t k) {
  MixtureModel m;
  for (std::size_t i = 0; i < k; ++i)
    m.components.push_back({Family::Gaussian, rng.uniform(-6.0, 6.0),
                            rng.uniform(0.3, 3.0), 1.0});
  m.weights = dirichlet_ones(rng, k);
  return m;
}

}  // namespace testutil
