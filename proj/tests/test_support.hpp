#pragma once

#include <cmath>
#include <random>

#include "stablerepr/mdp.hpp"
#include "stablerepr/rng.hpp"
#include "stablerepr/weighted.hpp"

namespace stablerepr::testing {

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

inline Matrix random_stochastic(std::size_t n, Rng& rng) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      m(i, j) = rng.uniform() + 1e-3;
      s += m(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) m(i, j) /= s;
  }
  return m;
}

/// Full-support probability vector; larger `skew` concentrates mass.
inline Vector random_distribution(std::size_t n, Rng& rng, double skew = 1.0) {
  Vector v(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = std::pow(rng.uniform() + 1e-6, skew);
    s += v[i];
  }
  for (double& x : v) x /= s;
  return v;
}

inline Mdp random_mdp(std::size_t n_states, std::size_t n_actions, double discount, Rng& rng) {
  Mdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.discount = discount;
  mdp.transition = Matrix(n_states * n_actions, n_states);
  for (std::size_t h = 0; h < mdp.num_pairs(); ++h) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_states; ++j) {
      mdp.transition(h, j) = rng.uniform() + 1e-3;
      s += mdp.transition(h, j);
    }
    for (std::size_t j = 0; j < n_states; ++j) mdp.transition(h, j) /= s;
  }
  mdp.reward = Vector(mdp.num_pairs());
  for (double& r : mdp.reward) r = rng.normal();
  mdp.initial_dist = random_distribution(n_states, rng);
  return mdp;
}

inline Matrix random_policy(std::size_t n_states, std::size_t n_actions, Rng& rng) {
  Matrix p(n_states, n_actions);
  for (std::size_t s = 0; s < n_states; ++s) {
    double sum = 0.0;
    for (std::size_t a = 0; a < n_actions; ++a) {
      p(s, a) = rng.uniform() + 0.05;
      sum += p(s, a);
    }
    for (std::size_t a = 0; a < n_actions; ++a) p(s, a) /= sum;
  }
  return p;
}

/// Random chain on state-action pairs with a full-support data distribution.
struct RandomInstance {
  Mdp mdp;
  PolicyMatrix pm;
  WeightedSpace space;
  double gamma;
};

inline RandomInstance random_instance(std::size_t n_states, std::size_t n_actions, double gamma,
                                      Rng& rng, double xi_skew = 1.0) {
  Mdp mdp = random_mdp(n_states, n_actions, gamma, rng);
  PolicyMatrix pm = build_policy_matrix(mdp, random_policy(n_states, n_actions, rng));
  attach_xi(pm, random_distribution(mdp.num_pairs(), rng, xi_skew));
  WeightedSpace space(pm.xi);
  return RandomInstance{std::move(mdp), std::move(pm), std::move(space), gamma};
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace stablerepr::testing
