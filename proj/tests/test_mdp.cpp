#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <queue>

#include "stablerepr/mdp.hpp"
#include "test_support.hpp"

using namespace stablerepr;
using namespace stablerepr::testing;

namespace {

Mdp two_state_cycle(double discount) {
  Mdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.discount = discount;
  mdp.transition = Matrix::from_rows({{0, 1}, {1, 0}});
  mdp.reward = Vector{1, 0};
  mdp.initial_dist = Vector{1, 0};
  return mdp;
}

}  // namespace

TEST_CASE("build_policy_matrix on degenerate and deterministic chains") {
  // 1 state, 1 action.
  Mdp tiny;
  tiny.n_states = 1;
  tiny.n_actions = 1;
  tiny.discount = 0.99;
  tiny.transition = Matrix(1, 1, 1.0);
  tiny.reward = Vector{1.0};
  tiny.initial_dist = Vector{1.0};
  const PolicyMatrix pm1 = build_policy_matrix(tiny, Matrix(1, 1, 1.0));
  CHECK(pm1.p_pi(0, 0) == doctest::Approx(1.0));

  // Deterministic two-state cycle with the only policy: a permutation on H.
  const Mdp cyc = two_state_cycle(0.5);
  const PolicyMatrix pm2 = build_policy_matrix(cyc, Matrix(2, 1, 1.0));
  CHECK(pm2.p_pi(0, 1) == doctest::Approx(1.0));
  CHECK(pm2.p_pi(1, 0) == doctest::Approx(1.0));
  CHECK(pm2.p_pi(0, 0) == doctest::Approx(0.0));

  CHECK_THROWS_AS(build_policy_matrix(cyc, Matrix(3, 1, 1.0)), std::invalid_argument);
}

TEST_CASE("row stochasticity of constructed policy matrices") {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const RandomInstance inst =
        random_instance(2 + rng.uniform_index(6), 1 + rng.uniform_index(3), 0.9, rng);
    for (std::size_t i = 0; i < inst.pm.p_pi.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < inst.pm.p_pi.cols(); ++j) s += inst.pm.p_pi(i, j);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("compute_value_function fixed cases") {
  Mdp tiny;
  tiny.n_states = 1;
  tiny.n_actions = 1;
  tiny.discount = 0.99;
  tiny.transition = Matrix(1, 1, 1.0);
  tiny.reward = Vector{1.0};
  tiny.initial_dist = Vector{1.0};
  const PolicyMatrix pm = build_policy_matrix(tiny, Matrix(1, 1, 1.0));
  const Vector q = compute_value_function(pm, tiny.reward, 0.99);
  CHECK(q[0] == doctest::Approx(100.0));

  // Cycle with r = (1, 0), gamma = 0.5; oracle: truncated geometric sum.
  const Mdp cyc = two_state_cycle(0.5);
  const PolicyMatrix pmc = build_policy_matrix(cyc, Matrix(2, 1, 1.0));
  const Vector qc = compute_value_function(pmc, cyc.reward, 0.5);
  double oracle0 = 0.0, oracle1 = 0.0;
  {
    double g = 1.0;
    for (int t = 0; t < 64; ++t) {
      oracle0 += g * ((t % 2 == 0) ? 1.0 : 0.0);
      oracle1 += g * ((t % 2 == 1) ? 1.0 : 0.0);
      g *= 0.5;
    }
  }
  CHECK(qc[0] == doctest::Approx(oracle0).epsilon(1e-12));
  CHECK(qc[1] == doctest::Approx(oracle1).epsilon(1e-12));
  CHECK(qc[0] == doctest::Approx(4.0 / 3.0));
  CHECK(qc[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("bellman residual below 1e-10 on random mdps") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t ns = 2 + rng.uniform_index(9);  // up to 10 states, n <= 20
    const RandomInstance inst = random_instance(ns, 1 + rng.uniform_index(2), 0.9, rng);
    const Vector q = compute_value_function(inst.pm, inst.mdp.reward, inst.gamma);
    // residual of (I - gamma P) q = r
    const Vector pq = inst.pm.p_pi * q;
    double resid = 0.0, rmin = 1e300, rmax = -1e300;
    for (std::size_t i = 0; i < q.size(); ++i) {
      resid = std::max(resid, std::abs(q[i] - inst.gamma * pq[i] - inst.mdp.reward[i]));
      rmin = std::min(rmin, inst.mdp.reward[i]);
      rmax = std::max(rmax, inst.mdp.reward[i]);
    }
    CHECK(resid <= 1e-10 * (1.0 + norm_inf(inst.mdp.reward)));
    for (double v : q) {
      CHECK(v >= rmin / (1 - inst.gamma) - 1e-9);
      CHECK(v <= rmax / (1 - inst.gamma) + 1e-9);
    }
  }
}

TEST_CASE("value iteration on fixed cases") {
  Mdp tiny;
  tiny.n_states = 1;
  tiny.n_actions = 1;
  tiny.discount = 0.99;
  tiny.transition = Matrix(1, 1, 1.0);
  tiny.reward = Vector{1.0};
  tiny.initial_dist = Vector{1.0};
  const OptimalValues v = value_iteration_optimal(tiny);
  CHECK(v.q_star[0] == doctest::Approx(100.0).epsilon(1e-8));

  // A rewarding absorbing action dominates everywhere it is reachable.
  Mdp m;
  m.n_states = 2;
  m.n_actions = 2;
  m.discount = 0.9;
  m.transition = Matrix(4, 2);
  // state 0: action 0 -> state 1; action 1 -> stay at 0.
  m.transition(0, 1) = 1.0;
  m.transition(1, 0) = 1.0;
  // state 1: action 0 -> stay (reward), action 1 -> back to 0.
  m.transition(2, 1) = 1.0;
  m.transition(3, 0) = 1.0;
  m.reward = Vector{0, 0, 1.0, 0};
  m.initial_dist = Vector{1, 0};
  const OptimalValues opt = value_iteration_optimal(m);
  CHECK(opt.greedy_action[1] == 0);  // take the absorbing reward
  CHECK(opt.greedy_action[0] == 0);  // move toward it
  // Bellman-optimality residual check.
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t a = 0; a < 2; ++a) {
      const std::size_t h = m.pair_index(s, a);
      double backup = m.reward[h];
      for (std::size_t s2 = 0; s2 < 2; ++s2) {
        double best = std::max(opt.q_star[m.pair_index(s2, 0)], opt.q_star[m.pair_index(s2, 1)]);
        backup += m.discount * m.transition(h, s2) * best;
      }
      CHECK(std::abs(backup - opt.q_star[h]) <= 1e-10);
    }
}

TEST_CASE("four-room greedy policy reaches the goal from every state") {
  const Mdp mdp = fourroom();
  const OptimalValues opt = value_iteration_optimal(mdp);
  // Goal state: the unique state whose incoming actions carry reward.
  std::size_t goal = mdp.n_states;
  for (std::size_t h = 0; h < mdp.num_pairs(); ++h)
    if (mdp.reward[h] == 1.0) {
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2)
        if (mdp.transition(h, s2) == 1.0) goal = s2;
    }
  REQUIRE(goal < mdp.n_states);

  // Oracle: BFS backwards over the greedy-policy-induced graph.
  std::vector<bool> reaches(mdp.n_states, false);
  reaches[goal] = true;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      if (reaches[s]) continue;
      const std::size_t h = mdp.pair_index(s, opt.greedy_action[s]);
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2)
        if (mdp.transition(h, s2) > 0 && reaches[s2]) {
          reaches[s] = true;
          changed = true;
        }
    }
  }
  for (std::size_t s = 0; s < mdp.n_states; ++s) CHECK(reaches[s]);
}

TEST_CASE("epsilon greedy masses") {
  const Vector q{1.0, 0.0, 0.0, 0.0};
  const Matrix det = epsilon_greedy(q, 0.0, 1, 4);
  CHECK(det(0, 0) == doctest::Approx(1.0));
  const Matrix unif = epsilon_greedy(q, 1.0, 1, 4);
  for (std::size_t a = 0; a < 4; ++a) CHECK(unif(0, a) == doctest::Approx(0.25));
  const Matrix eg = epsilon_greedy(q, 0.1, 1, 4);
  CHECK(eg(0, 0) == doctest::Approx(0.925));
  CHECK(eg(0, 1) == doctest::Approx(0.025));
  CHECK(eg(0, 2) == doctest::Approx(0.025));
  CHECK(eg(0, 3) == doctest::Approx(0.025));
  CHECK_THROWS_AS(epsilon_greedy(q, 0.1, 1, 0), std::invalid_argument);

  // Tied variant splits the greedy mass.
  const Vector qt{1.0, 1.0, 0.0, 0.0};
  const Matrix tied = epsilon_greedy_tied(qt, 0.1, 1, 4);
  CHECK(tied(0, 0) == doctest::Approx(0.475));
  CHECK(tied(0, 1) == doctest::Approx(0.475));
  CHECK(tied(0, 2) == doctest::Approx(0.025));
}

TEST_CASE("stationary distribution") {
  // Doubly stochastic chains are uniform.
  Mdp m;
  m.n_states = 3;
  m.n_actions = 1;
  m.discount = 0.9;
  m.transition = Matrix::from_rows({{0.2, 0.5, 0.3}, {0.5, 0.3, 0.2}, {0.3, 0.2, 0.5}});
  m.reward = Vector(3, 0.0);
  m.initial_dist = Vector{1, 0, 0};
  const PolicyMatrix pm = build_policy_matrix(m, Matrix(3, 1, 1.0));
  const Vector xi = stationary_distribution(pm);
  for (double v : xi) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-8));

  // Absorbing chain concentrates on the absorbing state.
  Mdp ab;
  ab.n_states = 2;
  ab.n_actions = 1;
  ab.discount = 0.9;
  ab.transition = Matrix::from_rows({{0, 1}, {0, 1}});
  ab.reward = Vector(2, 0.0);
  ab.initial_dist = Vector{1, 0};
  const Vector xa = stationary_distribution(build_policy_matrix(ab, Matrix(2, 1, 1.0)));
  CHECK(xa[0] == doctest::Approx(0.0));
  CHECK(xa[1] == doctest::Approx(1.0));

  // Periodic chain needs the damping fallback.
  const Mdp cyc = two_state_cycle(0.5);
  const Vector xc = stationary_distribution(build_policy_matrix(cyc, Matrix(2, 1, 1.0)));
  CHECK(xc[0] == doctest::Approx(0.5).epsilon(1e-8));

  // Random chain: fixed-point property against the repeated-squaring oracle.
  Rng rng(13);
  const RandomInstance inst = random_instance(5, 2, 0.9, rng);
  const Vector xs = stationary_distribution(inst.pm);
  const Vector fp = inst.pm.p_pi.left_multiply(xs);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(fp[i] == doctest::Approx(xs[i]).epsilon(1e-9));
  Matrix power = inst.pm.p_pi;
  for (int k = 0; k < 30; ++k) {  // P^(2^30), rows renormalized against drift
    power = power * power;
    for (std::size_t i = 0; i < power.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < power.cols(); ++j) s += power(i, j);
      for (std::size_t j = 0; j < power.cols(); ++j) power(i, j) /= s;
    }
  }
  for (std::size_t i = 0; i < xs.size(); ++i)
    CHECK(power(0, i) == doctest::Approx(xs[i]).epsilon(1e-8));
}

TEST_CASE("four-room stationary distribution has full support under the uniform policy") {
  const Mdp mdp = fourroom();
  const Matrix uniform(mdp.n_states, mdp.n_actions, 0.25);
  const PolicyMatrix pm = build_policy_matrix(mdp, uniform);
  const Vector xi = stationary_distribution(pm);
  for (double v : xi) CHECK(v > 0.0);
  double s = 0.0;
  for (double v : xi) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("trajectory sampling is reproducible and chained") {
  const Mdp mdp = fourroom();
  const Matrix uniform(mdp.n_states, mdp.n_actions, 0.25);
  const auto a = sample_trajectories(mdp, uniform, 50, 20, 42);
  const auto b = sample_trajectories(mdp, uniform, 50, 20, 42);
  REQUIRE(a.size() == 20);
  std::size_t steps = 0;
  for (std::size_t e = 0; e < a.size(); ++e) {
    REQUIRE(a[e].steps.size() == 50);
    steps += a[e].steps.size();
    for (std::size_t t = 0; t < 50; ++t) {
      CHECK(a[e].steps[t].state == b[e].steps[t].state);
      CHECK(a[e].steps[t].action == b[e].steps[t].action);
      if (t + 1 < 50) CHECK(a[e].steps[t].next_state == a[e].steps[t + 1].state);
    }
  }
  CHECK(steps == 1000);

  // Deterministic MDP + deterministic policy: the unique rollout.
  Mdp det;
  det.n_states = 3;
  det.n_actions = 1;
  det.discount = 0.9;
  det.transition = Matrix::from_rows({{0, 1, 0}, {0, 0, 1}, {0, 0, 1}});
  det.reward = Vector{0, 0, 1};
  det.initial_dist = Vector{1, 0, 0};
  const auto tr = sample_trajectories(det, Matrix(3, 1, 1.0), 3, 1, 7);
  CHECK(tr[0].steps[0].state == 0);
  CHECK(tr[0].steps[1].state == 1);
  CHECK(tr[0].steps[2].state == 2);
}

TEST_CASE("empirical model composition and priors") {
  Rng rng(17);
  const std::size_t ns = 4, na = 2;
  const RandomInstance inst = random_instance(ns, na, 0.9, rng);

  // Exact-count injection reproduces the true chain.
  const TransitionCounts exact = exact_counts(inst.mdp, inst.pm.xi);
  const EmpiricalModel em = empirical_model(exact, inst.pm.policy, ns, na);
  CHECK((em.p_hat - inst.pm.p_pi).frobenius_norm() <= 1e-12);

  // A never-visited pair becomes a self-loop composed with the policy.
  TransitionCounts counts;
  counts.counts = Matrix(ns * na, ns);
  counts.visits = Vector(ns * na, 0.0);
  counts.counts(0, 2) = 1.0;  // single observation (s=0, a=0) -> s'=2
  counts.visits[0] = 1.0;
  const EmpiricalModel single = empirical_model(counts, inst.pm.policy, ns, na);
  for (std::size_t a2 = 0; a2 < na; ++a2)
    CHECK(single.p_hat(0, 2 * na + a2) == doctest::Approx(inst.pm.policy(2, a2)));
  // Unvisited (s=1, a=0): row h=2 self-loops through the policy.
  for (std::size_t a2 = 0; a2 < na; ++a2)
    CHECK(single.p_hat(1 * na, 1 * na + a2) == doctest::Approx(inst.pm.policy(1, a2)));
  double rowsum = 0.0;
  for (std::size_t j = 0; j < ns * na; ++j) rowsum += single.p_hat(0, j);
  CHECK(rowsum == doctest::Approx(1.0));
}

TEST_CASE("empirical transition error shrinks with 10x sample growth") {
  const Mdp mdp = fourroom();
  const OptimalValues opt = value_iteration_optimal(mdp);
  const Matrix eval = epsilon_greedy_tied(opt.q_star, 0.1, mdp.n_states, mdp.n_actions);
  const PolicyMatrix pm = build_policy_matrix(mdp, eval);
  const Matrix uniform(mdp.n_states, mdp.n_actions, 0.25);

  Vector mean_err(3, 0.0);
  const std::size_t sizes[3] = {10, 100, 1000};  // episodes of length 50
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (int k = 0; k < 3; ++k) {
      const auto tr = sample_trajectories(mdp, uniform, 50, sizes[k], seed + 100);
      const TransitionCounts counts = count_transitions(tr, mdp.n_states, mdp.n_actions);
      const EmpiricalModel em = empirical_model(counts, eval, mdp.n_states, mdp.n_actions);
      mean_err[k] += (em.p_hat - pm.p_pi).frobenius_norm() / 5.0;
    }
  }
  CHECK(mean_err[0] > mean_err[1]);
  CHECK(mean_err[1] > mean_err[2]);
}

TEST_CASE("four-room construction") {
  const Mdp mdp = fourroom();
  CHECK(mdp.n_states == 104);
  CHECK(mdp.n_actions == 4);
  CHECK(mdp.num_pairs() == 416);
  CHECK(mdp.discount == doctest::Approx(0.99));
  mdp.validate();

  // Walls keep the agent in place: the start cell can always move somewhere,
  // but a corner cell bumps into two walls.
  const auto cells = fourroom_cells();
  REQUIRE(cells.size() == 104);
  std::size_t corner = cells.size();
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells[i].first == 1 && cells[i].second == 1) corner = i;
  REQUIRE(corner < cells.size());
  // Up (action 0) and left (action 2) are blocked at the top-left corner.
  CHECK(mdp.transition(mdp.pair_index(corner, 0), corner) == doctest::Approx(1.0));
  CHECK(mdp.transition(mdp.pair_index(corner, 2), corner) == doctest::Approx(1.0));

  // Reward: +1 exactly on pairs that move onto the goal cell.
  std::size_t goal = cells.size();
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells[i].first == 1 && cells[i].second == 11) goal = i;
  REQUIRE(goal < cells.size());
  std::size_t reward_pairs = 0;
  for (std::size_t h = 0; h < mdp.num_pairs(); ++h) {
    if (mdp.reward[h] == 1.0) {
      ++reward_pairs;
      CHECK(mdp.transition(h, goal) == doctest::Approx(1.0));
    } else {
      CHECK(mdp.reward[h] == 0.0);
      CHECK(mdp.transition(h, goal) == doctest::Approx(0.0));
    }
  }
  // Goal's own bumps (up/right) plus entries from the two neighbors.
  CHECK(reward_pairs == 4);
  CHECK(mdp.initial_dist[0] == 0.0);  // start is inside the bottom-left room
}

TEST_CASE("floor distribution") {
  const Vector floored = floor_distribution(Vector{0.0, 1.0}, 1e-8);
  CHECK(floored[0] == doctest::Approx(1e-8).epsilon(1e-6));
  CHECK(floored[0] > 0.0);
  double s = floored[0] + floored[1];
  CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("two-state counterexample shape") {
  const Mdp m = two_state_counterexample();
  m.validate();
  const PolicyMatrix pm = build_policy_matrix(m, Matrix(2, 1, 1.0));
  CHECK(pm.p_pi(0, 1) == doctest::Approx(1.0));
  CHECK(pm.p_pi(1, 1) == doctest::Approx(1.0));
}
