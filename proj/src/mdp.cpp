#include "stablerepr/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace stablerepr {

namespace {

void check_distribution_rows(const Matrix& m, const char* what, double tol = 1e-12) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m(i, j) < -tol)
        throw std::invalid_argument(std::string(what) + ": negative entry in row " +
                                    std::to_string(i));
      s += m(i, j);
    }
    if (std::abs(s - 1.0) > tol)
      throw std::invalid_argument(std::string(what) + ": row " + std::to_string(i) +
                                  " sums to " + std::to_string(s));
  }
}

}  // namespace

void Mdp::validate() const {
  if (n_states == 0 || n_actions == 0) throw std::invalid_argument("Mdp: empty state/action set");
  if (transition.rows() != num_pairs() || transition.cols() != n_states)
    throw std::invalid_argument("Mdp: transition tensor shape mismatch");
  if (reward.size() != num_pairs()) throw std::invalid_argument("Mdp: reward length mismatch");
  if (initial_dist.size() != n_states)
    throw std::invalid_argument("Mdp: initial distribution length mismatch");
  check_distribution_rows(transition, "Mdp transition");
  double s = 0.0;
  for (double p : initial_dist) {
    if (p < -1e-12) throw std::invalid_argument("Mdp: negative initial probability");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("Mdp: initial_dist must sum to 1");
  if (!(discount >= 0.0 && discount < 1.0))
    throw std::invalid_argument("Mdp: discount must lie in [0,1)");
}

void PolicyMatrix::validate() const {
  check_distribution_rows(p_pi, "PolicyMatrix p_pi");
  double s = 0.0;
  for (double x : xi) {
    if (!(x > 0.0)) throw std::invalid_argument("PolicyMatrix: xi must be strictly positive");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-10) throw std::invalid_argument("PolicyMatrix: xi must sum to 1");
}

Vector floor_distribution(const Vector& v, double floor) {
  Vector out(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::max(v[i], floor);
    s += out[i];
  }
  for (double& x : out) x /= s;
  return out;
}

PolicyMatrix build_policy_matrix(const Mdp& mdp, const Matrix& policy) {
  if (policy.rows() != mdp.n_states || policy.cols() != mdp.n_actions)
    throw std::invalid_argument("build_policy_matrix: policy shape mismatch");
  check_distribution_rows(policy, "policy");
  const std::size_t n = mdp.num_pairs();
  Matrix p(n, n);
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      const std::size_t h = mdp.pair_index(s, a);
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
        const double ps2 = mdp.transition(h, s2);
        if (ps2 == 0.0) continue;
        for (std::size_t a2 = 0; a2 < mdp.n_actions; ++a2)
          p(h, mdp.pair_index(s2, a2)) = ps2 * policy(s2, a2);
      }
    }
  PolicyMatrix pm;
  pm.p_pi = std::move(p);
  pm.policy = policy;
  pm.xi = Vector(n, 1.0 / static_cast<double>(n));
  return pm;
}

void attach_xi(PolicyMatrix& pm, const Vector& xi, double floor) {
  if (xi.size() != pm.p_pi.rows()) throw std::invalid_argument("attach_xi: length mismatch");
  pm.xi = floor_distribution(xi, floor);
}

Vector compute_value_function(const PolicyMatrix& pm, const Vector& reward, double discount) {
  if (!(discount < 1.0)) throw std::invalid_argument("compute_value_function: discount must be < 1");
  const std::size_t n = pm.p_pi.rows();
  if (reward.size() != n) throw std::invalid_argument("compute_value_function: reward length");
  Matrix a = Matrix::identity(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) -= discount * pm.p_pi(i, j);
  LuFactorization lu(a);
  if (lu.nearly_singular())
    throw NumericalError("compute_value_function: solve failed, condition estimate " +
                         std::to_string(lu.condition_estimate()));
  Vector q = lu.solve(reward);
  const Vector resid = subtract(a * q, reward);
  if (norm_inf(resid) > 1e-10 * (1.0 + norm_inf(reward)))
    throw NumericalError("compute_value_function: Bellman residual too large");
  return q;
}

OptimalValues value_iteration_optimal(const Mdp& mdp, double tolerance) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("value_iteration: tolerance must be > 0");
  const std::size_t n = mdp.num_pairs();
  Vector q(n, 0.0), qn(n, 0.0);
  Vector vmax(mdp.n_states, 0.0);
  const double gamma = mdp.discount;
  // ‖Q_{k+1} − T Q_{k+1}‖ ≤ γ‖Q_{k+1} − Q_k‖, so stopping at tol/2 on the
  // step difference guarantees the Bellman-optimality residual.
  while (true) {
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      double m = q[mdp.pair_index(s, 0)];
      for (std::size_t a = 1; a < mdp.n_actions; ++a)
        m = std::max(m, q[mdp.pair_index(s, a)]);
      vmax[s] = m;
    }
    double diff = 0.0;
    for (std::size_t h = 0; h < n; ++h) {
      double backup = mdp.reward[h];
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
        const double p = mdp.transition(h, s2);
        if (p != 0.0) backup += gamma * p * vmax[s2];
      }
      diff = std::max(diff, std::abs(backup - q[h]));
      qn[h] = backup;
    }
    std::swap(q, qn);
    if (diff <= tolerance / 2.0) break;
  }
  OptimalValues out;
  out.q_star = q;
  out.greedy_action.resize(mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < mdp.n_actions; ++a)
      if (q[mdp.pair_index(s, a)] > q[mdp.pair_index(s, best)]) best = a;
    out.greedy_action[s] = best;
  }
  return out;
}

Matrix epsilon_greedy(const Vector& q, double epsilon, std::size_t n_states,
                      std::size_t n_actions) {
  if (n_actions == 0) throw std::invalid_argument("epsilon_greedy: empty action set");
  if (q.size() != n_states * n_actions)
    throw std::invalid_argument("epsilon_greedy: q length mismatch");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("epsilon_greedy: epsilon outside [0,1]");
  Matrix policy(n_states, n_actions, epsilon / static_cast<double>(n_actions));
  for (std::size_t s = 0; s < n_states; ++s) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < n_actions; ++a)
      if (q[s * n_actions + a] > q[s * n_actions + best]) best = a;
    policy(s, best) += 1.0 - epsilon;
  }
  return policy;
}

Matrix epsilon_greedy_tied(const Vector& q, double epsilon, std::size_t n_states,
                           std::size_t n_actions) {
  if (n_actions == 0) throw std::invalid_argument("epsilon_greedy_tied: empty action set");
  if (q.size() != n_states * n_actions)
    throw std::invalid_argument("epsilon_greedy_tied: q length mismatch");
  Matrix policy(n_states, n_actions, epsilon / static_cast<double>(n_actions));
  for (std::size_t s = 0; s < n_states; ++s) {
    double best = q[s * n_actions];
    for (std::size_t a = 1; a < n_actions; ++a) best = std::max(best, q[s * n_actions + a]);
    const double tol = 1e-9 * (1.0 + std::abs(best));
    std::size_t ties = 0;
    for (std::size_t a = 0; a < n_actions; ++a)
      if (q[s * n_actions + a] >= best - tol) ++ties;
    for (std::size_t a = 0; a < n_actions; ++a)
      if (q[s * n_actions + a] >= best - tol)
        policy(s, a) += (1.0 - epsilon) / static_cast<double>(ties);
  }
  return policy;
}

Vector stationary_distribution(const PolicyMatrix& pm, std::size_t max_iters) {
  const std::size_t n = pm.p_pi.rows();
  auto iterate = [&](const Matrix& p) -> std::optional<Vector> {
    Vector x(n, 1.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < max_iters; ++k) {
      Vector nx = p.left_multiply(x);
      double s = 0.0;
      for (double v : nx) s += v;
      for (double& v : nx) v /= s;
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) diff += std::abs(nx[i] - x[i]);
      x = std::move(nx);
      if (diff < 1e-13) return x;
    }
    return std::nullopt;
  };

  auto res = iterate(pm.p_pi);
  if (!res) {
    // Periodic chain: damp with the identity, which leaves the stationary
    // vector unchanged.
    Matrix damped = pm.p_pi;
    damped *= 0.999;
    for (std::size_t i = 0; i < n; ++i) damped(i, i) += 0.001;
    res = iterate(damped);
  }
  if (!res) throw NumericalError("stationary_distribution: power iteration did not converge");

  const Vector check = pm.p_pi.left_multiply(*res);
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(check[i] - (*res)[i]));
  if (err > 1e-10)
    throw NumericalError("stationary_distribution: fixed-point residual " + std::to_string(err));
  for (double& v : *res) v = std::max(v, 0.0);
  return *res;
}

std::vector<Trajectory> sample_trajectories(const Mdp& mdp, const Matrix& behavior_policy,
                                            std::size_t length, std::size_t count,
                                            std::uint64_t rng_seed) {
  if (length < 1) throw std::invalid_argument("sample_trajectories: length must be >= 1");
  if (behavior_policy.rows() != mdp.n_states || behavior_policy.cols() != mdp.n_actions)
    throw std::invalid_argument("sample_trajectories: policy shape mismatch");
  Rng rng(rng_seed);
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t e = 0; e < count; ++e) {
    Trajectory tr;
    tr.seed = rng_seed;
    tr.episode_id = e;
    std::size_t s = rng.categorical(mdp.initial_dist);
    for (std::size_t t = 0; t < length; ++t) {
      const std::size_t a = rng.categorical(behavior_policy.row(s));
      const std::size_t h = mdp.pair_index(s, a);
      const std::size_t s2 = rng.categorical(mdp.transition.row(h));
      tr.steps.push_back(TrajectoryStep{s, a, mdp.reward[h], s2});
      s = s2;
    }
    out.push_back(std::move(tr));
  }
  return out;
}

TransitionCounts count_transitions(const std::vector<Trajectory>& trajectories,
                                   std::size_t n_states, std::size_t n_actions) {
  TransitionCounts tc;
  tc.counts = Matrix(n_states * n_actions, n_states);
  tc.visits = Vector(n_states * n_actions, 0.0);
  for (const auto& tr : trajectories)
    for (const auto& st : tr.steps) {
      const std::size_t h = st.state * n_actions + st.action;
      tc.counts(h, st.next_state) += 1.0;
      tc.visits[h] += 1.0;
    }
  return tc;
}

TransitionCounts exact_counts(const Mdp& mdp, const Vector& xi) {
  if (xi.size() != mdp.num_pairs()) throw std::invalid_argument("exact_counts: xi length");
  TransitionCounts tc;
  tc.counts = mdp.transition;
  tc.visits.resize(mdp.num_pairs());
  for (std::size_t h = 0; h < mdp.num_pairs(); ++h) {
    // Keep every row "visited" so the empirical rows equal the exact ones.
    tc.visits[h] = std::max(xi[h], 1e-12);
    for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) tc.counts(h, s2) *= tc.visits[h];
  }
  return tc;
}

EmpiricalModel empirical_model(const TransitionCounts& counts, const Matrix& eval_policy,
                               std::size_t n_states, std::size_t n_actions,
                               double xi_floor) {
  const std::size_t n = n_states * n_actions;
  if (counts.counts.rows() != n || counts.counts.cols() != n_states)
    throw std::invalid_argument("empirical_model: counts shape mismatch");
  if (eval_policy.rows() != n_states || eval_policy.cols() != n_actions)
    throw std::invalid_argument("empirical_model: policy shape mismatch");

  double total = 0.0;
  for (double v : counts.visits) total += v;
  if (total <= 0.0) throw std::invalid_argument("empirical_model: no observed transitions");

  EmpiricalModel em;
  em.p_hat = Matrix(n, n);
  for (std::size_t s = 0; s < n_states; ++s)
    for (std::size_t a = 0; a < n_actions; ++a) {
      const std::size_t h = s * n_actions + a;
      if (counts.visits[h] > 0.0) {
        double rowsum = 0.0;
        for (std::size_t s2 = 0; s2 < n_states; ++s2) rowsum += counts.counts(h, s2);
        for (std::size_t s2 = 0; s2 < n_states; ++s2) {
          const double f = counts.counts(h, s2) / rowsum;
          if (f == 0.0) continue;
          for (std::size_t a2 = 0; a2 < n_actions; ++a2)
            em.p_hat(h, s2 * n_actions + a2) = f * eval_policy(s2, a2);
        }
      } else {
        // Unseen pair: self-loop composed with the evaluated policy.
        for (std::size_t a2 = 0; a2 < n_actions; ++a2)
          em.p_hat(h, s * n_actions + a2) = eval_policy(s, a2);
      }
    }
  Vector xi(n);
  for (std::size_t h = 0; h < n; ++h) xi[h] = counts.visits[h] / total;
  em.xi_hat = floor_distribution(xi, xi_floor);
  return em;
}

namespace {

constexpr std::size_t kGridDim = 13;
const char* const kFourRoomMap[kGridDim] = {
    "#############",
    "#     #     #",
    "#     #     #",
    "#           #",
    "#     #     #",
    "#     #     #",
    "## ####     #",
    "#     ### ###",
    "#     #     #",
    "#     #     #",
    "#           #",
    "#     #     #",
    "#############",
};
constexpr std::size_t kGoalRow = 1, kGoalCol = 11;
constexpr std::size_t kStartRow = 9, kStartCol = 3;

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> fourroom_cells() {
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t r = 0; r < kGridDim; ++r)
    for (std::size_t c = 0; c < kGridDim; ++c)
      if (kFourRoomMap[r][c] == ' ') cells.emplace_back(r, c);
  return cells;
}

Mdp fourroom() {
  const auto cells = fourroom_cells();
  const std::size_t n_states = cells.size();
  std::vector<std::vector<int>> id(kGridDim, std::vector<int>(kGridDim, -1));
  for (std::size_t i = 0; i < n_states; ++i) id[cells[i].first][cells[i].second] = static_cast<int>(i);

  Mdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = 4;
  mdp.discount = 0.99;
  mdp.transition = Matrix(n_states * 4, n_states);
  mdp.reward = Vector(n_states * 4, 0.0);
  mdp.initial_dist = Vector(n_states, 0.0);

  const int dr[4] = {-1, 1, 0, 0};  // up, down, left, right
  const int dc[4] = {0, 0, -1, 1};
  const int goal = id[kGoalRow][kGoalCol];
  const int start = id[kStartRow][kStartCol];
  mdp.initial_dist[static_cast<std::size_t>(start)] = 1.0;

  for (std::size_t i = 0; i < n_states; ++i) {
    const auto [r, c] = cells[i];
    for (std::size_t a = 0; a < 4; ++a) {
      const std::size_t rr = r + dr[a], cc = c + dc[a];
      int nxt = id[rr][cc];  // map border guarantees rr, cc stay in range
      if (nxt < 0) nxt = static_cast<int>(i);  // blocked: stay in place
      const std::size_t h = mdp.pair_index(i, a);
      mdp.transition(h, static_cast<std::size_t>(nxt)) = 1.0;
      if (nxt == goal) mdp.reward[h] = 1.0;  // reward for landing on the goal
    }
  }
  return mdp;
}

Mdp two_state_counterexample() {
  Mdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.discount = 0.99;
  mdp.transition = Matrix::from_rows({{0.0, 1.0}, {0.0, 1.0}});
  mdp.reward = Vector{0.0, 0.0};
  mdp.initial_dist = Vector{1.0, 0.0};
  return mdp;
}

}  // namespace stablerepr
