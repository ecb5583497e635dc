#include "stablerepr/td_sim.hpp"

#include <cmath>

namespace stablerepr {

namespace {

struct FixedPointInfo {
  Vector theta_star;  // empty when singular
  bool exists = false;
};

FixedPointInfo try_fixed_point(const Matrix& phi, const PolicyMatrix& pm,
                               const WeightedSpace& space, const Vector& reward, double gamma) {
  FixedPointInfo info;
  try {
    info.theta_star = td_fixed_point(phi, pm, space, reward, gamma);
    info.exists = true;
  } catch (const SingularFixedPointError&) {
  }
  return info;
}

double residual_norm(const Vector& theta, const FixedPointInfo& fp) {
  if (!fp.exists) return norm2(theta);
  return norm2(subtract(theta, fp.theta_star));
}

}  // namespace

TdRunResult expected_td0(const Matrix& phi, const PolicyMatrix& pm, const WeightedSpace& space,
                         const Vector& reward, double gamma, double eta, const Vector& theta0,
                         long max_steps, const TdTolerances& tol) {
  if (!(eta >= 0.0)) throw std::invalid_argument("expected_td0: eta must be nonnegative");
  const IterationMatrix im = iteration_matrix(phi, pm, space, gamma);
  Vector b(phi.cols(), 0.0);
  {
    Vector xr(reward.size());
    for (std::size_t i = 0; i < reward.size(); ++i) xr[i] = space.xi(i) * reward[i];
    b = phi.transpose() * xr;
  }
  const FixedPointInfo fp = try_fixed_point(phi, pm, space, reward, gamma);

  const double theta_star_scale = fp.exists ? 1.0 + norm2(fp.theta_star) : 1.0;
  const double conv = tol.tol_is_absolute ? tol.convergence_tol
                                          : tol.convergence_tol * theta_star_scale;
  const double div_threshold = tol.divergence_factor * (1.0 + norm2(theta0));

  TdRunResult res;
  Vector theta = theta0;
  res.residual_log.push_back({0, residual_norm(theta, fp), norm2(theta)});
  long k = 0;
  for (; k < max_steps; ++k) {
    const Vector a_theta = im.a_phi * theta;
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= eta * (a_theta[i] - b[i]);
    const long step = k + 1;
    if (step % tol.log_interval == 0 || step == max_steps)
      res.residual_log.push_back({step, residual_norm(theta, fp), norm2(theta)});
    if (norm2(theta) > div_threshold) {
      res.outcome = TdOutcome::Diverged;
      res.steps_taken = step;
      res.final_theta = theta;
      return res;
    }
    if (fp.exists && residual_norm(theta, fp) < conv) {
      res.outcome = TdOutcome::Converged;
      res.steps_taken = step;
      res.final_theta = theta;
      return res;
    }
  }
  res.outcome = TdOutcome::Undecided;
  res.steps_taken = k;
  res.final_theta = theta;
  return res;
}

TdRunResult expected_td0(const Representation& rep, const PolicyMatrix& pm,
                         const WeightedSpace& space, const Vector& reward, double gamma,
                         double eta, const Vector& theta0, long max_steps,
                         const TdTolerances& tol) {
  return expected_td0(rep.phi, pm, space, reward, gamma, eta, theta0, max_steps, tol);
}

TdRunResult stochastic_td0(const Mdp& mdp, const Matrix& eval_policy, const Vector& behavior_xi,
                           const Matrix& phi, const WeightedSpace& space,
                           const EtaSchedule& schedule, long steps, std::uint64_t rng_seed,
                           const TdTolerances& tol) {
  if (schedule.eta0 <= 0.0) throw std::invalid_argument("stochastic_td0: eta0 must be positive");
  const std::size_t n = mdp.num_pairs();
  if (phi.rows() != n || behavior_xi.size() != n)
    throw std::invalid_argument("stochastic_td0: dimension mismatch");
  const std::size_t d = phi.cols();
  const double gamma = mdp.discount;

  PolicyMatrix pm = build_policy_matrix(mdp, eval_policy);
  attach_xi(pm, behavior_xi);
  const FixedPointInfo fp = try_fixed_point(phi, pm, space, mdp.reward, gamma);
  const double theta_star_scale = fp.exists ? 1.0 + norm2(fp.theta_star) : 1.0;
  const double conv = tol.tol_is_absolute ? tol.convergence_tol
                                          : tol.convergence_tol * theta_star_scale;
  const double div_threshold = tol.divergence_factor;

  Rng rng(rng_seed);
  Vector theta(d, 0.0);
  TdRunResult res;
  res.residual_log.push_back({0, residual_norm(theta, fp), norm2(theta)});

  long k = 0;
  for (; k < steps; ++k) {
    const std::size_t h = rng.categorical(behavior_xi);
    const std::size_t s = h / mdp.n_actions;
    (void)s;
    const std::size_t s2 = rng.categorical(mdp.transition.row(h));
    const std::size_t a2 = rng.categorical(eval_policy.row(s2));
    const std::size_t h2 = mdp.pair_index(s2, a2);

    double q = 0.0, q2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      q += theta[j] * phi(h, j);
      q2 += theta[j] * phi(h2, j);
    }
    const double delta = q - (mdp.reward[h] + gamma * q2);
    const double eta = schedule.at(k);
    for (std::size_t j = 0; j < d; ++j) theta[j] -= eta * phi(h, j) * delta;

    const long step = k + 1;
    if (step % tol.log_interval == 0 || step == steps)
      res.residual_log.push_back({step, residual_norm(theta, fp), norm2(theta)});
    if (norm2(theta) > div_threshold) {
      res.outcome = TdOutcome::Diverged;
      res.steps_taken = step;
      res.final_theta = theta;
      return res;
    }
  }
  res.steps_taken = k;
  res.final_theta = theta;
  if (fp.exists && residual_norm(theta, fp) < conv) res.outcome = TdOutcome::Converged;
  return res;
}

}  // namespace stablerepr
