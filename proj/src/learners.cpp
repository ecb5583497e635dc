#include "stablerepr/learners.hpp"

#include <cmath>

namespace stablerepr {

namespace {

constexpr double kBlowupLimit = 1e8;

void check_finite_and_bounded(const LinearPredictorNet& net, long step) {
  if (!net.w1.all_finite() || !net.w2.all_finite() || net.w1.max_abs() > kBlowupLimit ||
      net.w2.max_abs() > kBlowupLimit)
    throw NumericalError("training blow-up at step " + std::to_string(step) +
                         " (|w1|max=" + std::to_string(net.w1.max_abs()) +
                         ", |w2|max=" + std::to_string(net.w2.max_abs()) + ")");
}

LinearPredictorNet init_net(std::size_t d, std::size_t n, std::size_t out, Rng& rng) {
  LinearPredictorNet net;
  net.w1 = Matrix(d, n);
  net.w2 = Matrix(out, d);
  net.out_dim = out;
  const double bound = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < n; ++j) net.w1(i, j) = rng.uniform(-bound, bound);
  for (std::size_t i = 0; i < out; ++i)
    for (std::size_t j = 0; j < d; ++j) net.w2(i, j) = rng.uniform(-bound, bound);
  return net;
}

struct AdamState {
  Matrix m1, v1, m2, v2;
  long t = 0;
};

void apply_gradients(LinearPredictorNet& net, const Matrix& g1, const Matrix& g2,
                     const TrainConfig& cfg, AdamState& adam) {
  if (cfg.optimizer == OptimizerKind::PlainSgd) {
    for (std::size_t i = 0; i < net.w1.rows(); ++i)
      for (std::size_t j = 0; j < net.w1.cols(); ++j) net.w1(i, j) -= cfg.step_size * g1(i, j);
    for (std::size_t i = 0; i < net.w2.rows(); ++i)
      for (std::size_t j = 0; j < net.w2.cols(); ++j) net.w2(i, j) -= cfg.step_size * g2(i, j);
    return;
  }
  ++adam.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, adam.t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, adam.t);
  auto update = [&](Matrix& w, Matrix& m, Matrix& v, const Matrix& g) {
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) {
        m(i, j) = cfg.beta1 * m(i, j) + (1.0 - cfg.beta1) * g(i, j);
        v(i, j) = cfg.beta2 * v(i, j) + (1.0 - cfg.beta2) * g(i, j) * g(i, j);
        const double mhat = m(i, j) / bc1;
        const double vhat = v(i, j) / bc2;
        w(i, j) -= cfg.step_size * mhat / (std::sqrt(vhat) + cfg.eps_num);
      }
  };
  update(net.w1, adam.m1, adam.v1, g1);
  update(net.w2, adam.m2, adam.v2, g2);
}

}  // namespace

// E_xi[phi_i^2] = 1 for every feature i; rows with zero second moment are
// left untouched (degenerate nets are reported downstream).
void renormalize_features(LinearPredictorNet& net, const WeightedSpace& space) {
  for (std::size_t i = 0; i < net.w1.rows(); ++i) {
    double m2 = 0.0;
    for (std::size_t h = 0; h < net.w1.cols(); ++h)
      m2 += space.xi(h) * net.w1(i, h) * net.w1(i, h);
    if (m2 > 0.0) {
      const double s = 1.0 / std::sqrt(m2);
      for (std::size_t h = 0; h < net.w1.cols(); ++h) net.w1(i, h) *= s;
    }
  }
}

Representation orthogonal_iteration(const PolicyMatrix& pm, const WeightedSpace& space,
                                    std::size_t d, std::size_t iters, const Matrix* phi0,
                                    std::uint64_t rng_seed) {
  const std::size_t n = pm.p_pi.rows();
  if (d == 0 || d > n) throw std::invalid_argument("orthogonal_iteration: d out of range");
  Rng rng(rng_seed);

  // Iterate in whitened coordinates: Q <- orth(B Q).
  const Matrix b = space.whiten(pm.p_pi);
  Matrix q(n, d);
  if (phi0) {
    if (phi0->rows() != n || phi0->cols() != d)
      throw std::invalid_argument("orthogonal_iteration: phi0 shape mismatch");
    q = space.whiten_basis(*phi0);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) q(i, j) = rng.normal();
  }
  std::vector<std::string> notes;
  std::size_t rank = 0;
  q = euclidean_orthonormalize(q, &rank);
  while (rank < d) {
    Matrix filled(n, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        filled(i, j) = (j < rank) ? q(i, j) : rng.normal();
    notes.push_back("re-randomized collapsed start columns");
    q = euclidean_orthonormalize(filled, &rank);
  }

  for (std::size_t it = 0; it < iters; ++it) {
    Matrix y = b * q;
    q = euclidean_orthonormalize(y, &rank);
    if (rank < d) {
      Matrix filled(n, d);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
          filled(i, j) = (j < rank) ? q(i, j) : rng.normal();
      notes.push_back("re-randomized collapsed column at iteration " + std::to_string(it));
      q = euclidean_orthonormalize(filled, &rank);
    }
  }

  Representation rep;
  rep.method = ReprMethod::Custom;
  rep.phi = space.unwhiten_basis(q);
  rep.is_orthogonal = true;
  rep.effective_d = d;
  rep.requested_d = d;
  rep.notes = std::move(notes);
  rep.notes.push_back("orthogonal-iteration");
  return rep;
}

double predictive_minibatch_loss(const LinearPredictorNet& net,
                                 const std::vector<std::size_t>& inputs, const Matrix& targets) {
  if (targets.rows() != inputs.size() || targets.cols() != net.out_dim)
    throw std::invalid_argument("predictive_minibatch_loss: target shape mismatch");
  const std::size_t d = net.hidden_dim();
  double loss = 0.0;
  Vector phi(d), f(net.out_dim);
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const std::size_t h = inputs[b];
    for (std::size_t i = 0; i < d; ++i) phi[i] = net.w1(i, h);
    for (std::size_t o = 0; o < net.out_dim; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += net.w2(o, i) * phi[i];
      const double e = s - targets(b, o);
      loss += e * e;
    }
  }
  // Mean over batch and output dimensions.
  return loss / static_cast<double>(inputs.size() * net.out_dim);
}

void predictive_minibatch_gradient(const LinearPredictorNet& net,
                                   const std::vector<std::size_t>& inputs, const Matrix& targets,
                                   Matrix* g_w1, Matrix* g_w2) {
  if (targets.rows() != inputs.size() || targets.cols() != net.out_dim)
    throw std::invalid_argument("predictive_minibatch_gradient: target shape mismatch");
  const std::size_t d = net.hidden_dim();
  *g_w1 = Matrix(net.w1.rows(), net.w1.cols());
  *g_w2 = Matrix(net.w2.rows(), net.w2.cols());
  const double inv_b = 1.0 / static_cast<double>(inputs.size() * net.out_dim);
  Vector phi(d), delta(net.out_dim);
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const std::size_t h = inputs[b];
    for (std::size_t i = 0; i < d; ++i) phi[i] = net.w1(i, h);
    for (std::size_t o = 0; o < net.out_dim; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += net.w2(o, i) * phi[i];
      delta[o] = 2.0 * inv_b * (s - targets(b, o));
    }
    for (std::size_t o = 0; o < net.out_dim; ++o)
      for (std::size_t i = 0; i < d; ++i) (*g_w2)(o, i) += delta[o] * phi[i];
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t o = 0; o < net.out_dim; ++o) s += net.w2(o, i) * delta[o];
      (*g_w1)(i, h) += s;
    }
  }
}

Matrix krylov_reward_targets(const PolicyMatrix& pm, const Vector& reward, std::size_t d) {
  const std::size_t n = pm.p_pi.rows();
  Matrix t(n, d);
  Vector v = reward;
  t.set_col(0, v);
  for (std::size_t k = 1; k < d; ++k) {
    v = pm.p_pi * v;
    t.set_col(k, v);
  }
  return t;
}

TrainResult train_schur_predictive(const LearnData& data, std::size_t d,
                                   const TrainConfig& config) {
  if (!data.pm || !data.space) throw std::invalid_argument("train_schur_predictive: missing data");
  if (d == 0) throw std::invalid_argument("train_schur_predictive: d must be positive");
  const PolicyMatrix& pm = *data.pm;
  const WeightedSpace& space = *data.space;
  const WeightedSpace& sample_space = data.sample_space ? *data.sample_space : space;
  const std::size_t n = pm.p_pi.rows();

  Rng rng(config.rng_seed);
  TrainResult out;
  out.net = init_net(d, n, d, rng);
  LinearPredictorNet target = out.net;
  AdamState adam;
  adam.m1 = adam.v1 = Matrix(d, n);
  adam.m2 = adam.v2 = Matrix(d, d);

  std::vector<std::size_t> batch(config.minibatch);
  Matrix targets(config.minibatch, d);

  for (long step = 0; step < config.steps; ++step) {
    if (config.target_refresh_interval &&
        step % *config.target_refresh_interval == 0) {
      renormalize_features(out.net, space);
      target = out.net;
    }

    for (std::size_t b = 0; b < config.minibatch; ++b) {
      const std::size_t h = rng.categorical(sample_space.xi());
      batch[b] = h;
      if (data.sample_transitions) {
        if (!data.mdp) throw std::invalid_argument("train_schur_predictive: sampler needs mdp");
        const std::size_t s2 = rng.categorical(data.mdp->transition.row(h));
        for (std::size_t i = 0; i < d; ++i) {
          double t = 0.0;
          for (std::size_t a2 = 0; a2 < data.mdp->n_actions; ++a2)
            t += pm.policy(s2, a2) * target.w1(i, s2 * data.mdp->n_actions + a2);
          targets(b, i) = t;
        }
      } else {
        // Exact conditional expectation through the row of p_pi.
        for (std::size_t i = 0; i < d; ++i) targets(b, i) = 0.0;
        for (std::size_t h2 = 0; h2 < n; ++h2) {
          const double p = pm.p_pi(h, h2);
          if (p == 0.0) continue;
          for (std::size_t i = 0; i < d; ++i) targets(b, i) += p * target.w1(i, h2);
        }
      }
    }

    Matrix g1, g2;
    predictive_minibatch_gradient(out.net, batch, targets, &g1, &g2);
    apply_gradients(out.net, g1, g2, config, adam);
    if (step % 256 == 0) check_finite_and_bounded(out.net, step);
    if (step % config.loss_log_interval == 0)
      out.loss_log.emplace_back(step, predictive_minibatch_loss(out.net, batch, targets));
  }
  check_finite_and_bounded(out.net, config.steps);

  out.rep = orthogonalized_for_analysis(extract_representation(out.net, space), space);
  out.rep.notes.push_back("schur-predictive");
  return out;
}

TrainResult train_krylov_predictive(const LearnData& data, std::size_t d,
                                    const TrainConfig& config) {
  if (!data.pm || !data.space || !data.reward)
    throw std::invalid_argument("train_krylov_predictive: missing data");
  if (d == 0) throw std::invalid_argument("train_krylov_predictive: d must be positive");
  const PolicyMatrix& pm = *data.pm;
  const WeightedSpace& space = *data.space;
  const WeightedSpace& sample_space = data.sample_space ? *data.sample_space : space;
  const Vector& reward = *data.reward;
  const std::size_t n = pm.p_pi.rows();

  Rng rng(config.rng_seed);
  TrainResult out;
  out.net = init_net(d, n, d, rng);
  AdamState adam;
  adam.m1 = adam.v1 = Matrix(d, n);
  adam.m2 = adam.v2 = Matrix(d, d);

  Matrix exact_targets;
  if (!data.sample_transitions) exact_targets = krylov_reward_targets(pm, reward, d);

  std::vector<std::size_t> batch(config.minibatch);
  Matrix targets(config.minibatch, d);

  for (long step = 0; step < config.steps; ++step) {
    for (std::size_t b = 0; b < config.minibatch; ++b) {
      const std::size_t h = rng.categorical(sample_space.xi());
      batch[b] = h;
      if (data.sample_transitions) {
        // Roll the evaluated policy d-1 steps; head i sees the reward at
        // step i of the rollout (single-sample estimate of the mean).
        std::size_t cur = h;
        for (std::size_t i = 0; i < d; ++i) {
          targets(b, i) = reward[cur];
          if (i + 1 < d) cur = rng.categorical(pm.p_pi.row(cur));
        }
      } else {
        for (std::size_t i = 0; i < d; ++i) targets(b, i) = exact_targets(h, i);
      }
    }

    Matrix g1, g2;
    predictive_minibatch_gradient(out.net, batch, targets, &g1, &g2);
    apply_gradients(out.net, g1, g2, config, adam);
    if (step % 256 == 0) check_finite_and_bounded(out.net, step);
    if (step % config.loss_log_interval == 0)
      out.loss_log.emplace_back(step, predictive_minibatch_loss(out.net, batch, targets));
  }
  check_finite_and_bounded(out.net, config.steps);

  out.rep = orthogonalized_for_analysis(extract_representation(out.net, space), space);
  out.rep.notes.push_back("krylov-predictive");
  if (norm_inf(reward) == 0.0) out.rep.notes.push_back("zero reward vector; targets degenerate");
  return out;
}

Representation extract_representation(const LinearPredictorNet& net, const WeightedSpace& space) {
  Representation rep;
  rep.method = ReprMethod::Custom;
  rep.phi = net.w1.transpose();
  rep.effective_d = net.hidden_dim();
  rep.requested_d = net.hidden_dim();
  rep.is_orthogonal = false;
  if (relative_rank_gap(rep.phi, space) < 1e-10)
    rep.notes.push_back("rank-deficient hidden layer");
  return rep;
}

Representation orthogonalized_for_analysis(const Representation& rep, const WeightedSpace& space) {
  std::size_t rank = 0;
  const Matrix q = euclidean_orthonormalize(space.whiten_basis(rep.phi), &rank, 1e-10,
                                            /*stop_at_dependence=*/false);
  Representation out = rep;
  out.phi = space.unwhiten_basis(q);
  out.is_orthogonal = true;
  out.effective_d = rank;
  out.notes.push_back("xi-orthogonalized for analysis");
  if (rank < rep.phi.cols())
    out.notes.push_back("truncated to numerical rank " + std::to_string(rank));
  return out;
}

}  // namespace stablerepr
