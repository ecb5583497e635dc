#pragma once

#include <optional>

#include "stablerepr/stability.hpp"

namespace stablerepr {

/// Two-layer linear network on one-hot state-action inputs. The hidden
/// activations phi(s,a) = w1 * onehot(s,a) are the learned representation;
/// w2 maps them to the prediction head.
struct LinearPredictorNet {
  Matrix w1;  // d x n
  Matrix w2;  // out x d
  std::size_t out_dim = 0;

  std::size_t hidden_dim() const { return w1.rows(); }
  std::size_t input_dim() const { return w1.cols(); }
};

enum class OptimizerKind { PlainSgd, AdaptiveMoments };

struct TrainConfig {
  long steps = 100000;
  std::size_t minibatch = 32;
  OptimizerKind optimizer = OptimizerKind::PlainSgd;
  double step_size = 4.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_num = 1e-8;
  std::optional<long> target_refresh_interval = 10000;
  std::uint64_t rng_seed = 0;
  long loss_log_interval = 100;
};

struct TrainResult {
  LinearPredictorNet net;
  Representation rep;  // extracted and Xi-orthogonalized for analysis
  std::vector<std::pair<long, double>> loss_log;
};

/// Phi_k = Orthog(P Phi_{k-1}) from a (default random) start. Columns that
/// collapse during iteration are re-randomized (noted on the result).
Representation orthogonal_iteration(const PolicyMatrix& pm, const WeightedSpace& space,
                                    std::size_t d, std::size_t iters,
                                    const Matrix* phi0 = nullptr, std::uint64_t rng_seed = 0);

/// Data source for the gradient-descent learners. Exact mode computes
/// expectation targets through p_pi; sampler mode draws next states from
/// the environment and composes the evaluated policy exactly.
struct LearnData {
  const PolicyMatrix* pm = nullptr;      // required
  const WeightedSpace* space = nullptr;  // analysis + renormalization weights
  const WeightedSpace* sample_space = nullptr;  // minibatch inputs; defaults to space
  const Mdp* mdp = nullptr;              // required in sampler mode
  const Vector* reward = nullptr;        // required by the krylov learner
  bool sample_transitions = false;       // draw s' instead of the exact expectation
};

/// Next-feature prediction with a target network (two-timescale scheme).
/// After each target refresh the live features are renormalized to unit
/// second moment under xi.
TrainResult train_schur_predictive(const LearnData& data, std::size_t d, const TrainConfig& config);

/// Reward-trajectory prediction: head i regresses the expected reward i-1
/// steps ahead. Exact targets use powers of p_pi; rollout targets simulate
/// the evaluated policy.
TrainResult train_krylov_predictive(const LearnData& data, std::size_t d,
                                    const TrainConfig& config);

/// Rows of the hidden layer as a Representation (method Custom). Flags a
/// rank-deficient hidden layer in the notes.
Representation extract_representation(const LinearPredictorNet& net, const WeightedSpace& space);

/// Scales each hidden feature so that E_xi[phi_i^2] = 1 (zero features are
/// left untouched). Applied at every target refresh during training.
void renormalize_features(LinearPredictorNet& net, const WeightedSpace& space);

/// Xi-orthonormalized copy for analysis, truncated to the numerical rank.
Representation orthogonalized_for_analysis(const Representation& rep, const WeightedSpace& space);

/// Mean squared prediction loss of the net over the given inputs against
/// per-sample target rows (|batch| x out). Shared by both learners.
double predictive_minibatch_loss(const LinearPredictorNet& net,
                                 const std::vector<std::size_t>& inputs, const Matrix& targets);

/// Analytic gradients of predictive_minibatch_loss.
void predictive_minibatch_gradient(const LinearPredictorNet& net,
                                   const std::vector<std::size_t>& inputs, const Matrix& targets,
                                   Matrix* g_w1, Matrix* g_w2);

/// Exact Krylov reward targets: column i of the result is P^i r, so row h
/// lists the expected rewards 0..d-1 steps ahead of h.
Matrix krylov_reward_targets(const PolicyMatrix& pm, const Vector& reward, std::size_t d);

}  // namespace stablerepr
