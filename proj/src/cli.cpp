#include "stablerepr/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace stablerepr {

using nlohmann::json;

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("STABLEREPR_LOG");
    if (!env || !*env) return 0;
    return std::atoi(env);
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[stablerepr] " << msg << '\n';
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[stablerepr:debug] " << msg << '\n';
}

namespace {

std::vector<ReprMethod> all_methods() {
  return {ReprMethod::EigSymm, ReprMethod::SafeEigSymm, ReprMethod::ProtoValue,
          ReprMethod::Svd,     ReprMethod::SvdSr,       ReprMethod::Schur,
          ReprMethod::Krylov,  ReprMethod::OrthogKrylov};
}

Mdp load_mdp_source(const std::string& source) {
  if (source == "fourroom") return fourroom();
  if (source == "two-state") return two_state_counterexample();
  return load_mdp_json(source);
}

Vector behavior_visitation(const Mdp& mdp, std::size_t episodes, std::size_t length,
                           std::uint64_t seed) {
  const Matrix uniform_policy(mdp.n_states, mdp.n_actions,
                              1.0 / static_cast<double>(mdp.n_actions));
  const auto trajectories = sample_trajectories(mdp, uniform_policy, length, episodes, seed);
  const TransitionCounts counts = count_transitions(trajectories, mdp.n_states, mdp.n_actions);
  double total = 0.0;
  for (double v : counts.visits) total += v;
  Vector xi(counts.visits.size());
  for (std::size_t h = 0; h < xi.size(); ++h) xi[h] = counts.visits[h] / total;
  return xi;
}

Vector resolve_xi(const std::string& source, const Mdp& mdp, const PolicyMatrix& pm,
                  std::size_t episodes, std::size_t length, std::uint64_t seed) {
  if (source == "uniform") return Vector(mdp.num_pairs(), 1.0 / static_cast<double>(mdp.num_pairs()));
  if (source == "behavior") return behavior_visitation(mdp, episodes, length, seed);
  if (source == "stationary") return stationary_distribution(pm);
  return load_vector_json(source);
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count == 0 ? 1 : count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

/// Heavy per-method decompositions shared across the d grid. Slicing these
/// produces the same representations as the per-d module calls.
struct SweepContext {
  const AnalysisInstance& inst;
  Vector q_true;
  std::optional<SelfAdjointEig> k_eig;
  std::optional<WeightedSpace> stationary_space;
  std::optional<SelfAdjointEig> k_eig_stationary;  // ProtoValue basis
  std::optional<WeightedSvd> svd_full;
  std::optional<WeightedSvd> svd_sr_full;
  std::optional<WeightedSchur> schur;
  std::optional<Representation> krylov_max;        // raw chain at d_max
  std::optional<Representation> orthog_krylov_max;

  explicit SweepContext(const AnalysisInstance& i) : inst(i) {}

  void prepare(const std::vector<ReprMethod>& methods, std::size_t d_max) {
    const std::size_t n = inst.pm.p_pi.rows();
    auto need = [&](ReprMethod m) {
      return std::find(methods.begin(), methods.end(), m) != methods.end();
    };
    q_true = compute_value_function(inst.pm, inst.mdp.reward, inst.gamma);
    if (need(ReprMethod::EigSymm) || need(ReprMethod::SafeEigSymm))
      k_eig = self_adjoint_eig(symmetrized_transition(inst.pm, inst.space), inst.space);
    if (need(ReprMethod::ProtoValue)) {
      // Table 1 footnote: proto-value functions exist only under on-policy
      // data; the basis is built under the stationary distribution and then
      // analyzed under the sweep's data distribution.
      stationary_space =
          WeightedSpace(floor_distribution(stationary_distribution(inst.pm)));
      PolicyMatrix stat_pm = inst.pm;
      stat_pm.xi = stationary_space->xi();
      k_eig_stationary =
          self_adjoint_eig(symmetrized_transition(stat_pm, *stationary_space), *stationary_space);
    }
    if (need(ReprMethod::Svd)) svd_full = weighted_svd(inst.pm.p_pi, inst.space, n);
    if (need(ReprMethod::SvdSr)) {
      Matrix a = Matrix::identity(n);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) a(r, c) -= inst.gamma * inst.pm.p_pi(r, c);
      const Matrix psi = LuFactorization(a).solve(Matrix::identity(n));
      svd_sr_full = weighted_svd(psi, inst.space, n);
    }
    if (need(ReprMethod::Schur)) schur = real_schur(inst.pm.p_pi, inst.space);
    if (need(ReprMethod::Krylov) || need(ReprMethod::OrthogKrylov)) {
      const std::size_t dk = std::min(d_max, n);
      krylov_max = krylov_family(inst.pm, inst.space, inst.mdp.reward, dk, KrylovVariant::Krylov);
      orthog_krylov_max =
          krylov_family(inst.pm, inst.space, inst.mdp.reward, dk, KrylovVariant::OrthogKrylov);
    }
  }

  Representation at(ReprMethod method, std::size_t d) const {
    const std::size_t n = inst.pm.p_pi.rows();
    Representation rep;
    rep.method = method;
    rep.requested_d = d;
    rep.gamma = inst.gamma;
    switch (method) {
      case ReprMethod::EigSymm:
        rep.phi = k_eig->vectors.cols_range(0, d);
        rep.is_orthogonal = true;
        rep.effective_d = d;
        return rep;
      case ReprMethod::SafeEigSymm: {
        const std::size_t dstar = safe_spectral_index(k_eig->eigenvalues, inst.gamma);
        if (dstar > n) throw std::invalid_argument("sweep: empty safe spectral set");
        const std::size_t take = std::min(d, n - dstar + 1);
        rep.phi = k_eig->vectors.cols_range(dstar - 1, take);
        rep.is_orthogonal = true;
        rep.effective_d = take;
        return rep;
      }
      case ReprMethod::ProtoValue:
        rep.phi = k_eig_stationary->vectors.cols_range(0, d);
        // Orthogonal under the stationary weights, not under the sweep xi.
        rep.is_orthogonal = false;
        rep.effective_d = d;
        return rep;
      case ReprMethod::Svd:
      case ReprMethod::SvdSr: {
        const WeightedSvd& f = (method == ReprMethod::Svd) ? *svd_full : *svd_sr_full;
        rep.phi = f.u.cols_range(0, d);
        rep.is_orthogonal = true;
        rep.effective_d = d;
        rep.svd = SvdFactors{rep.phi, Vector(f.sigma.begin(), f.sigma.begin() + d),
                             f.v.cols_range(0, d)};
        return rep;
      }
      case ReprMethod::Schur: {
        const std::size_t eff = schur->aligned_size(d);
        rep.phi = schur->basis.cols_range(0, eff);
        rep.is_orthogonal = true;
        rep.effective_d = eff;
        return rep;
      }
      case ReprMethod::Krylov: {
        const std::size_t eff = std::min(d, krylov_max->effective_d);
        rep.phi = krylov_max->phi.cols_range(0, eff);
        rep.is_orthogonal = (eff == 1);
        rep.effective_d = eff;
        return rep;
      }
      case ReprMethod::OrthogKrylov: {
        const std::size_t eff = std::min(d, orthog_krylov_max->effective_d);
        rep.phi = orthog_krylov_max->phi.cols_range(0, eff);
        rep.is_orthogonal = true;
        rep.effective_d = eff;
        return rep;
      }
      case ReprMethod::Custom:
        throw std::invalid_argument("sweep: custom is not a constructible method");
    }
    throw std::invalid_argument("sweep: unknown method");
  }
};

struct SweepRow {
  ReprMethod method;
  std::size_t d = 0;
  bool stable = false;
  double min_real_part = 0.0;
  double epsilon = 0.0;
  bool is_pd = false;
  double policy_accuracy = 0.0;
  double opt_proj_err = 0.0;
  std::optional<double> bellman_err;
};

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "method,d,stable,min_real_part,epsilon,is_pd,policy_accuracy,opt_proj_err,bellman_err\n";
  for (const auto& r : rows) {
    out << repr_method_name(r.method) << ',' << r.d << ',' << (r.stable ? 1 : 0) << ','
        << format_double(r.min_real_part) << ',' << format_double(r.epsilon) << ','
        << (r.is_pd ? 1 : 0) << ',' << format_double(r.policy_accuracy) << ','
        << format_double(r.opt_proj_err) << ','
        << (r.bellman_err ? format_double(*r.bellman_err) : std::string("diverged")) << '\n';
  }
  return out.str();
}

}  // namespace

AnalysisInstance build_instance(const SweepSpec& spec) {
  Mdp mdp = load_mdp_source(spec.mdp_source);
  mdp.validate();
  const OptimalValues opt = value_iteration_optimal(mdp);
  const Matrix eval_policy =
      epsilon_greedy_tied(opt.q_star, spec.epsilon, mdp.n_states, mdp.n_actions);
  PolicyMatrix pm = build_policy_matrix(mdp, eval_policy);
  const Vector xi = resolve_xi(spec.xi_source, mdp, pm, spec.behavior_episodes,
                               spec.behavior_length, spec.data_seed);
  attach_xi(pm, xi);
  WeightedSpace space(pm.xi);
  const double gamma = spec.gamma.value_or(mdp.discount);
  return AnalysisInstance{std::move(mdp), eval_policy, std::move(pm), std::move(space), gamma};
}

std::string cmd_sweep(const SweepSpec& spec) {
  if (spec.d_min == 0 || spec.d_max < spec.d_min)
    throw std::invalid_argument("sweep: empty d grid");
  const AnalysisInstance inst = build_instance(spec);
  const std::size_t n = inst.pm.p_pi.rows();
  if (spec.d_max > n) throw std::invalid_argument("sweep: d_max exceeds state-action count");
  const std::vector<ReprMethod> methods = spec.methods.empty() ? all_methods() : spec.methods;

  SweepContext ctx(inst);
  ctx.prepare(methods, spec.d_max);
  log_info("sweep context ready (n=" + std::to_string(n) + ")");

  const std::size_t d_count = spec.d_max - spec.d_min + 1;
  std::vector<SweepRow> rows(methods.size() * d_count);
  parallel_for(rows.size(), spec.jobs, [&](std::size_t cell) {
    const ReprMethod method = methods[cell / d_count];
    const std::size_t d = spec.d_min + cell % d_count;
    const Representation rep = ctx.at(method, d);
    SweepRow row;
    row.method = method;
    row.d = d;
    const StabilityReport sr = stability_report(iteration_matrix(rep, inst.pm, inst.space, inst.gamma));
    row.stable = sr.stable;
    row.min_real_part = sr.min_real_part;
    row.epsilon = epsilon_invariance(rep, inst.pm, inst.space);
    row.is_pd = positive_definite_check(rep, inst.pm, inst.space, inst.gamma).is_pd;
    const QualityReport q = evaluate_quality(rep, inst.pm, inst.space, inst.mdp);
    row.policy_accuracy = q.policy_accuracy;
    row.opt_proj_err = q.optimal_projection_error;
    row.bellman_err = q.bellman_projection_error;
    rows[cell] = row;
  });

  const std::string csv = sweep_csv(rows);
  std::filesystem::create_directories(spec.out_dir);
  write_text_file(spec.out_dir + "/sweep.csv", csv);
  return csv;
}

std::string cmd_learnability(const SweepSpec& spec) {
  const AnalysisInstance inst = build_instance(spec);
  std::vector<ReprMethod> methods = spec.methods;
  if (methods.empty()) {
    methods = all_methods();
    // ProtoValue is undefined off the stationary distribution; the
    // estimation study follows the data distribution.
    methods.erase(std::remove(methods.begin(), methods.end(), ReprMethod::ProtoValue),
                  methods.end());
  }
  const std::size_t d = spec.learnability_d;

  auto build_with = [&](const PolicyMatrix& pm, const WeightedSpace& space,
                        ReprMethod m) -> Representation {
    switch (m) {
      case ReprMethod::EigSymm:
        return spectral_family(pm, space, d, SpectralVariant::EigSymm, inst.gamma);
      case ReprMethod::SafeEigSymm:
        return spectral_family(pm, space, d, SpectralVariant::SafeEigSymm, inst.gamma);
      case ReprMethod::ProtoValue:
        return spectral_family(pm, space, d, SpectralVariant::ProtoValue, inst.gamma);
      case ReprMethod::Svd:
        return svd_family(pm, space, d, inst.gamma, SvdVariant::Svd);
      case ReprMethod::SvdSr:
        return svd_family(pm, space, d, inst.gamma, SvdVariant::SvdSr);
      case ReprMethod::Schur:
        return schur_representation(pm, space, d);
      case ReprMethod::Krylov:
        return krylov_family(pm, space, inst.mdp.reward, d, KrylovVariant::Krylov);
      case ReprMethod::OrthogKrylov:
        return krylov_family(pm, space, inst.mdp.reward, d, KrylovVariant::OrthogKrylov);
      case ReprMethod::Custom:
        break;
    }
    throw std::invalid_argument("learnability: unsupported method");
  };

  std::vector<Representation> exact;
  exact.reserve(methods.size());
  for (ReprMethod m : methods) exact.push_back(build_with(inst.pm, inst.space, m));

  struct Cell {
    std::size_t n_samples;
    std::uint64_t seed;
    std::vector<double> distances;  // per method
  };
  std::vector<Cell> cells;
  if (spec.exact_injection) cells.push_back({0, 0, {}});
  for (std::size_t s : spec.samples)
    for (std::uint64_t seed : spec.seeds) cells.push_back({s, seed, {}});

  const Matrix uniform_policy(inst.mdp.n_states, inst.mdp.n_actions,
                              1.0 / static_cast<double>(inst.mdp.n_actions));

  parallel_for(cells.size(), spec.jobs, [&](std::size_t ci) {
    Cell& cell = cells[ci];
    TransitionCounts counts;
    if (cell.n_samples == 0) {
      counts = exact_counts(inst.mdp, inst.pm.xi);
    } else {
      const std::size_t episodes =
          (cell.n_samples + spec.behavior_length - 1) / spec.behavior_length;
      const auto trajectories =
          sample_trajectories(inst.mdp, uniform_policy, spec.behavior_length, episodes, cell.seed);
      counts = count_transitions(trajectories, inst.mdp.n_states, inst.mdp.n_actions);
    }
    const EmpiricalModel em =
        empirical_model(counts, inst.eval_policy, inst.mdp.n_states, inst.mdp.n_actions);
    PolicyMatrix pm_hat;
    pm_hat.p_pi = em.p_hat;
    pm_hat.policy = inst.eval_policy;
    pm_hat.xi = em.xi_hat;
    const WeightedSpace space_hat(em.xi_hat);
    cell.distances.resize(methods.size());
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const Representation rep_hat = build_with(pm_hat, space_hat, methods[mi]);
      cell.distances[mi] = subspace_distance(exact[mi].phi, rep_hat.phi, inst.space);
    }
  });

  std::ostringstream out;
  out << "method,d,n_samples,seed,subspace_distance\n";
  for (std::size_t mi = 0; mi < methods.size(); ++mi)
    for (const auto& cell : cells)
      out << repr_method_name(methods[mi]) << ',' << d << ',' << cell.n_samples << ','
          << cell.seed << ',' << format_double(cell.distances[mi]) << '\n';
  const std::string csv = out.str();
  std::filesystem::create_directories(spec.out_dir);
  write_text_file(spec.out_dir + "/learnability.csv", csv);
  return csv;
}

std::string cmd_learn(const LearnSpec& spec) {
  SweepSpec inst_spec;
  inst_spec.mdp_source = spec.mdp_source;
  inst_spec.xi_source = spec.xi_source;
  inst_spec.data_seed = spec.data_seed;
  inst_spec.epsilon = spec.epsilon;
  const AnalysisInstance inst = build_instance(inst_spec);

  LearnData data;
  data.pm = &inst.pm;
  data.space = &inst.space;
  data.mdp = &inst.mdp;
  data.reward = &inst.mdp.reward;
  data.sample_transitions = spec.sample_transitions;

  // Exact-target reward regression is a didactic mode; inputs are drawn
  // uniformly so every column of the fit is constrained.
  const WeightedSpace uniform_space = WeightedSpace::uniform(inst.pm.p_pi.rows());
  const bool krylov_exact = (spec.variant == LearnVariant::Krylov && !spec.sample_transitions);
  if (krylov_exact) data.sample_space = &uniform_space;

  TrainResult result;
  if (spec.variant == LearnVariant::Schur) {
    result = train_schur_predictive(data, spec.d, spec.config);
  } else {
    result = train_krylov_predictive(data, spec.d, spec.config);
  }

  std::filesystem::create_directories(spec.out_dir);
  save_checkpoint(result.net, spec.config, spec.config.steps, spec.out_dir + "/checkpoint.json");
  save_loss_csv(result.loss_log, spec.out_dir + "/loss.csv");

  const StabilityReport sr =
      stability_report(iteration_matrix(result.rep, inst.pm, inst.space, inst.gamma));
  const double eps = epsilon_invariance(result.rep, inst.pm, inst.space);
  const PositiveDefiniteReport pd =
      positive_definite_check(result.rep, inst.pm, inst.space, inst.gamma);

  json j;
  j["variant"] = (spec.variant == LearnVariant::Schur) ? "schur" : "krylov";
  j["d"] = spec.d;
  j["effective_d"] = result.rep.effective_d;
  j["stable"] = sr.stable;
  j["min_real_part"] = sr.min_real_part;
  j["epsilon_invariance"] = eps;
  j["is_pd"] = pd.is_pd;
  if (!result.loss_log.empty()) {
    j["initial_loss"] = result.loss_log.front().second;
    j["final_loss"] = result.loss_log.back().second;
  }
  const std::size_t cmp_d = result.rep.effective_d;
  if (spec.variant == LearnVariant::Schur) {
    const Representation target = schur_representation(inst.pm, inst.space, cmp_d);
    j["subspace_distance_to_exact"] =
        subspace_distance(result.rep.phi, target.phi, inst.space);
    j["distance_space"] = "data";
  } else if (norm_inf(inst.mdp.reward) > 0.0) {
    const Representation target =
        krylov_family(inst.pm, inst.space, inst.mdp.reward, cmp_d, KrylovVariant::OrthogKrylov);
    // The data metric scales the reward region by its (floored) visitation,
    // which hides the span actually recovered; compare spans uniformly.
    j["subspace_distance_to_exact"] =
        subspace_distance(result.rep.phi, target.phi,
                          krylov_exact ? uniform_space : inst.space);
    j["distance_space"] = krylov_exact ? "uniform" : "data";
  }
  save_representation(result.rep, spec.out_dir + "/representation");
  const std::string text = j.dump(1);
  write_text_file(spec.out_dir + "/analysis.json", text);
  return text;
}

std::string cmd_analyze(const AnalyzeSpec& spec) {
  Mdp mdp = load_mdp_json(spec.mdp_path);
  const Matrix policy = load_policy_json(spec.policy_path);
  Representation rep = load_representation(spec.representation_base);
  if (rep.phi.rows() != mdp.num_pairs())
    throw std::invalid_argument("analyze: representation rows do not match |S||A|");

  PolicyMatrix pm = build_policy_matrix(mdp, policy);
  const double gamma = spec.gamma.value_or(mdp.discount);
  SweepSpec xi_spec;
  const Vector xi = resolve_xi(spec.xi_source, mdp, pm, xi_spec.behavior_episodes,
                               xi_spec.behavior_length, xi_spec.data_seed);
  attach_xi(pm, xi);
  const WeightedSpace space(pm.xi);

  const IterationMatrix im = iteration_matrix(rep, pm, space, gamma);
  const StabilityReport sr = stability_report(im);
  const double eps = epsilon_invariance(rep, pm, space);
  const PositiveDefiniteReport pd = positive_definite_check(rep, pm, space, gamma);
  const QualityReport q = evaluate_quality(rep, pm, space, mdp);

  json j;
  j["stability"] = json::parse(stability_report_to_json(sr));
  j["epsilon_invariance"] = eps;
  j["is_pd"] = pd.is_pd;
  j["min_sym_eig"] = pd.min_sym_eig;
  j["policy_accuracy"] = q.policy_accuracy;
  j["optimal_projection_error"] = q.optimal_projection_error;
  if (q.bellman_projection_error)
    j["bellman_projection_error"] = *q.bellman_projection_error;
  else
    j["bellman_projection_error"] = "diverged";
  j["effective_d"] = rep.effective_d;
  j["method"] = repr_method_name(rep.method);
  const std::string text = j.dump(1);
  if (spec.out_path) write_text_file(*spec.out_path, text);
  return text;
}

}  // namespace stablerepr
