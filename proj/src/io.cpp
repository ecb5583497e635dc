#include "stablerepr/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace stablerepr {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << content;
}

namespace {

json parse_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("JSON parse error in " + path + ": " + e.what());
  }
}

Vector to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw std::invalid_argument(what + ": expected an array");
  Vector v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(x.get<double>());
  return v;
}

Matrix to_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument(what + ": expected a 2d array");
  Matrix m(j.size(), j[0].size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != m.cols())
      throw std::invalid_argument(what + ": ragged rows");
    for (std::size_t c = 0; c < m.cols(); ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Mdp load_mdp_json(const std::string& path) {
  const json j = parse_file(path);
  Mdp mdp;
  try {
    mdp.n_states = j.at("n_states").get<std::size_t>();
    mdp.n_actions = j.at("n_actions").get<std::size_t>();
    const auto& t = j.at("transitions");
    if (!t.is_array() || t.size() != mdp.n_states)
      throw std::invalid_argument("transitions: expected n_states outer entries");
    mdp.transition = Matrix(mdp.num_pairs(), mdp.n_states);
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      if (!t[s].is_array() || t[s].size() != mdp.n_actions)
        throw std::invalid_argument("transitions: expected n_actions entries per state");
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
        const Vector dist = to_vector(t[s][a], "transitions row");
        if (dist.size() != mdp.n_states)
          throw std::invalid_argument("transitions: next-state distribution length");
        for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2)
          mdp.transition(mdp.pair_index(s, a), s2) = dist[s2];
      }
    }
    mdp.reward = to_vector(j.at("rewards"), "rewards");
    mdp.initial_dist = to_vector(j.at("initial_dist"), "initial_dist");
    mdp.discount = j.at("discount").get<double>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("MDP file " + path + ": " + e.what());
  }
  mdp.validate();
  return mdp;
}

void save_mdp_json(const Mdp& mdp, const std::string& path) {
  json j;
  j["n_states"] = mdp.n_states;
  j["n_actions"] = mdp.n_actions;
  json trans = json::array();
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    json per_action = json::array();
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      json dist = json::array();
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2)
        dist.push_back(mdp.transition(mdp.pair_index(s, a), s2));
      per_action.push_back(std::move(dist));
    }
    trans.push_back(std::move(per_action));
  }
  j["transitions"] = std::move(trans);
  j["rewards"] = mdp.reward;
  j["initial_dist"] = mdp.initial_dist;
  j["discount"] = mdp.discount;
  write_text_file(path, j.dump(1));
}

Matrix load_policy_json(const std::string& path) {
  const json j = parse_file(path);
  if (j.contains("policy")) return to_matrix(j["policy"], "policy");
  return to_matrix(j, "policy");
}

void save_policy_json(const Matrix& policy, const std::string& path) {
  json j;
  j["policy"] = matrix_to_json(policy);
  write_text_file(path, j.dump(1));
}

Vector load_vector_json(const std::string& path) {
  const json j = parse_file(path);
  if (j.contains("values")) return to_vector(j["values"], "values");
  return to_vector(j, "vector");
}

void save_vector_json(const Vector& v, const std::string& path) {
  json j;
  j["values"] = v;
  write_text_file(path, j.dump(1));
}

void save_trajectories_csv(const std::vector<Trajectory>& trajectories, const std::string& path) {
  std::ostringstream out;
  out << "step,s,a,r,s_next,episode_id\n";
  for (const auto& tr : trajectories) {
    for (std::size_t t = 0; t < tr.steps.size(); ++t) {
      const auto& st = tr.steps[t];
      out << t << ',' << st.state << ',' << st.action << ',' << format_double(st.reward) << ','
          << st.next_state << ',' << tr.episode_id << '\n';
    }
  }
  write_text_file(path, out.str());
}

std::vector<Trajectory> load_trajectories_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty trajectory file: " + path);
  std::vector<Trajectory> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    TrajectoryStep st{};
    std::size_t step_idx = 0, episode = 0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%zu,%lf,%zu,%zu", &step_idx, &st.state, &st.action,
                    &st.reward, &st.next_state, &episode) != 6)
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": bad trajectory row");
    if (episode >= out.size()) {
      out.resize(episode + 1);
      out[episode].episode_id = episode;
    }
    out[episode].steps.push_back(st);
  }
  return out;
}

void save_representation(const Representation& rep, const std::string& base_path) {
  std::ostringstream csv;
  for (std::size_t i = 0; i < rep.phi.rows(); ++i) {
    for (std::size_t j = 0; j < rep.phi.cols(); ++j) {
      if (j) csv << ',';
      csv << format_double(rep.phi(i, j));
    }
    csv << '\n';
  }
  write_text_file(base_path + ".csv", csv.str());

  json j;
  j["method"] = repr_method_name(rep.method);
  j["is_orthogonal"] = rep.is_orthogonal;
  j["effective_d"] = rep.effective_d;
  j["requested_d"] = rep.requested_d;
  j["gamma"] = rep.gamma;
  j["notes"] = rep.notes;
  write_text_file(base_path + ".json", j.dump(1));
}

Representation load_representation(const std::string& base_path) {
  Representation rep;
  {
    std::istringstream in(read_text_file(base_path + ".csv"));
    std::vector<Vector> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      Vector row;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) {
        try {
          row.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw std::invalid_argument(base_path + ".csv:" + std::to_string(line_no) +
                                      ": bad number '" + cell + "'");
        }
      }
      if (!rows.empty() && row.size() != rows.front().size())
        throw std::invalid_argument(base_path + ".csv:" + std::to_string(line_no) +
                                    ": ragged row");
      rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().empty())
      throw std::invalid_argument(base_path + ".csv: empty representation matrix");
    rep.phi = Matrix(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows[i].size(); ++j) rep.phi(i, j) = rows[i][j];
  }
  const json j = parse_file(base_path + ".json");
  const auto method = repr_method_from_name(j.value("method", "custom"));
  rep.method = method.value_or(ReprMethod::Custom);
  rep.is_orthogonal = j.value("is_orthogonal", false);
  rep.effective_d = j.value("effective_d", rep.phi.cols());
  rep.requested_d = j.value("requested_d", rep.phi.cols());
  rep.gamma = j.value("gamma", 0.0);
  if (j.contains("notes"))
    for (const auto& n : j["notes"]) rep.notes.push_back(n.get<std::string>());
  if (rep.effective_d != rep.phi.cols())
    throw std::invalid_argument(base_path + ": effective_d disagrees with the matrix");
  return rep;
}

std::string spectrum_to_json(const Spectrum& s) {
  json arr = json::array();
  for (const auto& z : s.eigenvalues) arr.push_back({{"re", z.real()}, {"im", z.imag()}});
  return arr.dump();
}

std::string stability_report_to_json(const StabilityReport& r) {
  json j;
  j["spectrum"] = json::parse(spectrum_to_json(r.spectrum));
  j["min_real_part"] = r.min_real_part;
  j["stable"] = r.stable;
  j["marginal"] = r.marginal;
  if (r.max_step_size)
    j["max_step_size"] = *r.max_step_size;
  else
    j["max_step_size"] = nullptr;
  j["margin"] = r.margin;
  return j.dump(1);
}

void save_checkpoint(const LinearPredictorNet& net, const TrainConfig& config, long step,
                     const std::string& path) {
  json j;
  j["w1"] = matrix_to_json(net.w1);
  j["w2"] = matrix_to_json(net.w2);
  j["out_dim"] = net.out_dim;
  j["step"] = step;
  j["config"] = {
      {"steps", config.steps},
      {"minibatch", config.minibatch},
      {"optimizer", config.optimizer == OptimizerKind::PlainSgd ? "plain-sgd" : "adaptive-moments"},
      {"step_size", config.step_size},
      {"beta1", config.beta1},
      {"beta2", config.beta2},
      {"eps_num", config.eps_num},
      {"target_refresh_interval",
       config.target_refresh_interval ? json(*config.target_refresh_interval) : json(nullptr)},
      {"rng_seed", config.rng_seed},
  };
  write_text_file(path, j.dump(1));
}

LinearPredictorNet load_checkpoint(const std::string& path) {
  const json j = parse_file(path);
  LinearPredictorNet net;
  net.w1 = to_matrix(j.at("w1"), "w1");
  net.w2 = to_matrix(j.at("w2"), "w2");
  net.out_dim = j.at("out_dim").get<std::size_t>();
  return net;
}

void save_loss_csv(const std::vector<std::pair<long, double>>& log, const std::string& path) {
  std::ostringstream out;
  out << "step,loss\n";
  for (const auto& [step, loss] : log) out << step << ',' << format_double(loss) << '\n';
  write_text_file(path, out.str());
}

void save_td_run_csv(const TdRunResult& run, const std::string& path) {
  std::ostringstream out;
  out << "step,residual_norm,theta_norm\n";
  for (const auto& e : run.residual_log)
    out << e.step << ',' << format_double(e.residual_norm) << ',' << format_double(e.theta_norm)
        << '\n';
  write_text_file(path, out.str());
}

}  // namespace stablerepr
