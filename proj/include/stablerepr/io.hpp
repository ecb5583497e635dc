#pragma once

#include <string>

#include "stablerepr/learners.hpp"
#include "stablerepr/td_sim.hpp"

namespace stablerepr {

// JSON/CSV formats. Doubles are printed with %.17g so identical inputs give
// byte-identical files.

std::string format_double(double v);

Mdp load_mdp_json(const std::string& path);
void save_mdp_json(const Mdp& mdp, const std::string& path);

Matrix load_policy_json(const std::string& path);  // {"policy": [[...], ...]}
void save_policy_json(const Matrix& policy, const std::string& path);

Vector load_vector_json(const std::string& path);  // {"values": [...]} or bare array
void save_vector_json(const Vector& v, const std::string& path);

void save_trajectories_csv(const std::vector<Trajectory>& trajectories, const std::string& path);
std::vector<Trajectory> load_trajectories_csv(const std::string& path);

/// Writes <base>.csv (matrix rows) and <base>.json (method + provenance).
void save_representation(const Representation& rep, const std::string& base_path);
Representation load_representation(const std::string& base_path);

std::string spectrum_to_json(const Spectrum& s);
std::string stability_report_to_json(const StabilityReport& r);

void save_checkpoint(const LinearPredictorNet& net, const TrainConfig& config, long step,
                     const std::string& path);
LinearPredictorNet load_checkpoint(const std::string& path);

void save_loss_csv(const std::vector<std::pair<long, double>>& log, const std::string& path);
void save_td_run_csv(const TdRunResult& run, const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace stablerepr
