#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hashinv/centers.hpp"
#include "hashinv/diffusion.hpp"
#include "hashinv/inversion.hpp"
#include "hashinv/toy_world.hpp"

// Experiment orchestration: one config object drives four commands —
// gen (world + observed code sets), estimate (center recovery + alignment),
// attack (diffusion inversion of the estimated centers), sweep (re-run the
// pipeline across one parameter), report (merge run artifacts).
// Every derived random stream is tagged off master_seed, and no output file
// contains timestamps or absolute paths, so identical configs produce
// byte-identical artifacts.

namespace hashinv {

struct ExperimentConfig {
  std::uint64_t master_seed = 1;

  // world
  int d = 8;
  int K = 10;
  int l = 32;
  double sigma = 0.35;
  double mean_scale = 3.0;
  double b_scale = 1.0;
  std::uint32_t n_aux = 2000;
  std::uint32_t n_priv = 500;
  double aux_flip_prob = 0.05;
  std::uint32_t gt_samples_per_class = 2000;

  // estimation
  int kmeans_max_iters = 50;
  KMeansInit kmeans_init = KMeansInit::kpp;
  SliceConfig slice;

  // diffusion
  int T = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double omega = 4.0;
  int checkpoint_N = 20;

  // surrogates
  int surrogate_count = 3;
  int surrogate_epochs = 300;
  double surrogate_lr = 2.0;

  // attack
  AttackConfig attack;

  void validate() const;
};

ExperimentConfig default_config();
nlohmann::json config_to_json(const ExperimentConfig& cfg);
// Rejects unknown keys and wrong shapes with config errors.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

// Apply one "path.to.key=value" override onto a config json in place.
// The key must already exist; the value keeps its JSON type class.
void apply_override(nlohmann::json& cfg, const std::string& assignment);

// FNV-1a over the canonical (key-sorted) dump, as 16 hex digits.
std::string config_digest(const ExperimentConfig& cfg);

void write_text_atomic(const std::string& path, const std::string& content);
void write_json_atomic(const std::string& path, const nlohmann::json& j);
std::string read_text(const std::string& path);

// Feature matrix CSV (header x0..x{d-1}, %.17g values — exact round trip).
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& X);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

// Commands. Each writes its artifacts under dir and returns the report json.
nlohmann::json cmd_gen(const ExperimentConfig& cfg, const std::string& dir);
nlohmann::json cmd_estimate(const ExperimentConfig& cfg, const std::string& dir);
nlohmann::json cmd_attack(const ExperimentConfig& cfg, const std::string& dir);
nlohmann::json cmd_sweep(const ExperimentConfig& cfg, const std::string& param,
                         const std::vector<std::string>& values, const std::string& dir);
nlohmann::json cmd_report(const std::vector<std::string>& run_dirs, const std::string& dir);

// Exit-code mapping used by the CLI: 2 validation/config, 3 io, 4 internal.
int exit_code_for(const std::exception& e);

}  // namespace hashinv
