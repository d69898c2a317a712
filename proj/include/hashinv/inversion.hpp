#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hashinv/bitcode.hpp"
#include "hashinv/centers.hpp"
#include "hashinv/diffusion.hpp"
#include "hashinv/surrogate.hpp"
#include "hashinv/toy_world.hpp"

// The attack loop: sample a guided candidate pool per target center, score
// candidates by augmentation-consistency against the oracle, then refine the
// top k by re-running the diffusion tail with surrogate-gradient steps,
// keeping a refined candidate only when its score strictly improves.

namespace hashinv {

struct AttackConfig {
  int n = 20;               // candidate pool size per target
  int k = 5;                // candidates kept for refinement
  int iterations = 6;       // refinement rounds per kept candidate
  double lr = 0.0015;       // Adam rate for the per-step gradient hook
  double w_base = 0.2;      // weight of the clean-code vote in the score
  double w_hamming = 5.0;   // distance decay rate
  int M = 50;               // augmented variants per scoring call
  double noise_sigma = 0.15;
  double mask_prob = 0.05;
  bool replay_noise = false;  // reuse the trace noise when resuming (default: fresh draws)
  std::uint64_t seed = 0;

  void validate() const;
};

// exp(-(dis/l) * w); dis must not exceed l.
double hamming_weight(std::uint32_t dis, std::uint32_t l, double w);

// Score formula on precomputed parts: num = w_base*d0*M*delta0 + sum_t dt*deltat,
// den = w_base*d0*M*delta0 + M. Each aug part is (d_t, delta_t).
double attack_score_parts(double w_base, double d0, double delta0, int M,
                          const std::vector<std::pair<double, double>>& aug_parts);

struct ScoredCode {
  double score = 0.0;
  BitCode code;  // the oracle code of the scored point
};

// Consistency score of x0 against target code `target` under pseudo-label y:
// hashes x0 and its M augmentations (exactly M+1 oracle queries).
ScoredCode attack_score(const Eigen::VectorXd& x0, const BitCode& target, int y,
                        const HashOracle& oracle, const CodeMatrix& centers,
                        const AugmentationSpec& aug, double w_base, double w_hamming);

// Indices of the k best scores; ties broken by lower index.
std::vector<int> select_topk(const std::vector<double>& scores, int k);

struct Candidate {
  Eigen::VectorXd x0;
  BitCode code;
  BitCode initial_code;
  double score = 0.0;
  double initial_score = 0.0;
  int pool_index = -1;
  SampleTrace trace;
  // One entry per refinement round: (proposed score, accepted).
  std::vector<std::pair<double, bool>> history;
};

// Runs cfg.iterations refinement rounds on one candidate. Each round resumes
// the trace from its checkpoint with fresh noise (unless replay_noise), with
// a per-step hook that takes one Adam step along the surrogate gradient for
// pseudo-label y; Adam state is fresh each round. A proposal replaces the
// incumbent only when its score is strictly higher.
Candidate refine_candidate(Candidate cand, const BitCode& target, int y, int comp_label,
                           const SurrogateCluster& cluster, const NoisePredictor& pred,
                           const DiffusionSchedule& sched, const GuidanceConfig& guid,
                           const HashOracle& oracle, const CodeMatrix& centers,
                           const AttackConfig& cfg);

struct TargetInversion {
  int target_index = -1;
  std::vector<Candidate> candidates;  // k refined candidates, pool order of selection
  std::vector<double> pool_scores;    // all n initial scores
  std::uint64_t queries = 0;          // oracle queries consumed by this target
  int accepts = 0;                    // refinement proposals accepted
};

// Full per-target attack. The diffusion is conditioned on comp_label while
// scoring/refinement use the pseudo-label y of the target center. Oracle cost
// is exactly n + n*(M+1) + iterations*k*(M+1).
TargetInversion invert_center(const BitCode& target, int y, int comp_label,
                              const SurrogateCluster& cluster, const NoisePredictor& pred,
                              const DiffusionSchedule& sched, const GuidanceConfig& guid,
                              const HashOracle& oracle, const CodeMatrix& centers,
                              const AttackConfig& cfg);

// Closed-form oracle budget of one invert_center call.
std::uint64_t attack_budget(const AttackConfig& cfg);

struct AttackMetrics {
  double candidate_match_rate = 0.0;  // refined candidates whose code equals the target
  double initial_match_rate = 0.0;    // same, before refinement
  double target_match_rate = 0.0;     // targets with at least one exact candidate
  double mean_best_score = 0.0;
  double mean_initial_best_score = 0.0;
  double mean_hamming = 0.0;          // refined candidate codes vs target
  int total_accepts = 0;
};

// Pure recomputation from stored candidates — calling it twice on the same
// results gives identical numbers.
AttackMetrics evaluate_attack(const std::vector<TargetInversion>& results,
                              const CodeMatrix& targets);

}  // namespace hashinv
