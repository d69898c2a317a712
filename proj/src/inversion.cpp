#include "hashinv/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hashinv/errors.hpp"
#include "hashinv/parallel.hpp"

namespace hashinv {

void AttackConfig::validate() const {
  if (n < 1) throw config_error("AttackConfig: n must be >= 1");
  if (k < 1 || k > n) throw config_error("AttackConfig: need 1 <= k <= n");
  if (iterations < 0) throw config_error("AttackConfig: iterations must be >= 0");
  if (!(lr > 0.0)) throw config_error("AttackConfig: lr must be > 0");
  if (w_base < 0.0) throw config_error("AttackConfig: w_base must be >= 0");
  if (w_hamming < 0.0) throw config_error("AttackConfig: w_hamming must be >= 0");
  if (M < 1) throw config_error("AttackConfig: M must be >= 1");
  if (noise_sigma < 0.0) throw config_error("AttackConfig: noise_sigma must be >= 0");
  if (mask_prob < 0.0 || mask_prob >= 1.0)
    throw config_error("AttackConfig: mask_prob must be in [0,1)");
}

double hamming_weight(std::uint32_t dis, std::uint32_t l, double w) {
  if (l < 1) throw input_error("hamming_weight: l must be >= 1");
  if (dis > l) throw input_error("hamming_weight: dis exceeds code length");
  if (w < 0.0) throw input_error("hamming_weight: w must be >= 0");
  return std::exp(-(static_cast<double>(dis) / static_cast<double>(l)) * w);
}

double attack_score_parts(double w_base, double d0, double delta0, int M,
                          const std::vector<std::pair<double, double>>& aug_parts) {
  if (static_cast<int>(aug_parts.size()) != M)
    throw input_error("attack_score_parts: need exactly M augmentation parts");
  const double base = w_base * d0 * static_cast<double>(M) * delta0;
  double num = base;
  for (const auto& [dt, deltat] : aug_parts) num += dt * deltat;
  const double den = base + static_cast<double>(M);
  return num / den;
}

ScoredCode attack_score(const Eigen::VectorXd& x0, const BitCode& target, int y,
                        const HashOracle& oracle, const CodeMatrix& centers,
                        const AugmentationSpec& aug, double w_base, double w_hamming) {
  const std::uint32_t l = oracle.bits();
  if (target.length != l) throw dimension_error("attack_score: target length mismatch");
  ScoredCode out;
  out.code = oracle.hash(x0);
  const double d0 = hamming_weight(hamming_distance(out.code, target), l, w_hamming);
  const double delta0 = classify_by_centers(out.code, centers) == y ? 1.0 : 0.0;
  std::vector<std::pair<double, double>> parts;
  parts.reserve(aug.M);
  for (int t = 1; t <= aug.M; ++t) {
    const BitCode ct = oracle.hash(augment(x0, aug, t));
    parts.emplace_back(hamming_weight(hamming_distance(ct, target), l, w_hamming),
                       classify_by_centers(ct, centers) == y ? 1.0 : 0.0);
  }
  out.score = attack_score_parts(w_base, d0, delta0, aug.M, parts);
  return out;
}

std::vector<int> select_topk(const std::vector<double>& scores, int k) {
  if (k < 0 || k > static_cast<int>(scores.size()))
    throw input_error("select_topk: k out of range");
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  order.resize(k);
  return order;
}

Candidate refine_candidate(Candidate cand, const BitCode& target, int y, int comp_label,
                           const SurrogateCluster& cluster, const NoisePredictor& pred,
                           const DiffusionSchedule& sched, const GuidanceConfig& guid,
                           const HashOracle& oracle, const CodeMatrix& centers,
                           const AttackConfig& cfg) {
  (void)comp_label;  // conditioning label is baked into the trace
  const std::uint64_t resume_base = rng::stream(cand.trace.noise_key, "resume");
  const std::uint64_t score_base = rng::stream(cand.trace.noise_key, "score");
  for (int j = 1; j <= cfg.iterations; ++j) {
    AdamState adam(cfg.lr);
    const StepHook hook = [&](Eigen::VectorXd& x, int) {
      adam_step(adam, x, surrogate_loss_grad(cluster, x, y));
    };
    const std::optional<std::uint64_t> noise =
        cfg.replay_noise ? std::nullopt
                         : std::optional<std::uint64_t>(rng::mix(resume_base, j));
    const Eigen::VectorXd x_new = resume_from(cand.trace, pred, sched, guid, hook, noise);
    AugmentationSpec aug{cfg.M, cfg.noise_sigma, cfg.mask_prob, rng::mix(score_base, j)};
    const ScoredCode sc =
        attack_score(x_new, target, y, oracle, centers, aug, cfg.w_base, cfg.w_hamming);
    const bool accepted = sc.score > cand.score;
    cand.history.emplace_back(sc.score, accepted);
    if (accepted) {
      cand.score = sc.score;
      cand.code = sc.code;
      cand.x0 = x_new;
    }
  }
  return cand;
}

TargetInversion invert_center(const BitCode& target, int y, int comp_label,
                              const SurrogateCluster& cluster, const NoisePredictor& pred,
                              const DiffusionSchedule& sched, const GuidanceConfig& guid,
                              const HashOracle& oracle, const CodeMatrix& centers,
                              const AttackConfig& cfg) {
  cfg.validate();
  const std::uint64_t start_queries = oracle.queries();
  TargetInversion out;
  out.target_index = y;

  const std::uint64_t pool_base = rng::mix(rng::stream(cfg.seed, "attack.pool"),
                                           static_cast<std::uint64_t>(y));
  std::vector<Candidate> pool(cfg.n);
  parallel_for(static_cast<std::size_t>(cfg.n), [&](std::size_t c) {
    const std::uint64_t trace_seed = rng::mix(pool_base, c);
    Candidate cand;
    cand.trace = sample(pred, comp_label, sched, guid, trace_seed);
    cand.x0 = cand.trace.x0;
    cand.pool_index = static_cast<int>(c);
    oracle.hash(cand.x0);  // pool membership hash
    AugmentationSpec aug{cfg.M, cfg.noise_sigma, cfg.mask_prob,
                         rng::mix(rng::stream(cand.trace.noise_key, "score"), 0)};
    const ScoredCode sc =
        attack_score(cand.x0, target, y, oracle, centers, aug, cfg.w_base, cfg.w_hamming);
    cand.score = sc.score;
    cand.initial_score = sc.score;
    cand.code = sc.code;
    cand.initial_code = sc.code;
    pool[c] = std::move(cand);
  });

  out.pool_scores.resize(cfg.n);
  for (int c = 0; c < cfg.n; ++c) out.pool_scores[c] = pool[c].score;
  const std::vector<int> top = select_topk(out.pool_scores, cfg.k);

  out.candidates.resize(cfg.k);
  parallel_for(static_cast<std::size_t>(cfg.k), [&](std::size_t i) {
    out.candidates[i] = refine_candidate(pool[top[i]], target, y, comp_label, cluster,
                                         pred, sched, guid, oracle, centers, cfg);
  });
  for (const auto& cand : out.candidates)
    for (const auto& [s, accepted] : cand.history)
      if (accepted) ++out.accepts;
  out.queries = oracle.queries() - start_queries;
  return out;
}

std::uint64_t attack_budget(const AttackConfig& cfg) {
  const auto m1 = static_cast<std::uint64_t>(cfg.M) + 1;
  return static_cast<std::uint64_t>(cfg.n) + static_cast<std::uint64_t>(cfg.n) * m1 +
         static_cast<std::uint64_t>(cfg.iterations) * static_cast<std::uint64_t>(cfg.k) * m1;
}

AttackMetrics evaluate_attack(const std::vector<TargetInversion>& results,
                              const CodeMatrix& targets) {
  AttackMetrics m;
  if (results.empty()) throw input_error("evaluate_attack: no results");
  std::size_t n_cands = 0;
  for (const auto& r : results) {
    const BitCode target = targets.get(static_cast<std::uint32_t>(r.target_index));
    bool any = false;
    double best = 0.0, best0 = 0.0;
    bool first = true;
    for (const auto& c : r.candidates) {
      ++n_cands;
      if (c.code == target) {
        m.candidate_match_rate += 1.0;
        any = true;
      }
      if (c.initial_code == target) m.initial_match_rate += 1.0;
      m.mean_hamming += hamming_distance(c.code, target);
      if (first || c.score > best) best = c.score;
      if (first || c.initial_score > best0) best0 = c.initial_score;
      first = false;
    }
    if (any) m.target_match_rate += 1.0;
    m.mean_best_score += best;
    m.mean_initial_best_score += best0;
    m.total_accepts += r.accepts;
  }
  if (n_cands == 0) throw input_error("evaluate_attack: results carry no candidates");
  m.candidate_match_rate /= static_cast<double>(n_cands);
  m.initial_match_rate /= static_cast<double>(n_cands);
  m.mean_hamming /= static_cast<double>(n_cands);
  m.target_match_rate /= static_cast<double>(results.size());
  m.mean_best_score /= static_cast<double>(results.size());
  m.mean_initial_best_score /= static_cast<double>(results.size());
  return m;
}

}  // namespace hashinv
