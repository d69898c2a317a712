#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "hashinv/rng.hpp"

// Reverse-process sampling with classifier-free guidance. Noise draws are
// position-addressed: the z injected at reverse step t lives at block t of the
// trace's noise key and the start state at block T+1, so a trace can be
// resumed (with the same or fresh noise) from its checkpoint without storing
// any random numbers.

namespace hashinv {

struct DiffusionSchedule {
  int T = 0;
  Eigen::VectorXd beta;       // index t-1 for step t in [1, T]
  Eigen::VectorXd alpha;      // 1 - beta
  Eigen::VectorXd alpha_bar;  // running product of alpha
};

// Linear beta ramp from beta_start to beta_end inclusive (constant when T=1).
DiffusionSchedule build_schedule(int T, double beta_start = 1e-4, double beta_end = 0.02);

struct NoisePredictor {
  virtual ~NoisePredictor() = default;
  virtual int dim() const = 0;
  // Predicted noise at step t (1-based); label empty = unconditional.
  virtual Eigen::VectorXd epsilon(const Eigen::VectorXd& x, int t,
                                  std::optional<int> label) const = 0;
};

struct GuidanceConfig {
  double omega = 4.0;  // guidance strength; 0 disables the unconditional branch
  int N = 20;          // checkpoint step: the state after the step at t=N is kept
};

// (1+omega)*eps(x,t,y) - omega*eps(x,t,unconditional); omega=0 never
// evaluates the unconditional branch.
Eigen::VectorXd guided_epsilon(const NoisePredictor& pred, const Eigen::VectorXd& x,
                               int t, int label, double omega);

// One reverse step: x_{t-1} = (x - beta_t/sqrt(1-abar_t) * eps)/sqrt(alpha_t)
//                           + sqrt(beta_t) * z.
Eigen::VectorXd denoise_step(const Eigen::VectorXd& x, int t, const Eigen::VectorXd& eps,
                             const DiffusionSchedule& sched, const Eigen::VectorXd& z);

struct SampleTrace {
  Eigen::VectorXd x0;
  std::optional<Eigen::VectorXd> checkpoint;  // state x_{N-1}
  int checkpoint_t = 0;                       // its state index, N-1
  int label = 0;
  std::uint64_t noise_key = 0;
};

// Full reverse run from x_T ~ N(0, I). The state after the step at t = N is
// checkpointed for later refinement runs.
SampleTrace sample(const NoisePredictor& pred, int label, const DiffusionSchedule& sched,
                   const GuidanceConfig& guid, std::uint64_t seed);

// Applied to each intermediate state x_{t-1} (t > 1) during a resumed run;
// receives the state's own index t-1. The final x_0 is never transformed.
using StepHook = std::function<void(Eigen::VectorXd& x, int t_state)>;

// Re-run the tail of a trace from its checkpoint. By default fresh noise keys
// must be supplied by the caller per resume; passing nothing replays the
// original noise (bit-exact reproduction when no hook is set).
Eigen::VectorXd resume_from(const SampleTrace& trace, const NoisePredictor& pred,
                            const DiffusionSchedule& sched, const GuidanceConfig& guid,
                            const StepHook& hook = nullptr,
                            std::optional<std::uint64_t> fresh_noise_key = std::nullopt);

}  // namespace hashinv
