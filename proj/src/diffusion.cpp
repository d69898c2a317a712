#include "hashinv/diffusion.hpp"

#include <cmath>
#include <string>

#include "hashinv/errors.hpp"

namespace hashinv {

DiffusionSchedule build_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw config_error("build_schedule: T must be >= 1");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
    throw config_error("build_schedule: need 0 < beta_start <= beta_end < 1");
  DiffusionSchedule s;
  s.T = T;
  s.beta.resize(T);
  s.alpha.resize(T);
  s.alpha_bar.resize(T);
  double prod = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
    const double b = beta_start + (beta_end - beta_start) * frac;
    s.beta[t - 1] = b;
    s.alpha[t - 1] = 1.0 - b;
    prod *= 1.0 - b;
    s.alpha_bar[t - 1] = prod;
  }
  return s;
}

namespace {

void check_t(int t, const DiffusionSchedule& sched, const char* who) {
  if (t < 1 || t > sched.T)
    throw input_error(std::string(who) + ": t=" + std::to_string(t) +
                      " outside [1, " + std::to_string(sched.T) + "]");
}

}  // namespace

Eigen::VectorXd guided_epsilon(const NoisePredictor& pred, const Eigen::VectorXd& x,
                               int t, int label, double omega) {
  if (omega < 0.0) throw input_error("guided_epsilon: omega must be >= 0");
  const Eigen::VectorXd ec = pred.epsilon(x, t, label);
  if (omega == 0.0) return ec;
  const Eigen::VectorXd eu = pred.epsilon(x, t, std::nullopt);
  return (1.0 + omega) * ec - omega * eu;
}

Eigen::VectorXd denoise_step(const Eigen::VectorXd& x, int t, const Eigen::VectorXd& eps,
                             const DiffusionSchedule& sched, const Eigen::VectorXd& z) {
  check_t(t, sched, "denoise_step");
  if (eps.size() != x.size() || z.size() != x.size())
    throw dimension_error("denoise_step: shape mismatch");
  const double b = sched.beta[t - 1];
  const double a = sched.alpha[t - 1];
  const double ab = sched.alpha_bar[t - 1];
  return (x - (b / std::sqrt(1.0 - ab)) * eps) / std::sqrt(a) + std::sqrt(b) * z;
}

SampleTrace sample(const NoisePredictor& pred, int label, const DiffusionSchedule& sched,
                   const GuidanceConfig& guid, std::uint64_t seed) {
  if (guid.N < 1 || guid.N > sched.T)
    throw config_error("sample: checkpoint step N must be in [1, T]");
  const int d = pred.dim();
  SampleTrace trace;
  trace.label = label;
  trace.noise_key = rng::stream(seed, "trace");

  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i)
    x[i] = rng::normal_block(trace.noise_key, static_cast<std::uint64_t>(sched.T) + 1,
                             static_cast<std::uint64_t>(d), i);

  Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
  for (int t = sched.T; t >= 1; --t) {
    const Eigen::VectorXd eps = guided_epsilon(pred, x, t, label, guid.omega);
    if (t > 1) {
      for (int i = 0; i < d; ++i)
        z[i] = rng::normal_block(trace.noise_key, static_cast<std::uint64_t>(t),
                                 static_cast<std::uint64_t>(d), i);
    } else {
      z.setZero();
    }
    x = denoise_step(x, t, eps, sched, z);
    if (t == guid.N) {
      trace.checkpoint = x;
      trace.checkpoint_t = guid.N - 1;
    }
  }
  trace.x0 = x;
  return trace;
}

Eigen::VectorXd resume_from(const SampleTrace& trace, const NoisePredictor& pred,
                            const DiffusionSchedule& sched, const GuidanceConfig& guid,
                            const StepHook& hook,
                            std::optional<std::uint64_t> fresh_noise_key) {
  if (!trace.checkpoint.has_value())
    throw state_error("resume_from: trace has no checkpoint");
  const std::uint64_t key = fresh_noise_key.value_or(trace.noise_key);
  const int d = pred.dim();
  if (trace.checkpoint->size() != d)
    throw dimension_error("resume_from: checkpoint dimension mismatch");

  Eigen::VectorXd x = *trace.checkpoint;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
  for (int t = trace.checkpoint_t; t >= 1; --t) {
    const Eigen::VectorXd eps = guided_epsilon(pred, x, t, trace.label, guid.omega);
    if (t > 1) {
      for (int i = 0; i < d; ++i)
        z[i] = rng::normal_block(key, static_cast<std::uint64_t>(t),
                                 static_cast<std::uint64_t>(d), i);
    } else {
      z.setZero();
    }
    x = denoise_step(x, t, eps, sched, z);
    if (hook && t > 1) hook(x, t - 1);
  }
  return x;
}

}  // namespace hashinv
