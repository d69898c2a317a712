#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hashinv/bitcode.hpp"
#include "hashinv/diffusion.hpp"

// The synthetic target: a Gaussian mixture with a linear sign-hash oracle on
// top. Everything about it is analytically tractable, which is what makes the
// end-to-end pipeline verifiable — the exact posterior denoiser below serves
// as the generative model, and hash centers have a computable ground truth.

namespace hashinv {

struct MixtureSpec {
  int d = 8;
  int K = 10;
  Eigen::MatrixXd means;    // K x d
  double sigma = 0.35;
  Eigen::VectorXd weights;  // simplex, length K

  void validate() const;
};

// sign(Wx + b) with sign(0) = +1. Every hash call bumps a query counter that
// is shared across copies (copies answer for the same oracle).
class HashOracle {
 public:
  HashOracle() = default;
  HashOracle(Eigen::MatrixXd W, Eigen::VectorXd b);

  BitCode hash(const Eigen::VectorXd& x) const;
  CodeMatrix hash_batch(const Eigen::MatrixXd& X) const;  // rows are inputs

  std::uint32_t bits() const { return static_cast<std::uint32_t>(W_.rows()); }
  int dim() const { return static_cast<int>(W_.cols()); }
  const Eigen::MatrixXd& W() const { return W_; }
  const Eigen::VectorXd& b() const { return b_; }

  std::uint64_t queries() const { return count_->load(); }
  void reset_queries() const { count_->store(0); }

 private:
  Eigen::MatrixXd W_;
  Eigen::VectorXd b_;
  std::shared_ptr<std::atomic<std::uint64_t>> count_ =
      std::make_shared<std::atomic<std::uint64_t>>(0);
};

struct World {
  MixtureSpec spec;
  HashOracle oracle;
};

struct WorldConfig {
  std::uint64_t seed = 1;
  int d = 8;
  int K = 10;
  int l = 32;
  double sigma = 0.35;
  double mean_scale = 3.0;
  double b_scale = 1.0;
};

// Means, W entries ~ N(0,1) (means scaled by mean_scale, bias by b_scale),
// uniform component weights.
World make_gaussian_world(const WorldConfig& cfg);

// Two symmetric components at ±(gap/2)·u for a unit vector u, with two kinds
// of hash planes: n_sep "separator" rows passing through the midpoint
// (b = 0, w = u + a fixed-length perpendicular component), whose margins all
// grow when a point moves along +u, and "decisive" rows offset by at least
// b_margin_sigmas·sigma·|w| beyond both means, which essentially never flip.
// Built for measuring the effect of guidance strength in isolation.
struct ProbeConfig {
  std::uint64_t seed = 7;
  int d = 8;
  int l = 32;
  int n_sep = 6;
  double sigma = 0.35;
  double gap_sigmas = 2.5;
  double b_margin_sigmas = 4.0;
  double perp = 0.75;
};

struct ProbeWorld {
  World world;
  Eigen::VectorXd axis;  // the unit vector u; component 0 sits at +(gap/2)*u
};

ProbeWorld make_two_class_probe(const ProbeConfig& cfg);

struct MixtureSample {
  Eigen::MatrixXd X;  // n x d
  std::vector<int> labels;
};

// n draws; `component` pins every draw to one component, otherwise components
// follow the mixture weights. Fully determined by (spec, n, seed, component).
MixtureSample sample_mixture(const MixtureSpec& spec, std::uint32_t n, std::uint64_t seed,
                             std::optional<int> component = std::nullopt);

// Per-component majority code over n_per_class hashed conditional samples
// (per-bit tie goes to +1).
CodeMatrix ground_truth_centers(const HashOracle& oracle, const MixtureSpec& spec,
                                std::uint32_t n_per_class, std::uint64_t seed);

// Symmetric per-bit flip channel applied to a code matrix.
CodeMatrix flip_bits(const CodeMatrix& codes, double flip_prob, std::uint64_t seed);

struct AugmentationSpec {
  int M = 50;                // number of augmented variants
  double noise_sigma = 0.15; // additive Gaussian scale
  double mask_prob = 0.05;   // independent per-coordinate zeroing
  std::uint64_t seed = 0;

  void validate() const;
};

// Variant t (1-based) of x: add noise, then zero masked coordinates.
// Deterministic in (spec, t); t out of [1, M] is an error.
Eigen::VectorXd augment(const Eigen::VectorXd& x, const AugmentationSpec& spec, int t);

// Exact posterior conditional E[eps | x_t, y] for the Gaussian mixture under
// the given schedule; the unconditional branch mixes components by their
// posterior responsibilities (log-sum-exp).
class MixturePredictor : public NoisePredictor {
 public:
  MixturePredictor(MixtureSpec spec, DiffusionSchedule sched);

  int dim() const override { return spec_.d; }
  Eigen::VectorXd epsilon(const Eigen::VectorXd& x, int t,
                          std::optional<int> label) const override;

  // Posterior component responsibilities at step t (sums to 1).
  Eigen::VectorXd responsibilities(const Eigen::VectorXd& x, int t) const;

 private:
  MixtureSpec spec_;
  DiffusionSchedule sched_;
};

nlohmann::json world_to_json(const World& w);
World world_from_json(const nlohmann::json& j);

}  // namespace hashinv
