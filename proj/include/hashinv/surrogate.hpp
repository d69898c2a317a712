#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

// Differentiable stand-ins for the hash oracle's class structure: softmax
// regressions trained on pseudo-labeled feature vectors. Their averaged
// cross-entropy gradient is what steers the refinement steps.

namespace hashinv {

struct SoftmaxSurrogate {
  Eigen::MatrixXd W;  // K x d
  Eigen::VectorXd b;  // K

  int classes() const { return static_cast<int>(W.rows()); }
  int dim() const { return static_cast<int>(W.cols()); }

  Eigen::VectorXd logits(const Eigen::VectorXd& x) const;
  Eigen::VectorXd predict_proba(const Eigen::VectorXd& x) const;
};

// Full-batch gradient descent on mean cross-entropy with a backtracking
// learning rate: whenever the loss increases relative to the previous epoch,
// the rate is halved (training still performs the update). Init: W entries
// 0.01 * N(0,1) from the seed, b = 0.
SoftmaxSurrogate train_surrogate(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                 int K, int epochs, double lr, std::uint64_t seed);

using SurrogateCluster = std::vector<SoftmaxSurrogate>;

// Mean cross-entropy of label y across cluster members (log-sum-exp form).
double surrogate_loss(const SurrogateCluster& cluster, const Eigen::VectorXd& x, int y);

// d(surrogate_loss)/dx = (1/m) sum_j W_j^T (softmax_j(x) - onehot_y).
Eigen::VectorXd surrogate_loss_grad(const SurrogateCluster& cluster,
                                    const Eigen::VectorXd& x, int y);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Eigen::VectorXd m;  // sized on first step
  Eigen::VectorXd v;
  long steps = 0;

  explicit AdamState(double rate) : lr(rate) {}
};

// One bias-corrected Adam update of x in place.
void adam_step(AdamState& state, Eigen::VectorXd& x, const Eigen::VectorXd& g);

}  // namespace hashinv
