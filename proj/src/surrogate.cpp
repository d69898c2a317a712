#include "hashinv/surrogate.hpp"

#include <cmath>
#include <limits>

#include "hashinv/errors.hpp"
#include "hashinv/rng.hpp"

namespace hashinv {

Eigen::VectorXd SoftmaxSurrogate::logits(const Eigen::VectorXd& x) const {
  if (x.size() != W.cols()) throw dimension_error("SoftmaxSurrogate: input dimension mismatch");
  return W * x + b;
}

Eigen::VectorXd SoftmaxSurrogate::predict_proba(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z = logits(x);
  const double m = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - m).exp();
  return e / e.sum();
}

SoftmaxSurrogate train_surrogate(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                 int K, int epochs, double lr, std::uint64_t seed) {
  const auto n = static_cast<int>(X.rows());
  const auto d = static_cast<int>(X.cols());
  if (K < 2) throw input_error("train_surrogate: K must be >= 2");
  if (n < 1) throw input_error("train_surrogate: empty training set");
  if (static_cast<int>(y.size()) != n)
    throw input_error("train_surrogate: label count mismatch");
  for (int i = 0; i < n; ++i)
    if (y[i] < 0 || y[i] >= K) throw input_error("train_surrogate: label out of range");
  if (epochs < 0) throw input_error("train_surrogate: epochs must be >= 0");
  if (!(lr > 0.0)) throw input_error("train_surrogate: lr must be > 0");

  SoftmaxSurrogate s;
  s.W.resize(K, d);
  const std::uint64_t key = rng::stream(seed, "surrogate.init");
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < d; ++j)
      s.W(k, j) = 0.01 * rng::normal_at(key, static_cast<std::uint64_t>(k) * d + j);
  s.b = Eigen::VectorXd::Zero(K);

  double loss_prev = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd P(n, K);
  for (int ep = 0; ep < epochs; ++ep) {
    Eigen::MatrixXd Z = X * s.W.transpose();
    Z.rowwise() += s.b.transpose();
    for (int i = 0; i < n; ++i) {
      const double m = Z.row(i).maxCoeff();
      Eigen::RowVectorXd e = (Z.row(i).array() - m).exp();
      P.row(i) = e / e.sum();
    }
    double loss = 0.0;
    for (int i = 0; i < n; ++i)
      loss -= std::log(std::max(P(i, y[i]), 1e-300));
    loss /= n;
    if (loss > loss_prev) lr *= 0.5;
    loss_prev = loss;

    Eigen::MatrixXd G = P;
    for (int i = 0; i < n; ++i) G(i, y[i]) -= 1.0;
    G /= static_cast<double>(n);
    s.W -= lr * (G.transpose() * X);
    s.b -= lr * G.colwise().sum().transpose();
  }
  return s;
}

double surrogate_loss(const SurrogateCluster& cluster, const Eigen::VectorXd& x, int y) {
  if (cluster.empty()) throw input_error("surrogate_loss: empty cluster");
  double total = 0.0;
  for (const auto& s : cluster) {
    if (y < 0 || y >= s.classes()) throw input_error("surrogate_loss: label out of range");
    Eigen::VectorXd z = s.logits(x);
    const double m = z.maxCoeff();
    total -= (z[y] - m) - std::log((z.array() - m).exp().sum());
  }
  return total / static_cast<double>(cluster.size());
}

Eigen::VectorXd surrogate_loss_grad(const SurrogateCluster& cluster,
                                    const Eigen::VectorXd& x, int y) {
  if (cluster.empty()) throw input_error("surrogate_loss_grad: empty cluster");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  for (const auto& s : cluster) {
    if (y < 0 || y >= s.classes()) throw input_error("surrogate_loss_grad: label out of range");
    Eigen::VectorXd p = s.predict_proba(x);
    p[y] -= 1.0;
    g += s.W.transpose() * p;
  }
  return g / static_cast<double>(cluster.size());
}

void adam_step(AdamState& state, Eigen::VectorXd& x, const Eigen::VectorXd& g) {
  if (g.size() != x.size()) throw dimension_error("adam_step: gradient shape mismatch");
  if (state.steps == 0) {
    state.m = Eigen::VectorXd::Zero(x.size());
    state.v = Eigen::VectorXd::Zero(x.size());
  } else if (state.m.size() != x.size()) {
    throw dimension_error("adam_step: state shape mismatch");
  }
  state.steps += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * g;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.steps));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.steps));
  const Eigen::VectorXd mh = state.m / bc1;
  const Eigen::VectorXd vh = state.v / bc2;
  x -= state.lr * (mh.array() / (vh.array().sqrt() + state.eps)).matrix();
}

}  // namespace hashinv
