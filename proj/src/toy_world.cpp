#include "hashinv/toy_world.hpp"

#include <cmath>
#include <string>

#include "hashinv/errors.hpp"

namespace hashinv {

void MixtureSpec::validate() const {
  if (d < 1) throw config_error("MixtureSpec: d must be >= 1");
  if (K < 1) throw config_error("MixtureSpec: K must be >= 1");
  if (means.rows() != K || means.cols() != d)
    throw dimension_error("MixtureSpec: means must be K x d");
  if (!(sigma > 0.0)) throw config_error("MixtureSpec: sigma must be > 0");
  if (weights.size() != K) throw dimension_error("MixtureSpec: weights must have K entries");
  double s = 0.0;
  for (int k = 0; k < K; ++k) {
    if (weights[k] < 0.0) throw config_error("MixtureSpec: weights must be nonnegative");
    s += weights[k];
  }
  if (std::abs(s - 1.0) > 1e-12)
    throw config_error("MixtureSpec: weights must sum to 1 (got " + std::to_string(s) + ")");
}

HashOracle::HashOracle(Eigen::MatrixXd W, Eigen::VectorXd b)
    : W_(std::move(W)), b_(std::move(b)) {
  if (W_.rows() != b_.size()) throw dimension_error("HashOracle: W rows must match b size");
  if (W_.rows() < 1) throw config_error("HashOracle: need at least one hash bit");
}

BitCode HashOracle::hash(const Eigen::VectorXd& x) const {
  if (x.size() != W_.cols()) throw dimension_error("HashOracle::hash: input dimension mismatch");
  count_->fetch_add(1, std::memory_order_relaxed);
  const Eigen::VectorXd z = W_ * x + b_;
  BitCode c(bits());
  for (std::uint32_t i = 0; i < c.length; ++i)
    if (z[i] >= 0.0) c.set(i, true);
  return c;
}

CodeMatrix HashOracle::hash_batch(const Eigen::MatrixXd& X) const {
  if (X.cols() != W_.cols())
    throw dimension_error("HashOracle::hash_batch: input dimension mismatch");
  CodeMatrix m(static_cast<std::uint32_t>(X.rows()), bits());
  count_->fetch_add(static_cast<std::uint64_t>(X.rows()), std::memory_order_relaxed);
  const Eigen::MatrixXd Z = X * W_.transpose();
  for (std::uint32_t i = 0; i < m.rows(); ++i)
    for (std::uint32_t j = 0; j < m.length(); ++j)
      if (Z(i, j) + b_[j] >= 0.0) m.set_bit(i, j, true);
  return m;
}

World make_gaussian_world(const WorldConfig& cfg) {
  if (cfg.l < 1) throw config_error("make_gaussian_world: l must be >= 1");
  World w;
  w.spec.d = cfg.d;
  w.spec.K = cfg.K;
  w.spec.sigma = cfg.sigma;
  w.spec.means.resize(cfg.K, cfg.d);
  const std::uint64_t km = rng::stream(cfg.seed, "world.means");
  for (int k = 0; k < cfg.K; ++k)
    for (int i = 0; i < cfg.d; ++i)
      w.spec.means(k, i) = cfg.mean_scale * rng::normal_at(km, static_cast<std::uint64_t>(k) * cfg.d + i);
  w.spec.weights = Eigen::VectorXd::Constant(cfg.K, 1.0 / cfg.K);
  w.spec.validate();

  Eigen::MatrixXd W(cfg.l, cfg.d);
  const std::uint64_t kw = rng::stream(cfg.seed, "world.w");
  for (int j = 0; j < cfg.l; ++j)
    for (int i = 0; i < cfg.d; ++i)
      W(j, i) = rng::normal_at(kw, static_cast<std::uint64_t>(j) * cfg.d + i);
  Eigen::VectorXd b(cfg.l);
  const std::uint64_t kb = rng::stream(cfg.seed, "world.b");
  for (int j = 0; j < cfg.l; ++j) b[j] = cfg.b_scale * rng::normal_at(kb, j);
  w.oracle = HashOracle(std::move(W), std::move(b));
  return w;
}

ProbeWorld make_two_class_probe(const ProbeConfig& cfg) {
  if (cfg.n_sep < 0 || cfg.n_sep > cfg.l)
    throw config_error("make_two_class_probe: n_sep must be in [0, l]");
  const std::uint64_t ku = rng::stream(cfg.seed, "probe.axis");
  Eigen::VectorXd u(cfg.d);
  for (int i = 0; i < cfg.d; ++i) u[i] = rng::normal_at(ku, i);
  u.normalize();

  const double gap = cfg.gap_sigmas * cfg.sigma;
  MixtureSpec spec;
  spec.d = cfg.d;
  spec.K = 2;
  spec.sigma = cfg.sigma;
  spec.means.resize(2, cfg.d);
  spec.means.row(0) = +0.5 * gap * u.transpose();
  spec.means.row(1) = -0.5 * gap * u.transpose();
  spec.weights = Eigen::VectorXd::Constant(2, 0.5);
  spec.validate();

  Eigen::MatrixXd W(cfg.l, cfg.d);
  const std::uint64_t kw = rng::stream(cfg.seed, "probe.w");
  for (int j = 0; j < cfg.l; ++j)
    for (int i = 0; i < cfg.d; ++i)
      W(j, i) = rng::normal_at(kw, static_cast<std::uint64_t>(j) * cfg.d + i);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(cfg.l);
  for (int j = 0; j < cfg.l; ++j) {
    if (j < cfg.n_sep) {
      // Separator: unit along-axis component plus a fixed-length
      // perpendicular part, so every separator margin moves with u.
      Eigen::VectorXd g = W.row(j).transpose();
      g -= g.dot(u) * u;
      const double gn = g.norm();
      if (gn < 1e-12) throw internal_error("make_two_class_probe: degenerate perp direction");
      W.row(j) = (u + cfg.perp * (g / gn) * std::sqrt(static_cast<double>(cfg.d - 1)) * 0.37)
                     .transpose();
    } else {
      // Decisive: offset the plane past both means by a wide margin.
      const double wn = W.row(j).norm();
      const double reach = std::max(std::abs(W.row(j).dot(spec.means.row(0))),
                                    std::abs(W.row(j).dot(spec.means.row(1))));
      b[j] = reach + cfg.b_margin_sigmas * cfg.sigma * wn;
    }
  }
  ProbeWorld out;
  out.world.spec = std::move(spec);
  out.world.oracle = HashOracle(std::move(W), std::move(b));
  out.axis = u;
  return out;
}

MixtureSample sample_mixture(const MixtureSpec& spec, std::uint32_t n, std::uint64_t seed,
                             std::optional<int> component) {
  spec.validate();
  if (component.has_value() && (*component < 0 || *component >= spec.K))
    throw input_error("sample_mixture: component out of range");
  MixtureSample out;
  out.X.resize(n, spec.d);
  out.labels.resize(n);
  const std::uint64_t base = rng::stream(seed, "mixture");
  for (std::uint32_t j = 0; j < n; ++j) {
    const std::uint64_t kj = rng::mix(base, j);
    int k;
    if (component.has_value()) {
      k = *component;
    } else {
      const double u = rng::uniform_at(rng::mix(kj, 0), 0);  // (0, 1]
      double cum = 0.0;
      k = spec.K - 1;
      for (int c = 0; c < spec.K; ++c) {
        cum += spec.weights[c];
        if (u <= cum) {
          k = c;
          break;
        }
      }
    }
    out.labels[j] = k;
    const std::uint64_t kn = rng::mix(kj, 1);
    for (int i = 0; i < spec.d; ++i)
      out.X(j, i) = spec.means(k, i) + spec.sigma * rng::normal_at(kn, i);
  }
  return out;
}

CodeMatrix ground_truth_centers(const HashOracle& oracle, const MixtureSpec& spec,
                                std::uint32_t n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw input_error("ground_truth_centers: n_per_class must be >= 1");
  CodeMatrix centers(spec.K, oracle.bits());
  for (int k = 0; k < spec.K; ++k) {
    const MixtureSample s =
        sample_mixture(spec, n_per_class, rng::mix(rng::stream(seed, "gt"), k), k);
    const CodeMatrix codes = oracle.hash_batch(s.X);
    for (std::uint32_t j = 0; j < centers.length(); ++j) {
      std::uint32_t ones = 0;
      for (std::uint32_t i = 0; i < codes.rows(); ++i)
        if (codes.get_bit(i, j)) ++ones;
      centers.set_bit(k, j, 2ull * ones >= n_per_class);  // tie -> +1
    }
  }
  return centers;
}

CodeMatrix flip_bits(const CodeMatrix& codes, double flip_prob, std::uint64_t seed) {
  if (flip_prob < 0.0 || flip_prob >= 1.0)
    throw input_error("flip_bits: flip_prob must be in [0,1)");
  CodeMatrix out = codes;
  if (flip_prob == 0.0) return out;
  const std::uint64_t key = rng::stream(seed, "flip");
  std::uint64_t ctr = 0;
  for (std::uint32_t i = 0; i < out.rows(); ++i)
    for (std::uint32_t j = 0; j < out.length(); ++j, ++ctr)
      if (rng::uniform_at(key, ctr) <= flip_prob)
        out.set_bit(i, j, !out.get_bit(i, j));
  return out;
}

void AugmentationSpec::validate() const {
  if (M < 1) throw config_error("AugmentationSpec: M must be >= 1");
  if (noise_sigma < 0.0) throw config_error("AugmentationSpec: noise_sigma must be >= 0");
  if (mask_prob < 0.0 || mask_prob >= 1.0)
    throw config_error("AugmentationSpec: mask_prob must be in [0,1)");
}

Eigen::VectorXd augment(const Eigen::VectorXd& x, const AugmentationSpec& spec, int t) {
  spec.validate();
  if (t < 1 || t > spec.M) throw input_error("augment: t must be in [1, M]");
  const std::uint64_t key = rng::mix(rng::stream(spec.seed, "aug"), static_cast<std::uint64_t>(t));
  const auto d = static_cast<std::uint64_t>(x.size());
  Eigen::VectorXd y(x.size());
  for (std::uint64_t i = 0; i < d; ++i)
    y[i] = x[i] + spec.noise_sigma * rng::normal_at(key, i);
  // Normals consume uniform counters [0, 2d); masks get [2d, 3d).
  for (std::uint64_t i = 0; i < d; ++i)
    if (rng::uniform_at(key, 2 * d + i) <= spec.mask_prob) y[i] = 0.0;
  return y;
}

MixturePredictor::MixturePredictor(MixtureSpec spec, DiffusionSchedule sched)
    : spec_(std::move(spec)), sched_(std::move(sched)) {
  spec_.validate();
  if (sched_.T < 1) throw config_error("MixturePredictor: empty schedule");
}

Eigen::VectorXd MixturePredictor::responsibilities(const Eigen::VectorXd& x, int t) const {
  if (t < 1 || t > sched_.T) throw input_error("MixturePredictor: t out of range");
  if (x.size() != spec_.d) throw dimension_error("MixturePredictor: x dimension mismatch");
  const double ab = sched_.alpha_bar[t - 1];
  const double s2 = ab * spec_.sigma * spec_.sigma + (1.0 - ab);
  const double sab = std::sqrt(ab);
  Eigen::VectorXd logw(spec_.K);
  for (int k = 0; k < spec_.K; ++k) {
    const double q = (x - sab * spec_.means.row(k).transpose()).squaredNorm();
    logw[k] = std::log(spec_.weights[k]) - 0.5 * q / s2;
  }
  const double m = logw.maxCoeff();
  Eigen::VectorXd g = (logw.array() - m).exp();
  g /= g.sum();
  return g;
}

Eigen::VectorXd MixturePredictor::epsilon(const Eigen::VectorXd& x, int t,
                                          std::optional<int> label) const {
  if (t < 1 || t > sched_.T) throw input_error("MixturePredictor: t out of range");
  if (x.size() != spec_.d) throw dimension_error("MixturePredictor: x dimension mismatch");
  if (label.has_value() && (*label < 0 || *label >= spec_.K))
    throw input_error("MixturePredictor: label out of range");
  const double ab = sched_.alpha_bar[t - 1];
  const double s2 = ab * spec_.sigma * spec_.sigma + (1.0 - ab);
  const double sab = std::sqrt(ab);
  const double shrink = sab * spec_.sigma * spec_.sigma / s2;

  Eigen::VectorXd e0(spec_.d);
  if (label.has_value()) {
    const Eigen::VectorXd mu = spec_.means.row(*label).transpose();
    e0 = mu + shrink * (x - sab * mu);
  } else {
    const Eigen::VectorXd g = responsibilities(x, t);
    e0.setZero();
    for (int k = 0; k < spec_.K; ++k) {
      const Eigen::VectorXd mu = spec_.means.row(k).transpose();
      e0 += g[k] * (mu + shrink * (x - sab * mu));
    }
  }
  return (x - sab * e0) / std::sqrt(1.0 - ab);
}

nlohmann::json world_to_json(const World& w) {
  auto mat = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  auto vec = [](const Eigen::VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
  };
  return nlohmann::json{{"d", w.spec.d},
                        {"K", w.spec.K},
                        {"l", w.oracle.bits()},
                        {"sigma", w.spec.sigma},
                        {"means", mat(w.spec.means)},
                        {"weights", vec(w.spec.weights)},
                        {"W", mat(w.oracle.W())},
                        {"b", vec(w.oracle.b())}};
}

World world_from_json(const nlohmann::json& j) {
  World w;
  try {
    w.spec.d = j.at("d").get<int>();
    w.spec.K = j.at("K").get<int>();
    w.spec.sigma = j.at("sigma").get<double>();
    const auto& means = j.at("means");
    w.spec.means.resize(w.spec.K, w.spec.d);
    for (int k = 0; k < w.spec.K; ++k)
      for (int i = 0; i < w.spec.d; ++i) w.spec.means(k, i) = means.at(k).at(i).get<double>();
    const auto& weights = j.at("weights");
    w.spec.weights.resize(w.spec.K);
    for (int k = 0; k < w.spec.K; ++k) w.spec.weights[k] = weights.at(k).get<double>();
    const int l = j.at("l").get<int>();
    Eigen::MatrixXd W(l, w.spec.d);
    const auto& wj = j.at("W");
    for (int r = 0; r < l; ++r)
      for (int i = 0; i < w.spec.d; ++i) W(r, i) = wj.at(r).at(i).get<double>();
    Eigen::VectorXd b(l);
    const auto& bj = j.at("b");
    for (int r = 0; r < l; ++r) b[r] = bj.at(r).get<double>();
    w.oracle = HashOracle(std::move(W), std::move(b));
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("world json: ") + e.what());
  }
  w.spec.validate();
  return w;
}

}  // namespace hashinv
