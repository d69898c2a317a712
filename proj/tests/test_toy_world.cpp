#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "hashinv/centers.hpp"
#include "hashinv/errors.hpp"
#include "hashinv/rng.hpp"
#include "hashinv/toy_world.hpp"

using namespace hashinv;

namespace {

MixtureSpec two_component_spec(double sigma, double weight0 = 0.5) {
  MixtureSpec s;
  s.d = 2;
  s.K = 2;
  s.means = Eigen::MatrixXd(2, 2);
  s.means << 3.0, 0.0, -3.0, 0.0;
  s.sigma = sigma;
  s.weights = Eigen::Vector2d(weight0, 1.0 - weight0);
  return s;
}

}  // namespace

TEST_CASE("mixture spec validation") {
  MixtureSpec s = two_component_spec(0.5);
  CHECK_NOTHROW(s.validate());
  s.weights = Eigen::Vector2d(0.6, 0.6);
  CHECK_THROWS_AS(s.validate(), config_error);
  s = two_component_spec(0.5);
  s.weights(0) = -0.1;
  s.weights(1) = 1.1;
  CHECK_THROWS_AS(s.validate(), config_error);
  s = two_component_spec(-1.0);
  CHECK_THROWS_AS(s.validate(), config_error);
  s = two_component_spec(0.5);
  s.means = Eigen::MatrixXd(3, 2);
  CHECK_THROWS_AS(s.validate(), dimension_error);
}

TEST_CASE("mixture sampling is deterministic and concentrates at tiny sigma") {
  const MixtureSpec s = two_component_spec(1e-9);
  const MixtureSample a = sample_mixture(s, 500, 42);
  const MixtureSample b = sample_mixture(s, 500, 42);
  CHECK(a.X == b.X);
  CHECK(a.labels == b.labels);
  for (int i = 0; i < 500; ++i)
    CHECK((a.X.row(i) - s.means.row(a.labels[i])).norm() < 1e-6);

  // Pinned component.
  const MixtureSample c = sample_mixture(s, 100, 43, 1);
  for (int i = 0; i < 100; ++i) CHECK(c.labels[i] == 1);
  CHECK_THROWS_AS(sample_mixture(s, 10, 1, 2), input_error);
  CHECK_THROWS_AS(sample_mixture(s, 10, 1, -1), input_error);
}

TEST_CASE("component frequencies follow the weights") {
  const MixtureSpec s = two_component_spec(0.5, 0.3);
  const MixtureSample a = sample_mixture(s, 100000, 7);
  double f0 = 0;
  for (int y : a.labels) f0 += (y == 0);
  f0 /= a.labels.size();
  CHECK(f0 == doctest::Approx(0.3).epsilon(0.035));

  // Sample moments around the drawn component means.
  Eigen::Vector2d m = Eigen::Vector2d::Zero();
  for (int i = 0; i < 100000; ++i)
    m += (a.X.row(i) - s.means.row(a.labels[i])).transpose();
  m /= 100000.0;
  CHECK(std::abs(m(0)) < 0.01);
  CHECK(std::abs(m(1)) < 0.01);
}

TEST_CASE("oracle signs, tie convention, and query counting") {
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd b = Eigen::Vector3d(0.0, -1.0, 1.0);
  const HashOracle oracle(W, b);
  CHECK(oracle.bits() == 3);
  CHECK(oracle.dim() == 3);

  // x = 0: z = (0, -1, 1) -> signs (+, -, +); z = 0 counts as +.
  const BitCode c = oracle.hash(Eigen::Vector3d::Zero());
  CHECK(code_to_string(c) == "+-+");
  CHECK(oracle.queries() == 1);

  Eigen::MatrixXd X(50, 3);
  X.setRandom();
  const CodeMatrix batch = oracle.hash_batch(X);
  CHECK(batch.rows() == 50);
  CHECK(oracle.queries() == 51);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd z = W * X.row(i).transpose() + b;
    for (int j = 0; j < 3; ++j) CHECK(batch.get_bit(i, j) == (z(j) >= 0.0));
  }

  // Copies share the counter.
  const HashOracle copy = oracle;
  copy.hash(Eigen::Vector3d::Ones());
  CHECK(oracle.queries() == 52);  // 2 singles + one batch of 50
  oracle.reset_queries();
  CHECK(copy.queries() == 0);

  CHECK_THROWS_AS(oracle.hash(Eigen::Vector2d::Zero()), dimension_error);
}

TEST_CASE("query counter is exact under concurrent hashing") {
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(4, 4);
  const HashOracle oracle(W, Eigen::VectorXd::Zero(4));
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&oracle, t] {
      for (int i = 0; i < 500; ++i)
        oracle.hash(Eigen::Vector4d::Constant(static_cast<double>(t + i)));
    });
  for (auto& th : pool) th.join();
  CHECK(oracle.queries() == 2000);
}

TEST_CASE("ground-truth centers at vanishing noise hash the means") {
  const MixtureSpec s = two_component_spec(1e-9);
  Eigen::MatrixXd W(4, 2);
  W << 1, 0, 0, 1, -1, 0, 1, 1;
  const HashOracle oracle(W, Eigen::VectorXd::Zero(4));
  const CodeMatrix gt = ground_truth_centers(oracle, s, 200, 5);
  for (int k = 0; k < 2; ++k)
    CHECK(gt.get(k) == oracle.hash(s.means.row(k).transpose()));
}

TEST_CASE("ground-truth centers are the per-bit majority code") {
  // The majority code minimizes the summed hamming distance to the hashed
  // sample cloud; verify against 1000 random challengers.
  const MixtureSpec s = two_component_spec(0.8);
  Eigen::MatrixXd W(6, 2);
  W.setRandom();
  const HashOracle oracle(W, Eigen::VectorXd::Zero(6));
  const std::uint32_t n = 400;
  const std::uint64_t seed = 11;
  const CodeMatrix gt = ground_truth_centers(oracle, s, n, seed);

  // Rebuild the same hashed cloud (same stream layout as the implementation).
  for (int k = 0; k < 2; ++k) {
    const MixtureSample cloud =
        sample_mixture(s, n, rng::mix(rng::stream(seed, "gt"), k), k);
    const CodeMatrix codes = oracle.hash_batch(cloud.X);
    auto total = [&](const BitCode& c) {
      std::uint64_t t = 0;
      for (std::uint32_t i = 0; i < codes.rows(); ++i)
        t += hamming_distance(c, codes.get(i));
      return t;
    };
    const std::uint64_t gt_total = total(gt.get(k));
    for (int rep = 0; rep < 1000; ++rep) {
      BitCode rival(6);
      for (std::uint32_t j = 0; j < 6; ++j)
        rival.set(j, rng::bits_at(rng::mix(999, rep), j) & 1ull);
      REQUIRE(gt_total <= total(rival));
    }
  }

  // Two distinct seeds agree at this sample size (the majority is stable).
  const MixtureSpec stable = two_component_spec(0.5);
  Eigen::MatrixXd W2(8, 2);
  W2.setRandom();
  const HashOracle o2(W2, Eigen::VectorXd::Zero(8));
  CHECK(ground_truth_centers(o2, stable, 10000, 1) ==
        ground_truth_centers(o2, stable, 10000, 2));
}

TEST_CASE("flip channel rates and determinism") {
  const CodeMatrix clean = random_codes(2000, 64, 3);
  CHECK(flip_bits(clean, 0.0, 5) == clean);
  const CodeMatrix noisy = flip_bits(clean, 0.2, 5);
  CHECK(noisy == flip_bits(clean, 0.2, 5));
  std::uint64_t flips = 0;
  for (std::uint32_t i = 0; i < 2000; ++i) flips += row_distance(clean, i, noisy, i);
  CHECK(static_cast<double>(flips) / (2000 * 64) == doctest::Approx(0.2).epsilon(0.03));
  CHECK_THROWS_AS(flip_bits(clean, 1.0, 5), input_error);
  CHECK_THROWS_AS(flip_bits(clean, -0.1, 5), input_error);
}

TEST_CASE("augmentation distributions and bounds") {
  AugmentationSpec spec;
  spec.M = 5;
  spec.noise_sigma = 0.0;
  spec.mask_prob = 0.0;
  spec.seed = 1;
  const Eigen::VectorXd x = Eigen::Vector4d(1, -2, 3, -4);
  CHECK((augment(x, spec, 1) - x).norm() == 0.0);  // identity at zero knobs
  CHECK_THROWS_AS(augment(x, spec, 0), input_error);
  CHECK_THROWS_AS(augment(x, spec, 6), input_error);

  spec.noise_sigma = 0.15;
  spec.mask_prob = 0.3;
  CHECK(augment(x, spec, 2) == augment(x, spec, 2));
  CHECK((augment(x, spec, 2) - augment(x, spec, 3)).norm() > 0.0);

  // Statistics over many variants: noise std and mask rate.
  AugmentationSpec big;
  big.M = 100000;
  big.noise_sigma = 0.15;
  big.mask_prob = 0.3;
  big.seed = 2;
  const Eigen::VectorXd base = Eigen::Vector4d::Constant(10.0);
  double masked = 0, dev = 0;
  std::uint64_t kept = 0;
  for (int t = 1; t <= big.M; ++t) {
    const Eigen::VectorXd v = augment(base, big, t);
    for (int i = 0; i < 4; ++i) {
      if (v(i) == 0.0) {
        masked += 1;
      } else {
        dev += (v(i) - 10.0) * (v(i) - 10.0);
        ++kept;
      }
    }
  }
  CHECK(masked / (4.0 * big.M) == doctest::Approx(0.3).epsilon(0.02));
  CHECK(std::sqrt(dev / kept) == doctest::Approx(0.15).epsilon(0.02));
  CHECK_THROWS_AS([] { AugmentationSpec s; s.M = 0; s.validate(); }(), config_error);
}

TEST_CASE("predictor closed form for a single gaussian") {
  // K=1, mu, sigma=1: eps_hat = (x - sqrt(ab)*mu) * sqrt(1-ab) / (ab*s2 +
  // ... ) — with sigma^2 = 1, s2 = ab + (1-ab) = 1, E[x0|xt] = mu +
  // sqrt(ab)(x - sqrt(ab) mu), eps = (x - sqrt(ab) E[x0]) / sqrt(1-ab)
  //     = (x(1-ab) - sqrt(ab)(1-ab) mu) / ((1) sqrt(1-ab)) = sqrt(1-ab)(x -
  //     sqrt(ab) mu).
  MixtureSpec s;
  s.d = 3;
  s.K = 1;
  s.means = Eigen::MatrixXd(1, 3);
  s.means << 1.0, -2.0, 0.5;
  s.sigma = 1.0;
  s.weights = Eigen::VectorXd::Ones(1);
  const DiffusionSchedule sched = build_schedule(50, 1e-4, 0.02);
  const MixturePredictor pred(s, sched);
  const Eigen::VectorXd mu = s.means.row(0).transpose();
  for (int t : {1, 10, 50}) {
    const double ab = sched.alpha_bar[t - 1];
    const Eigen::VectorXd x = Eigen::Vector3d(0.3, 0.1, -0.7);
    const Eigen::VectorXd expect = std::sqrt(1.0 - ab) * (x - std::sqrt(ab) * mu);
    CHECK((pred.epsilon(x, t, 0) - expect).norm() < 1e-12);
    CHECK((pred.epsilon(x, t, std::nullopt) - expect).norm() < 1e-12);  // K=1: same
  }
}

TEST_CASE("predictor is exact at the noised mean") {
  // At x_t = sqrt(ab) * mu_k the conditional posterior mean of x0 is mu_k, so
  // the predicted noise must vanish.
  const MixtureSpec s = two_component_spec(0.6);
  const DiffusionSchedule sched = build_schedule(100, 1e-4, 0.02);
  const MixturePredictor pred(s, sched);
  for (int k = 0; k < 2; ++k) {
    for (int t : {1, 25, 100}) {
      const double ab = sched.alpha_bar[t - 1];
      const Eigen::VectorXd xt = std::sqrt(ab) * s.means.row(k).transpose();
      CHECK(pred.epsilon(xt, t, k).norm() < 1e-12);
    }
  }
}

TEST_CASE("responsibilities form a simplex and favor the nearby component") {
  const MixtureSpec s = two_component_spec(0.6, 0.4);
  const DiffusionSchedule sched = build_schedule(100, 1e-4, 0.02);
  const MixturePredictor pred(s, sched);
  const auto key = rng::stream(6, "resp");
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::Vector2d x(5.0 * (rng::uniform_at(key, 2 * rep) - 0.5),
                      5.0 * (rng::uniform_at(key, 2 * rep + 1) - 0.5));
    for (int t : {1, 50, 100}) {
      const Eigen::VectorXd r = pred.responsibilities(x, t);
      REQUIRE(r.size() == 2);
      REQUIRE(r.minCoeff() >= 0.0);
      REQUIRE(std::abs(r.sum() - 1.0) < 1e-12);
    }
  }
  // Deep inside component 0's basin at small t.
  const Eigen::VectorXd near0 =
      std::sqrt(sched.alpha_bar[0]) * s.means.row(0).transpose();
  CHECK(pred.responsibilities(near0, 1)(0) > 0.999);

  CHECK_THROWS_AS(pred.epsilon(Eigen::Vector2d::Zero(), 0, std::nullopt), input_error);
  CHECK_THROWS_AS(pred.epsilon(Eigen::Vector2d::Zero(), 101, std::nullopt), input_error);
  CHECK_THROWS_AS(pred.epsilon(Eigen::Vector3d::Zero(), 1, std::nullopt), dimension_error);
  CHECK_THROWS_AS(pred.epsilon(Eigen::Vector2d::Zero(), 1, 7), input_error);
}

TEST_CASE("world generation shapes and serialization round trip") {
  WorldConfig wc;
  wc.seed = 123;
  wc.d = 5;
  wc.K = 4;
  wc.l = 17;
  const World w = make_gaussian_world(wc);
  CHECK(w.spec.means.rows() == 4);
  CHECK(w.spec.means.cols() == 5);
  CHECK(w.oracle.bits() == 17);
  CHECK(w.oracle.dim() == 5);
  CHECK(std::abs(w.spec.weights.sum() - 1.0) < 1e-12);

  // Same seed, same world; different seed, different world.
  const World w2 = make_gaussian_world(wc);
  CHECK(w.spec.means == w2.spec.means);
  CHECK(w.oracle.W() == w2.oracle.W());
  wc.seed = 124;
  CHECK(make_gaussian_world(wc).spec.means != w.spec.means);

  nlohmann::json j = world_to_json(w);
  j["config_digest"] = "0";  // extra keys from reports must be tolerated
  const World r = world_from_json(j);
  CHECK(r.spec.means == w.spec.means);
  CHECK(r.spec.weights == w.spec.weights);
  CHECK(r.oracle.W() == w.oracle.W());
  CHECK(r.oracle.b() == w.oracle.b());
  CHECK(r.spec.sigma == w.spec.sigma);
  CHECK_THROWS_AS(world_from_json(nlohmann::json{{"d", 3}}), parse_error);

  // mean_scale scales the means linearly.
  WorldConfig half = wc;
  half.seed = 123;
  half.mean_scale = 1.5;
  WorldConfig full = half;
  full.mean_scale = 3.0;
  CHECK((make_gaussian_world(full).spec.means - 2.0 * make_gaussian_world(half).spec.means)
            .norm() < 1e-12);
}

TEST_CASE("probe world geometry") {
  ProbeConfig pc;
  const ProbeWorld pw = make_two_class_probe(pc);
  const World& w = pw.world;
  CHECK(w.spec.K == 2);
  CHECK(std::abs(pw.axis.norm() - 1.0) < 1e-12);
  // Means sit symmetrically on the axis with the configured gap.
  const double gap = pc.gap_sigmas * pc.sigma;
  CHECK((w.spec.means.row(0).transpose() - 0.5 * gap * pw.axis).norm() < 1e-12);
  CHECK((w.spec.means.row(1).transpose() + 0.5 * gap * pw.axis).norm() < 1e-12);

  // Separator rows: zero offset, positive projection on the axis.
  for (int j = 0; j < pc.n_sep; ++j) {
    CHECK(w.oracle.b()(j) == 0.0);
    CHECK(w.oracle.W().row(j).dot(pw.axis) > 0.99);
  }
  // Decisive rows never flip across both means plus 3 sigma of slack.
  for (int j = pc.n_sep; j < pc.l; ++j) {
    const Eigen::VectorXd wr = w.oracle.W().row(j).transpose();
    const double margin0 = wr.dot(w.spec.means.row(0).transpose()) + w.oracle.b()(j);
    const double margin1 = wr.dot(w.spec.means.row(1).transpose()) + w.oracle.b()(j);
    CHECK(margin0 > 3.0 * pc.sigma * wr.norm());
    CHECK(margin1 > 3.0 * pc.sigma * wr.norm());
  }
  // The two class codes differ exactly on the separator rows at tiny sigma.
  const BitCode h0 = w.oracle.hash(w.spec.means.row(0).transpose());
  const BitCode h1 = w.oracle.hash(w.spec.means.row(1).transpose());
  CHECK(hamming_distance(h0, h1) == static_cast<std::uint32_t>(pc.n_sep));
}
