#include "hashinv/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hashinv/alignment.hpp"
#include "hashinv/errors.hpp"

namespace fs = std::filesystem;

namespace hashinv {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void expect_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                 const std::string& where) {
  if (!j.is_object()) throw config_error(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k))
      throw config_error("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void maybe_get(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw config_error(std::string("bad value type for '") + key + "'");
    }
  }
}

int classify_purity_count(const CodeMatrix& codes, const std::vector<int>& labels,
                          const CodeMatrix& centers) {
  int hits = 0;
  for (std::uint32_t i = 0; i < codes.rows(); ++i)
    if (classify_by_centers(codes.get(i), centers) == labels[i]) ++hits;
  return hits;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (d < 1) throw config_error("world.d must be >= 1");
  if (K < 1) throw config_error("world.K must be >= 1");
  if (l < 1) throw config_error("world.l must be >= 1");
  if (!(sigma > 0.0)) throw config_error("world.sigma must be > 0");
  if (n_aux < 1) throw config_error("world.n_aux must be >= 1");
  if (n_priv < 1) throw config_error("world.n_priv must be >= 1");
  if (aux_flip_prob < 0.0 || aux_flip_prob >= 1.0)
    throw config_error("world.aux_flip_prob must be in [0,1)");
  if (gt_samples_per_class < 1)
    throw config_error("world.gt_samples_per_class must be >= 1");
  if (static_cast<std::uint32_t>(K) > n_aux)
    throw config_error("world.K exceeds world.n_aux");
  if (kmeans_max_iters < 1) throw config_error("estimation.max_iters must be >= 1");
  if (slice.s_base < 1) throw config_error("estimation.s_base must be >= 1");
  if (slice.o < 0.0 || slice.o >= 1.0) throw config_error("estimation.o must be in [0,1)");
  if (slice.r <= 0.0 || slice.r > 1.0) throw config_error("estimation.r must be in (0,1]");
  if (T < 1) throw config_error("diffusion.T must be >= 1");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
    throw config_error("diffusion betas need 0 < beta_start <= beta_end < 1");
  if (omega < 0.0) throw config_error("diffusion.omega must be >= 0");
  if (checkpoint_N < 1 || checkpoint_N > T)
    throw config_error("diffusion.N must be in [1, T]");
  if (surrogate_count < 1) throw config_error("surrogates.m must be >= 1");
  if (surrogate_epochs < 0) throw config_error("surrogates.epochs must be >= 0");
  if (!(surrogate_lr > 0.0)) throw config_error("surrogates.lr must be > 0");
  attack.validate();
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

nlohmann::json config_to_json(const ExperimentConfig& c) {
  return nlohmann::json{
      {"master_seed", c.master_seed},
      {"world",
       {{"d", c.d},
        {"K", c.K},
        {"l", c.l},
        {"sigma", c.sigma},
        {"mean_scale", c.mean_scale},
        {"b_scale", c.b_scale},
        {"n_aux", c.n_aux},
        {"n_priv", c.n_priv},
        {"aux_flip_prob", c.aux_flip_prob},
        {"gt_samples_per_class", c.gt_samples_per_class}}},
      {"estimation",
       {{"max_iters", c.kmeans_max_iters},
        {"init", c.kmeans_init == KMeansInit::kpp ? "kmeans++" : "random-rows"},
        {"s_base", c.slice.s_base},
        {"r", c.slice.r},
        {"o", c.slice.o}}},
      {"diffusion",
       {{"T", c.T},
        {"beta_start", c.beta_start},
        {"beta_end", c.beta_end},
        {"omega", c.omega},
        {"N", c.checkpoint_N}}},
      {"surrogates",
       {{"m", c.surrogate_count}, {"epochs", c.surrogate_epochs}, {"lr", c.surrogate_lr}}},
      {"attack",
       {{"n", c.attack.n},
        {"k", c.attack.k},
        {"iterations", c.attack.iterations},
        {"M", c.attack.M},
        {"lr", c.attack.lr},
        {"w_base", c.attack.w_base},
        {"w_hamming", c.attack.w_hamming},
        {"noise_sigma", c.attack.noise_sigma},
        {"mask_prob", c.attack.mask_prob},
        {"replay_noise", c.attack.replay_noise}}}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  expect_keys(j, {"master_seed", "world", "estimation", "diffusion", "surrogates", "attack"},
              "top level");
  ExperimentConfig c;
  maybe_get(j, "master_seed", c.master_seed);
  if (j.contains("world")) {
    const auto& w = j.at("world");
    expect_keys(w,
                {"d", "K", "l", "sigma", "mean_scale", "b_scale", "n_aux", "n_priv",
                 "aux_flip_prob", "gt_samples_per_class"},
                "world");
    maybe_get(w, "d", c.d);
    maybe_get(w, "K", c.K);
    maybe_get(w, "l", c.l);
    maybe_get(w, "sigma", c.sigma);
    maybe_get(w, "mean_scale", c.mean_scale);
    maybe_get(w, "b_scale", c.b_scale);
    maybe_get(w, "n_aux", c.n_aux);
    maybe_get(w, "n_priv", c.n_priv);
    maybe_get(w, "aux_flip_prob", c.aux_flip_prob);
    maybe_get(w, "gt_samples_per_class", c.gt_samples_per_class);
  }
  if (j.contains("estimation")) {
    const auto& e = j.at("estimation");
    expect_keys(e, {"max_iters", "init", "s_base", "r", "o"}, "estimation");
    maybe_get(e, "max_iters", c.kmeans_max_iters);
    if (e.contains("init")) {
      const std::string init = e.at("init").get<std::string>();
      if (init == "kmeans++")
        c.kmeans_init = KMeansInit::kpp;
      else if (init == "random-rows")
        c.kmeans_init = KMeansInit::random_rows;
      else
        throw config_error("estimation.init must be 'kmeans++' or 'random-rows'");
    }
    maybe_get(e, "s_base", c.slice.s_base);
    maybe_get(e, "r", c.slice.r);
    maybe_get(e, "o", c.slice.o);
  }
  if (j.contains("diffusion")) {
    const auto& d = j.at("diffusion");
    expect_keys(d, {"T", "beta_start", "beta_end", "omega", "N"}, "diffusion");
    maybe_get(d, "T", c.T);
    maybe_get(d, "beta_start", c.beta_start);
    maybe_get(d, "beta_end", c.beta_end);
    maybe_get(d, "omega", c.omega);
    maybe_get(d, "N", c.checkpoint_N);
  }
  if (j.contains("surrogates")) {
    const auto& s = j.at("surrogates");
    expect_keys(s, {"m", "epochs", "lr"}, "surrogates");
    maybe_get(s, "m", c.surrogate_count);
    maybe_get(s, "epochs", c.surrogate_epochs);
    maybe_get(s, "lr", c.surrogate_lr);
  }
  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    expect_keys(a,
                {"n", "k", "iterations", "M", "lr", "w_base", "w_hamming", "noise_sigma",
                 "mask_prob", "replay_noise"},
                "attack");
    maybe_get(a, "n", c.attack.n);
    maybe_get(a, "k", c.attack.k);
    maybe_get(a, "iterations", c.attack.iterations);
    maybe_get(a, "M", c.attack.M);
    maybe_get(a, "lr", c.attack.lr);
    maybe_get(a, "w_base", c.attack.w_base);
    maybe_get(a, "w_hamming", c.attack.w_hamming);
    maybe_get(a, "noise_sigma", c.attack.noise_sigma);
    maybe_get(a, "mask_prob", c.attack.mask_prob);
    maybe_get(a, "replay_noise", c.attack.replay_noise);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_override(nlohmann::json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw config_error("override must look like path.to.key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  nlohmann::json* node = &cfg;
  std::size_t pos = 0;
  std::string leaf;
  for (;;) {
    const auto dot = path.find('.', pos);
    const std::string part = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (part.empty()) throw config_error("override has empty path segment: " + assignment);
    if (dot == std::string::npos) {
      leaf = part;
      break;
    }
    if (!node->contains(part))
      throw config_error("override path not in config: " + path);
    node = &(*node)[part];
    pos = dot + 1;
  }
  if (!node->is_object() || !node->contains(leaf))
    throw config_error("override path not in config: " + path);

  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded() || value.is_object() || value.is_array())
    value = raw;  // treat as plain string (e.g. init=kmeans++)
  nlohmann::json& old = (*node)[leaf];
  const bool both_number = old.is_number() && value.is_number();
  if (!both_number && old.type() != value.type())
    throw config_error("override value type mismatch for " + path);
  old = value;
}

std::string config_digest(const ExperimentConfig& cfg) {
  const std::string dump = config_to_json(cfg).dump();
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw io_error("cannot open " + tmp + " for writing");
    out << content;
    if (!out) throw io_error("write failed for " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw io_error("rename failed for " + path + ": " + ec.message());
}

void write_json_atomic(const std::string& path, const nlohmann::json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& X) {
  std::string out;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (j) out += ',';
    out += "x" + std::to_string(j);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (j) out += ',';
      out += fmt_double(X(i, j));
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw parse_error(path + ":1: missing header");
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw parse_error(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw parse_error(path + ":" + std::to_string(lineno) + ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw parse_error(path + ":1: no data rows");
  Eigen::MatrixXd X(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j) X(i, j) = rows[i][j];
  return X;
}

nlohmann::json cmd_gen(const ExperimentConfig& cfg, const std::string& dir) {
  cfg.validate();
  fs::create_directories(dir);

  WorldConfig wc{cfg.master_seed, cfg.d, cfg.K, cfg.l, cfg.sigma, cfg.mean_scale, cfg.b_scale};
  const World world = make_gaussian_world(wc);

  const MixtureSample aux =
      sample_mixture(world.spec, cfg.n_aux, rng::stream(cfg.master_seed, "gen.aux"));
  const CodeMatrix aux_clean = world.oracle.hash_batch(aux.X);
  const CodeMatrix aux_codes =
      flip_bits(aux_clean, cfg.aux_flip_prob, rng::stream(cfg.master_seed, "gen.flip"));

  const MixtureSample priv =
      sample_mixture(world.spec, cfg.n_priv, rng::stream(cfg.master_seed, "gen.priv"));
  const CodeMatrix priv_codes = world.oracle.hash_batch(priv.X);

  const CodeMatrix gt = ground_truth_centers(world.oracle, world.spec,
                                             cfg.gt_samples_per_class,
                                             rng::stream(cfg.master_seed, "gen.gt"));

  const double purity_aux =
      static_cast<double>(classify_purity_count(aux_codes, aux.labels, gt)) / cfg.n_aux;
  const double purity_priv =
      static_cast<double>(classify_purity_count(priv_codes, priv.labels, gt)) / cfg.n_priv;

  const std::string digest = config_digest(cfg);
  write_json_atomic(dir + "/config.json", config_to_json(cfg));
  nlohmann::json wj = world_to_json(world);
  wj["config_digest"] = digest;
  write_json_atomic(dir + "/world.json", wj);
  write_codes(dir + "/aux.codes", aux_codes);
  write_labels(dir + "/aux.labels", aux.labels);
  write_matrix_csv(dir + "/aux_x.csv", aux.X);
  write_codes(dir + "/priv.codes", priv_codes);
  write_labels(dir + "/priv.labels", priv.labels);
  write_codes(dir + "/centers_gt.codes", gt);

  nlohmann::json report{{"config_digest", digest},
                        {"n_aux", cfg.n_aux},
                        {"n_priv", cfg.n_priv},
                        {"purity_aux", purity_aux},
                        {"purity_priv", purity_priv},
                        {"oracle_queries", world.oracle.queries()}};
  write_json_atomic(dir + "/gen_report.json", report);
  return report;
}

nlohmann::json cmd_estimate(const ExperimentConfig& cfg, const std::string& dir) {
  cfg.validate();
  const CodeMatrix aux = read_codes(dir + "/aux.codes");
  const CodeMatrix gt = read_codes(dir + "/centers_gt.codes");
  if (aux.length() != gt.length())
    throw input_error("cmd_estimate: aux and ground-truth code lengths differ");
  if (gt.rows() != static_cast<std::uint32_t>(cfg.K))
    throw input_error("cmd_estimate: ground-truth center count does not match config K");

  const CodeMatrix rand_centers =
      random_codes(cfg.K, aux.length(), rng::stream(cfg.master_seed, "estimate.random"));
  KMeansConfig km{cfg.K, cfg.kmeans_max_iters, cfg.kmeans_init,
                  rng::stream(cfg.master_seed, "estimate.kmeans")};
  const CenterEstimate est = estimate_centers(aux, km, cfg.slice);

  const AlignmentReport a_rand = align_centers(rand_centers, gt);
  const AlignmentReport a_km = align_centers(est.kmeans_centers, gt);
  const AlignmentReport a_ours = align_centers(est.centers, gt);

  write_codes(dir + "/centers_random.codes", rand_centers);
  write_codes(dir + "/centers_kmeans.codes", est.kmeans_centers);
  write_codes(dir + "/centers_ours.codes", est.centers);
  write_json_atomic(dir + "/alignment_random.json", alignment_to_json(a_rand));
  write_json_atomic(dir + "/alignment_kmeans.json", alignment_to_json(a_km));
  write_json_atomic(dir + "/alignment_ours.json", alignment_to_json(a_ours));
  write_text_atomic(dir + "/alignment_random.csv", alignment_to_csv(a_rand));
  write_text_atomic(dir + "/alignment_kmeans.csv", alignment_to_csv(a_km));
  write_text_atomic(dir + "/alignment_ours.csv", alignment_to_csv(a_ours));

  auto method_row = [](const AlignmentReport& a) {
    std::uint32_t mx = 0;
    for (auto d : a.per_center) mx = std::max(mx, d);
    return nlohmann::json{{"mean_distance", a.mean_distance},
                          {"exact_matches", a.exact_matches},
                          {"max_distance", mx}};
  };
  nlohmann::json report{{"config_digest", config_digest(cfg)},
                        {"methods",
                         {{"random", method_row(a_rand)},
                          {"kmeans", method_row(a_km)},
                          {"ours", method_row(a_ours)}}},
                        {"kmeans_iterations", est.kmeans.iterations},
                        {"kmeans_converged", est.kmeans.converged},
                        {"kmeans_degenerate", est.kmeans.degenerate}};
  write_json_atomic(dir + "/estimate_report.json", report);

  std::string csv = "method,mean_distance,exact_matches,max_distance\n";
  for (const auto& [name, a] : std::vector<std::pair<std::string, const AlignmentReport*>>{
           {"random", &a_rand}, {"kmeans", &a_km}, {"ours", &a_ours}}) {
    std::uint32_t mx = 0;
    for (auto d : a->per_center) mx = std::max(mx, d);
    csv += name + "," + fmt_double(a->mean_distance) + "," +
           std::to_string(a->exact_matches) + "," + std::to_string(mx) + "\n";
  }
  write_text_atomic(dir + "/estimate_summary.csv", csv);
  return report;
}

nlohmann::json cmd_attack(const ExperimentConfig& cfg, const std::string& dir) {
  cfg.validate();
  nlohmann::json wj;
  try {
    wj = nlohmann::json::parse(read_text(dir + "/world.json"));
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(dir + "/world.json: " + e.what());
  }
  const World world = world_from_json(wj);
  const CodeMatrix aux = read_codes(dir + "/aux.codes");
  const std::vector<int> aux_labels = read_labels(dir + "/aux.labels");
  const Eigen::MatrixXd aux_X = read_matrix_csv(dir + "/aux_x.csv");
  CodeMatrix centers;
  try {
    centers = read_codes(dir + "/centers_ours.codes");
  } catch (const io_error&) {
    throw state_error("cmd_attack: centers_ours.codes missing — run estimate first");
  }
  if (aux.rows() != aux_labels.size() || aux.rows() != static_cast<std::uint32_t>(aux_X.rows()))
    throw input_error("cmd_attack: aux codes/labels/features row mismatch");

  const std::vector<int> pseudo = assign_pseudo_labels(aux, centers);
  const int K = static_cast<int>(centers.rows());

  // Majority true component per pseudo-class (conditioning the generative
  // prior on the component the pseudo-class mostly came from).
  std::vector<int> comp_of(K);
  for (int i = 0; i < K; ++i) {
    std::vector<int> counts(world.spec.K, 0);
    bool any = false;
    for (std::uint32_t r = 0; r < aux.rows(); ++r) {
      if (pseudo[r] == i) {
        ++counts[aux_labels[r]];
        any = true;
      }
    }
    if (!any) {
      comp_of[i] = i % world.spec.K;
      continue;
    }
    int best = 0;
    for (int c = 1; c < world.spec.K; ++c)
      if (counts[c] > counts[best]) best = c;
    comp_of[i] = best;
  }

  SurrogateCluster cluster;
  for (int j = 0; j < cfg.surrogate_count; ++j)
    cluster.push_back(train_surrogate(aux_X, pseudo, K, cfg.surrogate_epochs, cfg.surrogate_lr,
                                      rng::mix(rng::stream(cfg.master_seed, "attack.surrogate"),
                                               static_cast<std::uint64_t>(j))));
  double sur_acc = 0.0;
  for (const auto& s : cluster) {
    int hits = 0;
    for (std::uint32_t r = 0; r < aux.rows(); ++r) {
      Eigen::Index arg;
      s.predict_proba(aux_X.row(r).transpose()).maxCoeff(&arg);
      if (static_cast<int>(arg) == pseudo[r]) ++hits;
    }
    sur_acc += static_cast<double>(hits) / aux.rows();
  }
  sur_acc /= cluster.size();

  const DiffusionSchedule sched = build_schedule(cfg.T, cfg.beta_start, cfg.beta_end);
  const MixturePredictor pred(world.spec, sched);
  const GuidanceConfig guid{cfg.omega, cfg.checkpoint_N};
  AttackConfig acfg = cfg.attack;
  acfg.seed = rng::stream(cfg.master_seed, "attack");

  world.oracle.reset_queries();
  std::vector<TargetInversion> results;
  results.reserve(K);
  for (int i = 0; i < K; ++i)
    results.push_back(invert_center(centers.get(i), i, comp_of[i], cluster, pred, sched,
                                    guid, world.oracle, centers, acfg));
  const std::uint64_t actual = world.oracle.queries();
  const std::uint64_t expected = static_cast<std::uint64_t>(K) * attack_budget(acfg);
  if (actual != expected)
    throw internal_error("cmd_attack: oracle budget mismatch: used " + std::to_string(actual) +
                         ", closed form " + std::to_string(expected));

  const AttackMetrics metrics = evaluate_attack(results, centers);

  nlohmann::json per_target = nlohmann::json::array();
  for (const auto& r : results) {
    double best = 0.0, best0 = 0.0;
    int matches = 0, matches0 = 0;
    const BitCode target = centers.get(r.target_index);
    for (const auto& c : r.candidates) {
      best = std::max(best, c.score);
      best0 = std::max(best0, c.initial_score);
      if (c.code == target) ++matches;
      if (c.initial_code == target) ++matches0;
    }
    per_target.push_back({{"target", r.target_index},
                          {"comp", comp_of[r.target_index]},
                          {"initial_best_score", best0},
                          {"best_score", best},
                          {"accepts", r.accepts},
                          {"initial_matches", matches0},
                          {"matches", matches},
                          {"queries", r.queries}});
  }

  nlohmann::json report{{"config_digest", config_digest(cfg)},
                        {"queries", {{"actual", actual}, {"expected", expected}}},
                        {"surrogate_accuracy", sur_acc},
                        {"metrics",
                         {{"candidate_match_rate", metrics.candidate_match_rate},
                          {"initial_match_rate", metrics.initial_match_rate},
                          {"target_match_rate", metrics.target_match_rate},
                          {"mean_best_score", metrics.mean_best_score},
                          {"mean_initial_best_score", metrics.mean_initial_best_score},
                          {"mean_hamming", metrics.mean_hamming},
                          {"total_accepts", metrics.total_accepts}}},
                        {"per_target", per_target}};
  write_json_atomic(dir + "/attack_report.json", report);

  std::string csv =
      "target,comp,initial_best_score,best_score,accepts,initial_matches,matches,queries\n";
  for (const auto& row : per_target) {
    csv += std::to_string(row.at("target").get<int>()) + "," +
           std::to_string(row.at("comp").get<int>()) + "," +
           fmt_double(row.at("initial_best_score").get<double>()) + "," +
           fmt_double(row.at("best_score").get<double>()) + "," +
           std::to_string(row.at("accepts").get<int>()) + "," +
           std::to_string(row.at("initial_matches").get<int>()) + "," +
           std::to_string(row.at("matches").get<int>()) + "," +
           std::to_string(row.at("queries").get<std::uint64_t>()) + "\n";
  }
  write_text_atomic(dir + "/attack_summary.csv", csv);
  return report;
}

nlohmann::json cmd_sweep(const ExperimentConfig& cfg, const std::string& param,
                         const std::vector<std::string>& values, const std::string& dir) {
  cfg.validate();
  if (values.empty()) throw input_error("cmd_sweep: need at least one value");
  fs::create_directories(dir);
  const bool run_attack = param.rfind("attack.", 0) == 0 || param.rfind("diffusion.", 0) == 0 ||
                          param.rfind("surrogates.", 0) == 0;

  nlohmann::json rows = nlohmann::json::array();
  std::string csv =
      "param,value,random_mean,kmeans_mean,ours_mean,initial_match_rate,match_rate,accepts\n";
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    nlohmann::json cj = config_to_json(cfg);
    apply_override(cj, param + "=" + values[vi]);
    const ExperimentConfig sub = config_from_json(cj);
    char sub_name[32];
    std::snprintf(sub_name, sizeof(sub_name), "run_%02zu", vi);
    const std::string sub_dir = dir + "/" + sub_name;
    cmd_gen(sub, sub_dir);
    const nlohmann::json est = cmd_estimate(sub, sub_dir);
    nlohmann::json value = nlohmann::json::parse(values[vi], nullptr, false);
    if (value.is_discarded()) value = values[vi];
    nlohmann::json row{{"param", param},
                       {"value", value},
                       {"dir", sub_name},
                       {"estimate",
                        {{"random_mean", est.at("methods").at("random").at("mean_distance")},
                         {"kmeans_mean", est.at("methods").at("kmeans").at("mean_distance")},
                         {"ours_mean", est.at("methods").at("ours").at("mean_distance")}}}};
    std::string attack_cells = ",,";
    if (run_attack) {
      const nlohmann::json atk = cmd_attack(sub, sub_dir);
      row["attack"] = {{"initial_match_rate", atk.at("metrics").at("initial_match_rate")},
                       {"match_rate", atk.at("metrics").at("candidate_match_rate")},
                       {"accepts", atk.at("metrics").at("total_accepts")}};
      attack_cells = fmt_double(atk.at("metrics").at("initial_match_rate").get<double>()) + "," +
                     fmt_double(atk.at("metrics").at("candidate_match_rate").get<double>()) + "," +
                     std::to_string(atk.at("metrics").at("total_accepts").get<int>());
    }
    csv += param + "," + values[vi] + "," +
           fmt_double(row.at("estimate").at("random_mean").get<double>()) + "," +
           fmt_double(row.at("estimate").at("kmeans_mean").get<double>()) + "," +
           fmt_double(row.at("estimate").at("ours_mean").get<double>()) + "," + attack_cells +
           "\n";
    rows.push_back(std::move(row));
  }
  nlohmann::json report{{"config_digest", config_digest(cfg)}, {"param", param}, {"rows", rows}};
  write_json_atomic(dir + "/sweep_report.json", report);
  write_text_atomic(dir + "/sweep_summary.csv", csv);
  return report;
}

nlohmann::json cmd_report(const std::vector<std::string>& run_dirs, const std::string& dir) {
  if (run_dirs.empty()) throw input_error("cmd_report: need at least one run dir");
  std::vector<std::string> dirs = run_dirs;
  std::sort(dirs.begin(), dirs.end(), [](const std::string& a, const std::string& b) {
    const std::string ba = fs::path(a).filename().string();
    const std::string bb = fs::path(b).filename().string();
    return ba != bb ? ba < bb : a < b;
  });
  fs::create_directories(dir);

  nlohmann::json runs = nlohmann::json::array();
  const std::vector<std::string> methods{"random", "kmeans", "ours"};
  std::map<std::string, double> mean_sum;
  std::map<std::string, double> exact_sum;
  std::map<std::string, std::map<std::string, std::int64_t>> hist;
  double imr = 0, cmr = 0, tmr = 0;
  int attack_runs = 0;
  int estimate_runs = 0;

  for (const auto& rd : dirs) {
    nlohmann::json run{{"dir", fs::path(rd).filename().string()}};
    const std::string est_path = rd + "/estimate_report.json";
    if (fs::exists(est_path)) {
      nlohmann::json est;
      try {
        est = nlohmann::json::parse(read_text(est_path));
      } catch (const nlohmann::json::exception& e) {
        throw parse_error(est_path + ": " + e.what());
      }
      ++estimate_runs;
      run["estimate"] = est.at("methods");
      for (const auto& m : methods) {
        mean_sum[m] += est.at("methods").at(m).at("mean_distance").get<double>();
        exact_sum[m] += est.at("methods").at(m).at("exact_matches").get<double>();
        const std::string ap = rd + "/alignment_" + m + ".json";
        if (fs::exists(ap)) {
          nlohmann::json a = nlohmann::json::parse(read_text(ap));
          for (const auto& [dstr, cnt] : a.at("histogram").items())
            hist[m][dstr] += cnt.get<std::int64_t>();
        }
      }
    }
    const std::string atk_path = rd + "/attack_report.json";
    if (fs::exists(atk_path)) {
      nlohmann::json atk;
      try {
        atk = nlohmann::json::parse(read_text(atk_path));
      } catch (const nlohmann::json::exception& e) {
        throw parse_error(atk_path + ": " + e.what());
      }
      ++attack_runs;
      run["attack"] = atk.at("metrics");
      imr += atk.at("metrics").at("initial_match_rate").get<double>();
      cmr += atk.at("metrics").at("candidate_match_rate").get<double>();
      tmr += atk.at("metrics").at("target_match_rate").get<double>();
    }
    if (!run.contains("estimate") && !run.contains("attack"))
      throw input_error("cmd_report: no reports found in " + rd);
    runs.push_back(std::move(run));
  }

  nlohmann::json aggregate;
  if (estimate_runs > 0) {
    nlohmann::json agg_methods;
    for (const auto& m : methods) {
      nlohmann::json hj = nlohmann::json::object();
      for (const auto& [dstr, cnt] : hist[m]) hj[dstr] = cnt;
      agg_methods[m] = {{"mean_distance", mean_sum[m] / estimate_runs},
                        {"exact_matches", exact_sum[m] / estimate_runs},
                        {"histogram", hj}};
    }
    aggregate["methods"] = agg_methods;
  }
  if (attack_runs > 0) {
    aggregate["attack"] = {{"initial_match_rate", imr / attack_runs},
                           {"candidate_match_rate", cmr / attack_runs},
                           {"target_match_rate", tmr / attack_runs}};
  }
  nlohmann::json report{{"runs", runs}, {"aggregate", aggregate}};
  write_json_atomic(dir + "/report.json", report);

  std::string csv = "run,method,mean_distance,exact_matches\n";
  for (const auto& run : runs) {
    if (!run.contains("estimate")) continue;
    for (const auto& m : methods) {
      csv += run.at("dir").get<std::string>() + "," + m + "," +
             fmt_double(run.at("estimate").at(m).at("mean_distance").get<double>()) + "," +
             fmt_double(run.at("estimate").at(m).at("exact_matches").get<double>()) + "\n";
    }
  }
  if (estimate_runs > 0) {
    for (const auto& m : methods) {
      csv += "aggregate," + m + "," + fmt_double(mean_sum[m] / estimate_runs) + "," +
             fmt_double(exact_sum[m] / estimate_runs) + "\n";
    }
  }
  write_text_atomic(dir + "/report.csv", csv);
  return report;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const io_error*>(&e)) return 3;
  if (dynamic_cast<const state_error*>(&e)) return 4;
  if (dynamic_cast<const internal_error*>(&e)) return 4;
  if (dynamic_cast<const config_error*>(&e)) return 2;
  if (dynamic_cast<const input_error*>(&e)) return 2;
  if (dynamic_cast<const parse_error*>(&e)) return 2;
  if (dynamic_cast<const dimension_error*>(&e)) return 2;
  return 4;
}

}  // namespace hashinv
