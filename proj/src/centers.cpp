#include "hashinv/centers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "hashinv/errors.hpp"
#include "hashinv/kernels.hpp"
#include "hashinv/rng.hpp"

namespace hashinv {

namespace {

std::vector<std::uint32_t> dists_to_row(const CodeMatrix& codes, const std::uint64_t* center) {
  std::vector<std::uint32_t> d(codes.rows());
  const auto fn = kernels::active();
  for (std::uint32_t i = 0; i < codes.rows(); ++i)
    d[i] = fn(codes.row(i), center, codes.stride());
  return d;
}

// D^2-weighted seeding; falls back to uniform when all points coincide with
// an existing seed.
CodeMatrix seed_kpp(const CodeMatrix& codes, int K, rng::Sequence& rs) {
  const std::uint32_t n = codes.rows();
  CodeMatrix centers(K, codes.length());
  const std::uint32_t first = static_cast<std::uint32_t>(rs.below(n));
  centers.set(0, codes.get(first));
  std::vector<double> dmin(n);
  {
    const auto d = dists_to_row(codes, centers.row(0));
    for (std::uint32_t i = 0; i < n; ++i) dmin[i] = d[i];
  }
  for (int c = 1; c < K; ++c) {
    double total = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) total += dmin[i] * dmin[i];
    std::uint32_t pick;
    if (total <= 0.0) {
      pick = static_cast<std::uint32_t>(rs.below(n));
    } else {
      const double u = rs.uniform() * total;  // in (0, total]
      double cum = 0.0;
      pick = n - 1;
      for (std::uint32_t i = 0; i < n; ++i) {
        cum += dmin[i] * dmin[i];
        if (cum >= u) {
          pick = i;
          break;
        }
      }
    }
    centers.set(c, codes.get(pick));
    const auto d = dists_to_row(codes, centers.row(c));
    for (std::uint32_t i = 0; i < n; ++i)
      dmin[i] = std::min(dmin[i], static_cast<double>(d[i]));
  }
  return centers;
}

CodeMatrix seed_random_rows(const CodeMatrix& codes, int K, rng::Sequence& rs) {
  const std::uint32_t n = codes.rows();
  CodeMatrix centers(K, codes.length());
  std::vector<char> used(n, 0);
  for (int c = 0; c < K; ++c) {
    std::uint32_t pick;
    do {
      pick = static_cast<std::uint32_t>(rs.below(n));
    } while (used[pick]);
    used[pick] = 1;
    centers.set(c, codes.get(pick));
  }
  return centers;
}

bool any_duplicate_rows(const CodeMatrix& m) {
  for (std::uint32_t i = 0; i < m.rows(); ++i)
    for (std::uint32_t j = i + 1; j < m.rows(); ++j)
      if (row_distance(m, i, m, j) == 0) return true;
  return false;
}

}  // namespace

KMeansResult kmeans_binary(const CodeMatrix& codes, const KMeansConfig& cfg) {
  const std::uint32_t n = codes.rows();
  if (cfg.K < 1) throw input_error("kmeans_binary: K must be >= 1");
  if (static_cast<std::uint32_t>(cfg.K) > n)
    throw input_error("kmeans_binary: K exceeds number of codes");
  if (cfg.max_iters < 1) throw input_error("kmeans_binary: max_iters must be >= 1");
  const int K = cfg.K;
  const std::uint32_t l = codes.length();

  rng::Sequence rs(rng::stream(cfg.seed, "kmeans.init"));
  CodeMatrix centers = cfg.init == KMeansInit::kpp ? seed_kpp(codes, K, rs)
                                                   : seed_random_rows(codes, K, rs);

  std::vector<int> assign(n, -1);
  std::vector<std::vector<std::uint32_t>> dist(K);
  KMeansResult res;
  res.converged = false;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    for (int k = 0; k < K; ++k) dist[k] = dists_to_row(codes, centers.row(k));
    std::vector<int> next(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      int best = 0;
      std::uint32_t bd = dist[0][i];
      for (int k = 1; k < K; ++k) {
        if (dist[k][i] < bd) {  // strict: ties keep the lowest index
          bd = dist[k][i];
          best = k;
        }
      }
      next[i] = best;
    }
    if (next == assign) {
      res.converged = true;
      break;
    }
    assign = next;

    std::vector<std::uint32_t> size(K, 0);
    std::vector<std::vector<std::uint32_t>> ones(K, std::vector<std::uint32_t>(l, 0));
    for (std::uint32_t i = 0; i < n; ++i) {
      const int k = assign[i];
      ++size[k];
      for (std::uint32_t j = 0; j < l; ++j)
        if (codes.get_bit(i, j)) ++ones[k][j];
    }
    std::vector<char> rescued(n, 0);
    for (int k = 0; k < K; ++k) {
      if (size[k] == 0) {
        // Re-seed with the point farthest from its currently assigned center.
        std::uint32_t best_i = 0;
        std::uint32_t best_d = 0;
        bool found = false;
        for (std::uint32_t i = 0; i < n; ++i) {
          if (rescued[i]) continue;
          const std::uint32_t d = dist[assign[i]][i];
          if (!found || d > best_d) {
            best_d = d;
            best_i = i;
            found = true;
          }
        }
        rescued[best_i] = 1;
        centers.set(k, codes.get(best_i));
        assign[best_i] = k;
        continue;
      }
      // Per-bit majority; a tied bit goes to +1 (bit set).
      for (std::uint32_t j = 0; j < l; ++j)
        centers.set_bit(k, j, 2 * ones[k][j] >= size[k]);
    }
  }
  res.iterations = it;
  res.centers = centers;
  res.assignment = assign;
  res.cost = 0;
  for (std::uint32_t i = 0; i < n; ++i)
    res.cost += kernels::hamming(codes.row(i), centers.row(assign[i]), codes.stride());
  res.degenerate = any_duplicate_rows(centers);
  return res;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> build_slices(std::uint32_t l,
                                                                  const SliceConfig& cfg) {
  if (l < 1) throw input_error("build_slices: l must be >= 1");
  if (cfg.s_base < 1) throw config_error("build_slices: s_base must be >= 1");
  if (cfg.o < 0.0 || cfg.o >= 1.0) throw config_error("build_slices: o must be in [0,1)");
  const std::uint32_t step = std::max<std::uint32_t>(
      1, static_cast<std::uint32_t>(std::floor(cfg.s_base * (1.0 - cfg.o))));
  std::vector<std::pair<std::uint32_t, std::uint32_t>> slices;
  for (std::uint32_t start = 0; start < l; start += step)
    slices.emplace_back(start, std::min<std::uint32_t>(start + cfg.s_base, l));
  return slices;
}

CodeMatrix refine_centers(const CodeMatrix& codes, const CodeMatrix& centers,
                          const SliceConfig& cfg) {
  if (codes.length() != centers.length())
    throw dimension_error("refine_centers: code length mismatch");
  if (cfg.r <= 0.0 || cfg.r > 1.0) throw config_error("refine_centers: r must be in (0,1]");
  const std::uint32_t l = codes.length();
  const auto slices = build_slices(l, cfg);
  const std::uint32_t radius = std::max<std::uint32_t>(
      1, static_cast<std::uint32_t>(std::floor(l * cfg.r)));

  CodeMatrix out = centers;
  for (std::uint32_t c = 0; c < centers.rows(); ++c) {
    const auto d = dists_to_row(codes, centers.row(c));
    std::vector<std::uint32_t> hood;
    for (std::uint32_t i = 0; i < codes.rows(); ++i)
      if (d[i] <= radius) hood.push_back(i);
    if (hood.empty()) continue;
    for (const auto& [a, b] : slices) {
      // Plurality vote over the joint sub-pattern; '+' < '-' in ASCII, so the
      // ordered map's first max-count key is the tie-break winner.
      std::map<std::string, int> votes;
      std::string pat(b - a, '-');
      for (const std::uint32_t i : hood) {
        for (std::uint32_t j = a; j < b; ++j)
          pat[j - a] = codes.get_bit(i, j) ? '+' : '-';
        votes[pat] += 1;
      }
      const std::string* best = nullptr;
      int best_count = 0;
      for (const auto& [p, cnt] : votes) {
        if (cnt > best_count) {
          best_count = cnt;
          best = &p;
        }
      }
      for (std::uint32_t j = a; j < b; ++j)
        out.set_bit(c, j, (*best)[j - a] == '+');
    }
  }
  return out;
}

CenterEstimate estimate_centers(const CodeMatrix& codes, const KMeansConfig& km,
                                const SliceConfig& slice) {
  CenterEstimate est;
  est.kmeans = kmeans_binary(codes, km);
  est.kmeans_centers = est.kmeans.centers;
  est.centers = refine_centers(codes, est.kmeans.centers, slice);
  return est;
}

int classify_by_centers(const BitCode& code, const CodeMatrix& centers) {
  if (centers.rows() == 0) throw input_error("classify_by_centers: no centers");
  const auto d = distances_to(code, centers);
  int best = 0;
  for (std::uint32_t k = 1; k < centers.rows(); ++k)
    if (d[k] < d[best]) best = static_cast<int>(k);
  return best;
}

std::vector<int> assign_pseudo_labels(const CodeMatrix& codes, const CodeMatrix& centers) {
  std::vector<int> labels(codes.rows());
  for (std::uint32_t i = 0; i < codes.rows(); ++i)
    labels[i] = classify_by_centers(codes.get(i), centers);
  return labels;
}

CodeMatrix random_codes(std::uint32_t n, std::uint32_t l, std::uint64_t seed) {
  CodeMatrix m(n, l);
  const std::uint64_t key = rng::stream(seed, "random.codes");
  std::uint64_t ctr = 0;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < l; ++j)
      m.set_bit(i, j, rng::bits_at(key, ctr++) & 1ull);
  return m;
}

PlantedCodes make_planted(int K, std::uint32_t l, std::uint32_t n, double flip_prob,
                          std::uint64_t seed) {
  if (K < 1) throw input_error("make_planted: K must be >= 1");
  if (flip_prob < 0.0 || flip_prob >= 1.0)
    throw input_error("make_planted: flip_prob must be in [0,1)");
  PlantedCodes p;
  p.centers = random_codes(static_cast<std::uint32_t>(K), l, rng::mix(seed, 1));
  p.data = CodeMatrix(n, l);
  p.labels.resize(n);
  const std::uint64_t pick_key = rng::stream(seed, "planted.pick");
  const std::uint64_t flip_key = rng::stream(seed, "planted.flip");
  std::uint64_t fctr = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    const int k = std::min(K - 1, static_cast<int>(rng::uniform_at(pick_key, i) * K));
    p.labels[i] = k;
    for (std::uint32_t j = 0; j < l; ++j) {
      bool bit = p.centers.get_bit(k, j);
      if (rng::uniform_at(flip_key, fctr++) <= flip_prob) bit = !bit;
      p.data.set_bit(i, j, bit);
    }
  }
  return p;
}

}  // namespace hashinv
