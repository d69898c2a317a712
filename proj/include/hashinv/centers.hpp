#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hashinv/bitcode.hpp"

// Hash-center estimation from a pile of observed codes: binary k-means
// seeded with D^2 weighting, then a sliding-window refinement pass that
// re-votes each center slice-by-slice over its radius neighborhood.

namespace hashinv {

enum class KMeansInit { kpp, random_rows };

struct KMeansConfig {
  int K = 10;
  int max_iters = 50;
  KMeansInit init = KMeansInit::kpp;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  CodeMatrix centers;
  std::vector<int> assignment;
  std::uint64_t cost = 0;  // sum of hamming distances to assigned centers
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;  // true when two centers ended up identical
};

KMeansResult kmeans_binary(const CodeMatrix& codes, const KMeansConfig& cfg);

struct SliceConfig {
  int s_base = 2;     // slice width in bits
  double r = 0.1;     // neighborhood radius as a fraction of code length
  double o = 0.5;     // slice overlap fraction; stride = max(1, floor(s_base*(1-o)))
};

// Half-open [start, end) windows covering [0, l).
std::vector<std::pair<std::uint32_t, std::uint32_t>> build_slices(std::uint32_t l,
                                                                  const SliceConfig& cfg);

// For every center: take the codes within hamming radius floor(l*r) (at least
// 1), and replace each slice with the plurality sub-pattern of that
// neighborhood; ties pick the lexicographically smallest pattern under
// '+' < '-'. Centers with empty neighborhoods are left unchanged. Later
// (overlapping) slices overwrite earlier ones.
CodeMatrix refine_centers(const CodeMatrix& codes, const CodeMatrix& centers,
                          const SliceConfig& cfg);

struct CenterEstimate {
  CodeMatrix centers;         // refined
  CodeMatrix kmeans_centers;  // pre-refinement
  KMeansResult kmeans;
};

CenterEstimate estimate_centers(const CodeMatrix& codes, const KMeansConfig& km,
                                const SliceConfig& slice);

// Nearest center by hamming distance; ties go to the lowest index.
int classify_by_centers(const BitCode& code, const CodeMatrix& centers);
std::vector<int> assign_pseudo_labels(const CodeMatrix& codes, const CodeMatrix& centers);

// Uniformly random codes (baseline centers).
CodeMatrix random_codes(std::uint32_t n, std::uint32_t l, std::uint64_t seed);

// Synthetic clustering instance with known centers: rows are class centers
// with every bit independently flipped at flip_prob.
struct PlantedCodes {
  CodeMatrix centers;
  CodeMatrix data;
  std::vector<int> labels;
};

PlantedCodes make_planted(int K, std::uint32_t l, std::uint32_t n, double flip_prob,
                          std::uint64_t seed);

}  // namespace hashinv
